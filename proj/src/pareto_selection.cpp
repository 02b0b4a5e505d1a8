#include "gepa/pareto_selection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace gepa {

namespace {

void require_rectangular(const ScoreMatrix& scores) {
  if (scores.empty()) throw std::invalid_argument("score matrix has no candidates");
  for (const auto& row : scores) {
    if (row.size() != scores.front().size()) throw ShapeMismatch("score matrix is not rectangular");
  }
}

}  // namespace

std::vector<double> instance_best(const ScoreMatrix& scores) {
  require_rectangular(scores);
  std::vector<double> best = scores.front();
  for (const auto& row : scores) {
    for (std::size_t i = 0; i < row.size(); ++i) best[i] = std::max(best[i], row[i]);
  }
  return best;
}

std::vector<std::set<std::size_t>> instance_pareto_sets(const ScoreMatrix& scores) {
  const auto best = instance_best(scores);
  std::vector<std::set<std::size_t>> sets(best.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    for (std::size_t i = 0; i < best.size(); ++i) {
      if (scores[k][i] == best[i]) sets[i].insert(k);
    }
  }
  return sets;
}

bool dominates(const ScoreRow& a, const ScoreRow& b) {
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strictly = true;
  }
  return strictly;
}

std::set<std::size_t> prune_dominated(const std::set<std::size_t>& candidates, const ScoreMatrix& scores) {
  std::set<std::size_t> surviving = candidates;
  bool removed = true;
  while (removed) {
    removed = false;
    for (auto it = surviving.begin(); it != surviving.end(); ++it) {
      const std::size_t c = *it;
      const bool beaten = std::any_of(surviving.begin(), surviving.end(), [&](std::size_t other) {
        if (other == c) return false;
        return dominates(scores[other], scores[c]) || (other < c && scores[other] == scores[c]);
      });
      if (beaten) {
        surviving.erase(it);
        removed = true;
        break;
      }
    }
  }
  return surviving;
}

SelectionOutcome select_candidate_pareto(const ScoreMatrix& scores, Rng& rng) {
  const auto sets = instance_pareto_sets(scores);
  std::set<std::size_t> all;
  for (const auto& s : sets) all.insert(s.begin(), s.end());

  SelectionOutcome outcome;
  outcome.frontier = prune_dominated(all, scores);
  for (const auto& s : sets) {
    for (std::size_t k : s) {
      if (outcome.frontier.count(k)) ++outcome.frequencies[k];
    }
  }

  std::size_t total = 0;
  for (const auto& [_, f] : outcome.frequencies) total += f;
  std::uint64_t draw = rng.uniform_index(total);
  for (const auto& [k, f] : outcome.frequencies) {
    if (draw < f) {
      outcome.selected_index = k;
      break;
    }
    draw -= f;
  }
  return outcome;
}

std::size_t select_candidate_best(const Pool& pool) { return pool.best_by_average(); }

}  // namespace gepa
