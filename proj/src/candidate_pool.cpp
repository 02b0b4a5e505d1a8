#include "gepa/candidate_pool.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace gepa {

std::size_t Pool::add_candidate(Candidate candidate, std::vector<std::size_t> parents, ScoreRow pareto_row,
                                std::vector<FieldMap> outputs) {
  const std::size_t index = candidates_.size();
  if (pareto_row.size() != n_instances_ || pareto_row.empty())
    throw ShapeMismatch("score row has " + std::to_string(pareto_row.size()) + " entries, expected " +
                        std::to_string(n_instances_));
  for (double s : pareto_row) {
    if (!(s >= 0.0 && s <= 1.0)) throw ShapeMismatch("score " + std::to_string(s) + " outside [0,1]");
  }
  if (!outputs.empty() && outputs.size() != pareto_row.size())
    throw ShapeMismatch("output row length differs from score row length");
  for (std::size_t p : parents) {
    if (p >= index) throw std::out_of_range("parent index " + std::to_string(p) + " does not precede " +
                                            std::to_string(index));
  }
  if (index > 0 && parents.empty()) throw std::invalid_argument("only the seed candidate may have no parents");
  if (index > 0) {
    const auto& seed = candidates_.front().prompts;
    const bool same_keys =
        candidate.prompts.size() == seed.size() &&
        std::equal(candidate.prompts.begin(), candidate.prompts.end(), seed.begin(),
                   [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same_keys) throw ArityMismatch("candidate prompt set differs from the seed's");
  }

  candidates_.push_back(std::move(candidate));
  parents_.push_back(std::move(parents));
  scores_.push_back(std::move(pareto_row));
  outputs_.push_back(std::move(outputs));
  return index;
}

std::set<std::size_t> Pool::ancestors(std::size_t k) const {
  std::set<std::size_t> seen;
  std::vector<std::size_t> stack(parents_.at(k).begin(), parents_.at(k).end());
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    if (!seen.insert(node).second) continue;
    for (std::size_t p : parents_[node]) stack.push_back(p);
  }
  return seen;
}

double Pool::aggregate_score(std::size_t k) const {
  const auto& row = scores_.at(k);
  return std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
}

std::vector<double> Pool::aggregate_scores() const {
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) out.push_back(aggregate_score(k));
  return out;
}

std::size_t Pool::best_by_average() const {
  if (empty()) throw std::out_of_range("best_by_average on an empty pool");
  std::size_t best = 0;
  double best_mean = aggregate_score(0);
  for (std::size_t k = 1; k < size(); ++k) {
    const double mean = aggregate_score(k);
    if (mean > best_mean) {
      best = k;
      best_mean = mean;
    }
  }
  return best;
}

std::size_t Pool::lineage_count() const {
  std::vector<bool> has_child(size(), false);
  for (const auto& ps : parents_) {
    for (std::size_t p : ps) has_child[p] = true;
  }
  return static_cast<std::size_t>(std::count(has_child.begin(), has_child.end(), false));
}

std::string ancestry_dot(const Pool& pool) {
  std::string out = "digraph gepa {\n  node [shape=box];\n";
  char mean[32];
  for (std::size_t k = 0; k < pool.size(); ++k) {
    std::snprintf(mean, sizeof mean, "%.4f", pool.aggregate_score(k));
    out += "  n" + std::to_string(k) + " [label=\"" + std::to_string(k) + "\\nmean=" + mean + "\"];\n";
  }
  for (std::size_t k = 0; k < pool.size(); ++k) {
    for (std::size_t p : pool.parents(k)) {
      out += "  n" + std::to_string(p) + " -> n" + std::to_string(k) + ";\n";
    }
  }
  out += "}\n";
  return out;
}

}  // namespace gepa
