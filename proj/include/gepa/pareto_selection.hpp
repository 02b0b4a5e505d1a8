#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "gepa/candidate_pool.hpp"
#include "gepa/random.hpp"

namespace gepa {

struct SelectionOutcome {
  std::size_t selected_index = 0;
  std::set<std::size_t> frontier;
  /// Number of instances on which each frontier member is a surviving best.
  std::map<std::size_t, std::size_t> frequencies;
};

/// Column-wise maximum of a non-empty, rectangular score matrix.
std::vector<double> instance_best(const ScoreMatrix& scores);

/// For each instance, the candidates whose score equals the column maximum.
std::vector<std::set<std::size_t>> instance_pareto_sets(const ScoreMatrix& scores);

/// True when row a is at least row b everywhere and strictly greater once.
bool dominates(const ScoreRow& a, const ScoreRow& b);

/// Repeatedly drops members dominated by another surviving member. Of several
/// members with identical rows only the lowest index survives.
std::set<std::size_t> prune_dominated(const std::set<std::size_t>& candidates, const ScoreMatrix& scores);

/// Instance-wise Pareto selection: frontier = non-dominated union of the
/// per-instance best sets, sampled with probability proportional to how many
/// pruned best sets each member appears in.
SelectionOutcome select_candidate_pareto(const ScoreMatrix& scores, Rng& rng);

/// Greedy ablation: the candidate with the highest mean score.
std::size_t select_candidate_best(const Pool& pool);

enum class SelectionStrategy { Pareto, Best };

}  // namespace gepa
