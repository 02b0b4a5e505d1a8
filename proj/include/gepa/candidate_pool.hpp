#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "gepa/compound_system.hpp"

namespace gepa {

struct SeedOrigin {
  bool operator==(const SeedOrigin&) const = default;
};

struct MutationOrigin {
  std::size_t parent = 0;
  std::string module_id;
  std::int64_t iteration = 0;

  bool operator==(const MutationOrigin&) const = default;
};

struct MergeOrigin {
  std::size_t parent_i = 0;
  std::size_t parent_j = 0;
  std::size_t ancestor = 0;
  std::int64_t iteration = 0;

  bool operator==(const MergeOrigin&) const = default;
};

using Provenance = std::variant<SeedOrigin, MutationOrigin, MergeOrigin>;

/// One instruction assignment for every module, plus where it came from.
struct Candidate {
  PromptMap prompts;
  Provenance provenance = SeedOrigin{};

  bool operator==(const Candidate&) const = default;
};

using ScoreRow = std::vector<double>;
using ScoreMatrix = std::vector<ScoreRow>;

/// Append-only store of candidates, their parent links and their scores on
/// the Pareto instances. Indices are insertion positions; every parent index
/// is smaller than its child's index.
class Pool {
 public:
  explicit Pool(std::size_t n_instances = 0) : n_instances_(n_instances) {}

  /// Throws ShapeMismatch for a row of the wrong length or with scores
  /// outside [0,1], and std::out_of_range for parents that do not precede
  /// the new index. `outputs`, when non-empty, must match the row length.
  std::size_t add_candidate(Candidate candidate, std::vector<std::size_t> parents, ScoreRow pareto_row,
                            std::vector<FieldMap> outputs = {});

  std::size_t size() const { return candidates_.size(); }
  bool empty() const { return candidates_.empty(); }
  std::size_t n_instances() const { return n_instances_; }

  const Candidate& candidate(std::size_t k) const { return candidates_.at(k); }
  const std::vector<std::size_t>& parents(std::size_t k) const { return parents_.at(k); }
  const ScoreRow& scores(std::size_t k) const { return scores_.at(k); }
  const ScoreMatrix& score_matrix() const { return scores_; }
  /// System outputs of candidate k on each Pareto instance; may be empty.
  const std::vector<FieldMap>& outputs(std::size_t k) const { return outputs_.at(k); }

  /// Transitive parents of k, excluding k.
  std::set<std::size_t> ancestors(std::size_t k) const;

  /// Arithmetic mean of k's Pareto row.
  double aggregate_score(std::size_t k) const;
  std::vector<double> aggregate_scores() const;

  /// Highest mean Pareto score; ties go to the earliest index.
  std::size_t best_by_average() const;

  /// Candidates that are nobody's parent: one per root-to-leaf lineage.
  std::size_t lineage_count() const;

  bool operator==(const Pool&) const = default;

 private:
  std::size_t n_instances_;
  std::vector<Candidate> candidates_;
  std::vector<std::vector<std::size_t>> parents_;
  ScoreMatrix scores_;
  std::vector<std::vector<FieldMap>> outputs_;
};

/// DOT digraph of the ancestry tree: one node per candidate labeled
/// "<idx>\\nmean=<mean>", one edge per parent link.
std::string ancestry_dot(const Pool& pool);

}  // namespace gepa
