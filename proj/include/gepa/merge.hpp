#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gepa/candidate_pool.hpp"
#include "gepa/evaluation.hpp"
#include "gepa/random.hpp"
#include "gepa/run_context.hpp"

namespace gepa {

/// Bookkeeping for crossover: which (i, j, ancestor) triples were built and
/// how many merge invocations the run has spent.
struct MergeAttemptLog {
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> tried;
  std::size_t invocations_used = 0;
  std::size_t max_invocations = 5;

  bool operator==(const MergeAttemptLog&) const = default;
};

/// True iff some module was changed relative to the ancestor by exactly one
/// of the two descendants.
bool desirable(std::size_t ancestor, std::size_t i, std::size_t j, const Pool& pool);

/// How one module's prompt was chosen for the merged child.
enum class MergeBranch { TakeJ, TakeI, BetterOfBoth, Default };

std::string_view to_string(MergeBranch branch);

struct MergeProposal {
  Candidate child;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t ancestor = 0;
  /// Branch per module, in module-id order of the prompt map.
  std::vector<std::pair<std::string, MergeBranch>> branches;
};

/// Builds the child module by module from the ancestor copy:
///   ancestor == i != j  -> j's prompt
///   ancestor == j != i  -> i's prompt
///   i, j, ancestor all differ -> prompt of the higher aggregate, coin flip on ties
///   otherwise           -> i's prompt
MergeProposal combine(const Pool& pool, std::size_t ancestor, std::size_t i, std::size_t j,
                      const std::vector<double>& aggregate, Rng& rng, std::int64_t iteration);

/// Samples distinct ordered pairs (up to |P|^2 draws) that are not in direct
/// ancestry, then scans their common ancestors newest first, skipping tried
/// triples, ancestors scoring above the weaker descendant, and undesirable
/// triples. Records the used triple. Returns nullopt when nothing qualifies.
std::optional<MergeProposal> merge_candidates(const Pool& pool, const std::vector<double>& aggregate, Rng& rng,
                                              MergeAttemptLog& log, std::int64_t iteration);

struct MergeSchedule {
  bool enabled = false;
  std::size_t max_invocations = 5;
  /// Explicit iterations at which merges are allowed; empty means every
  /// `period`-th iteration.
  std::vector<std::int64_t> iterations;
  std::int64_t period = 1;

  /// Even spacing of max_invocations merges over the largest number of
  /// iterations the budget allows (each step costs at least 2b rollouts).
  static std::int64_t default_period(std::int64_t budget, std::size_t minibatch_size, std::size_t max_invocations);
};

bool schedule_merge(std::int64_t iteration, const MergeSchedule& schedule, const MergeAttemptLog& log);

struct MergeOutcome {
  bool attempted = false;
  bool accepted = false;
  std::optional<std::size_t> child_index;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t ancestor = 0;
  std::vector<std::pair<std::string, MergeBranch>> branches;
  double sigma_parents = 0.0;
  double sigma_child = 0.0;
};

/// One merge step. The admission minibatch is drawn from the Pareto
/// instances, where both parents' scores are already known; only the child
/// is rolled out on it (charged as minibatch_reeval). The child is admitted
/// when its minibatch mean beats the better parent, then scored on every
/// Pareto instance.
MergeOutcome merge_step(Pool& pool, const SystemProgram& program, const DatasetSplit& datasets,
                        const RunContext& context, RolloutBudget& budget, Rng& rng, MergeAttemptLog& log,
                        std::size_t minibatch_size, std::int64_t iteration);

}  // namespace gepa
