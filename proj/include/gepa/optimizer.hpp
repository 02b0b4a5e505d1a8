#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gepa/budget.hpp"
#include "gepa/candidate_pool.hpp"
#include "gepa/compound_system.hpp"
#include "gepa/evaluation.hpp"
#include "gepa/merge.hpp"
#include "gepa/pareto_selection.hpp"
#include "gepa/random.hpp"
#include "gepa/reflective_mutation.hpp"

namespace gepa {

struct GepaConfig {
  std::size_t minibatch_size = 3;
  /// Size of the Pareto split when a single training list is given.
  std::size_t n_pareto = 0;
  std::int64_t budget = 0;
  SelectionStrategy strategy = SelectionStrategy::Pareto;
  bool merge_enabled = false;
  std::size_t max_merge_invocations = 5;
  /// Explicit merge iterations; empty selects even spacing.
  std::vector<std::int64_t> merge_iterations;
  std::uint64_t rng_seed = 0;
  std::string task_model;
  std::string reflection_model;
  std::string metric_id;
  double task_temperature = kHostedModelProfile.temperature;
  double reflection_temperature = kHostedModelProfile.temperature;
  int max_tokens = kHostedModelProfile.max_tokens;
  bool capture_meta_prompts = false;

  /// Throws ConfigError for b == 0, a budget that cannot cover the seed
  /// evaluation, or an empty metric id.
  void validate(std::size_t pareto_size) const;

  bool operator==(const GepaConfig&) const = default;
};

std::string_view to_string(SelectionStrategy strategy);
SelectionStrategy strategy_from_string(std::string_view text);

enum class StepAction { Mutation, Merge };
std::string_view to_string(StepAction action);
StepAction action_from_string(std::string_view text);

struct IterationRecord {
  std::int64_t iteration = 0;
  std::int64_t rollouts_consumed_total = 0;
  double best_mean_so_far = 0.0;
  StepAction action = StepAction::Mutation;
  bool accepted = false;
  /// Mutation parent, or the first merge parent.
  std::size_t parent = 0;
  /// Second merge parent; unused for mutations.
  std::optional<std::size_t> second_parent;
  std::optional<std::size_t> child;
  std::string target_module;
  double sigma_before = 0.0;
  double sigma_after = 0.0;
  std::string abandoned;

  bool operator==(const IterationRecord&) const = default;
};

inline constexpr int kStateSchemaVersion = 1;

/// Everything needed to export or resume a run.
struct RunState {
  int schema_version = kStateSchemaVersion;
  GepaConfig config;
  SystemProgram program;
  DatasetSplit datasets;
  bool inference_mode = false;
  Pool pool;
  RolloutBudget budget;
  RoundRobin round_robin;
  MergeAttemptLog merge_log;
  std::vector<IterationRecord> history;
  Rng rng;
  std::int64_t next_iteration = 1;
  bool finished = false;
  /// Caller-owned data carried through save/load (the CLI stores adapter
  /// profiles here).
  nlohmann::json extras = nlohmann::json::object();

  bool operator==(const RunState&) const = default;
};

struct Registries {
  const ControllerRegistry& controllers;
  const MetricRegistry& metrics;
};

struct Generators {
  Generator& task;
  Generator& reflection;
};

struct RunOptions {
  /// Stop (without finishing) once this many loop iterations have run in
  /// total; used to checkpoint and resume.
  std::optional<std::int64_t> stop_after_iterations;
  std::function<void(const MutationOutcome&, std::int64_t iteration)> on_mutation;
  std::function<void(const MergeOutcome&, std::int64_t iteration)> on_merge;
  /// Called after the seed evaluation and after every iteration.
  std::function<void(const RunState&)> on_checkpoint;
};

struct RunResult {
  Candidate best;
  std::size_t best_index = 0;
  RunState state;
};

/// Builds a fresh state and scores the seed on all Pareto instances
/// (charged as initial_eval at iteration 0).
RunState initialize_run(const GepaConfig& config, const SystemProgram& program, DatasetSplit datasets,
                        const Registries& registries, const Generators& generators, bool inference_mode = false);

/// Runs the search loop on an existing state until the budget cannot cover a
/// worst-case step (2b + n_pareto) or the stop limit is reached.
void continue_run(RunState& state, const Registries& registries, const Generators& generators,
                  const RunOptions& options = {});

RunResult run_gepa(const GepaConfig& config, const SystemProgram& program, DatasetSplit datasets,
                   const Registries& registries, const Generators& generators, const RunOptions& options = {});

/// Splits d_train with config.n_pareto and config.rng_seed, then runs.
RunResult run_gepa(const GepaConfig& config, const SystemProgram& program, const std::vector<TaskInstance>& d_train,
                   const Registries& registries, const Generators& generators, const RunOptions& options = {});

RunResult result_of(RunState state);

struct TaskReport {
  std::size_t task_index = 0;
  double best_score = 0.0;
  std::size_t candidate_index = 0;
  FieldMap output;
};

struct InferenceResult {
  std::vector<TaskReport> reports;
  RunState state;
};

/// Per task: the highest score any pool candidate reached and the earliest
/// candidate reaching it.
std::vector<TaskReport> harvest_frontier(const Pool& pool);

/// Searches with every task serving as both feedback and Pareto instance.
InferenceResult run_inference_time_search(GepaConfig config, const SystemProgram& program,
                                          const std::vector<TaskInstance>& tasks, const Registries& registries,
                                          const Generators& generators, const RunOptions& options = {});

}  // namespace gepa
