#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gepa/budget.hpp"
#include "gepa/compound_system.hpp"
#include "gepa/evaluation.hpp"
#include "gepa/llm_adapter.hpp"

namespace gepa {

/// Everything a search step needs besides the mutable run state.
struct RunContext {
  const ControllerRegistry& controllers;
  const MetricRegistry& metrics;
  Generator& task_generator;
  Generator& reflection_generator;
  /// Id of the registered metric/feedback pair.
  std::string metric_id;
  ExecutionOptions task_options{};
  std::string reflection_model_id;
  ExecutionOptions reflection_options{};

  ExecutionContext execution() const { return ExecutionContext{task_generator, controllers, task_options}; }
};

struct InstanceResult {
  double score = 0.0;
  FieldMap output;
  ExecutionTrace trace;
  /// Set when the rollout ended in a generator failure (score forced to 0).
  std::string failure;
};

/// Scores one candidate on each task, one charged rollout per task. The full
/// count is checked up front so a short budget charges nothing.
std::vector<InstanceResult> evaluate_candidate(const SystemProgram& program, const PromptMap& prompts,
                                               const std::vector<TaskInstance>& tasks, const RunContext& context,
                                               RolloutBudget& budget, Purpose purpose, std::int64_t iteration);

/// Same as evaluate_candidate but charges no budget.
std::vector<InstanceResult> evaluate_uncharged(const SystemProgram& program, const PromptMap& prompts,
                                               const std::vector<TaskInstance>& tasks, const RunContext& context);

double mean_score(const std::vector<InstanceResult>& results);

}  // namespace gepa
