#include "gepa/run_context.hpp"

namespace gepa {

namespace {

template <typename Execute>
std::vector<InstanceResult> evaluate_each(const std::vector<TaskInstance>& tasks, const RunContext& context,
                                          Execute&& execute) {
  std::vector<InstanceResult> results;
  results.reserve(tasks.size());
  for (const auto& task : tasks) {
    InstanceResult result;
    try {
      Rollout rollout = execute(task);
      result.score = context.metrics.evaluate(context.metric_id, rollout.final_output, task.metadata);
      result.output = std::move(rollout.final_output);
      result.trace = std::move(rollout.trace);
    } catch (const GeneratorError& e) {
      result.trace = e.partial_trace();
      result.failure = e.what();
    }
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace

std::vector<InstanceResult> evaluate_candidate(const SystemProgram& program, const PromptMap& prompts,
                                               const std::vector<TaskInstance>& tasks, const RunContext& context,
                                               RolloutBudget& budget, Purpose purpose, std::int64_t iteration) {
  const auto needed = static_cast<std::int64_t>(tasks.size());
  if (!budget.can_afford(needed)) throw BudgetExhausted(needed, budget.remaining());
  const SystemProgram candidate = apply_candidate(program, prompts);
  const ExecutionContext execution = context.execution();
  return evaluate_each(tasks, context, [&](const TaskInstance& task) {
    return execute_system(candidate, task, execution, budget, purpose, iteration);
  });
}

std::vector<InstanceResult> evaluate_uncharged(const SystemProgram& program, const PromptMap& prompts,
                                               const std::vector<TaskInstance>& tasks, const RunContext& context) {
  const SystemProgram candidate = apply_candidate(program, prompts);
  const ExecutionContext execution = context.execution();
  return evaluate_each(tasks, context,
                       [&](const TaskInstance& task) { return execute_uncharged(candidate, task, execution); });
}

double mean_score(const std::vector<InstanceResult>& results) {
  if (results.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : results) total += r.score;
  return total / static_cast<double>(results.size());
}

}  // namespace gepa
