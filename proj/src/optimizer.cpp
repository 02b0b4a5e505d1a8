#include "gepa/optimizer.hpp"

#include <stdexcept>

namespace gepa {

std::string_view to_string(SelectionStrategy strategy) {
  return strategy == SelectionStrategy::Pareto ? "pareto" : "best";
}

SelectionStrategy strategy_from_string(std::string_view text) {
  if (text == "pareto") return SelectionStrategy::Pareto;
  if (text == "best") return SelectionStrategy::Best;
  throw ConfigError("unknown selection strategy '" + std::string(text) + "'");
}

std::string_view to_string(StepAction action) { return action == StepAction::Mutation ? "mutation" : "merge"; }

StepAction action_from_string(std::string_view text) {
  if (text == "mutation") return StepAction::Mutation;
  if (text == "merge") return StepAction::Merge;
  throw std::invalid_argument("unknown step action '" + std::string(text) + "'");
}

void GepaConfig::validate(std::size_t pareto_size) const {
  if (minibatch_size == 0) throw ConfigError("minibatch_size must be >= 1");
  if (pareto_size == 0) throw ConfigError("the Pareto set is empty");
  if (budget < static_cast<std::int64_t>(pareto_size))
    throw ConfigError("budget " + std::to_string(budget) + " cannot cover the seed evaluation on " +
                      std::to_string(pareto_size) + " Pareto instances");
  if (metric_id.empty()) throw ConfigError("metric_id is required");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
  if (task_temperature < 0 || reflection_temperature < 0) throw ConfigError("temperatures must be >= 0");
}

namespace {

RunContext make_context(const RunState& state, const Registries& registries, const Generators& generators) {
  return RunContext{registries.controllers,
                    registries.metrics,
                    generators.task,
                    generators.reflection,
                    state.config.metric_id,
                    ExecutionOptions{state.config.task_temperature, state.config.max_tokens},
                    state.config.reflection_model,
                    ExecutionOptions{state.config.reflection_temperature, state.config.max_tokens}};
}

MergeSchedule schedule_of(const GepaConfig& config) {
  MergeSchedule schedule;
  schedule.enabled = config.merge_enabled;
  schedule.max_invocations = config.max_merge_invocations;
  schedule.iterations = config.merge_iterations;
  schedule.period =
      MergeSchedule::default_period(config.budget, config.minibatch_size, config.max_merge_invocations);
  return schedule;
}

double best_mean(const Pool& pool) { return pool.aggregate_score(pool.best_by_average()); }

}  // namespace

RunState initialize_run(const GepaConfig& config, const SystemProgram& program, DatasetSplit datasets,
                        const Registries& registries, const Generators& generators, bool inference_mode) {
  program.validate();
  if (!registries.controllers.contains(program.controller_id)) throw ConfigError("unknown controller '" + program.controller_id + "'");
  if (!registries.metrics.contains(config.metric_id)) throw ConfigError("unknown metric '" + config.metric_id + "'");
  config.validate(datasets.d_pareto.size());
  if (datasets.d_feedback.empty()) throw ConfigError("the feedback set is empty");

  RunState state;
  state.config = config;
  state.config.n_pareto = datasets.d_pareto.size();
  state.program = program;
  state.datasets = std::move(datasets);
  state.inference_mode = inference_mode;
  state.pool = Pool(state.datasets.d_pareto.size());
  state.budget = RolloutBudget(config.budget);
  state.merge_log.max_invocations = config.max_merge_invocations;
  state.rng = Rng(config.rng_seed);

  const RunContext context = make_context(state, registries, generators);
  const PromptMap seed = program.prompts();
  const auto results =
      evaluate_candidate(program, seed, state.datasets.d_pareto, context, state.budget, Purpose::InitialEval, 0);
  ScoreRow row;
  std::vector<FieldMap> outputs;
  for (const auto& r : results) {
    row.push_back(r.score);
    outputs.push_back(r.output);
  }
  state.pool.add_candidate(Candidate{seed, SeedOrigin{}}, {}, std::move(row), std::move(outputs));
  return state;
}

void continue_run(RunState& state, const Registries& registries, const Generators& generators,
                  const RunOptions& options) {
  if (options.on_checkpoint && state.history.empty() && state.next_iteration == 1) options.on_checkpoint(state);
  const RunContext context = make_context(state, registries, generators);
  const MergeSchedule schedule = schedule_of(state.config);
  const auto b = static_cast<std::int64_t>(state.config.minibatch_size);
  const auto worst_case = 2 * b + static_cast<std::int64_t>(state.datasets.d_pareto.size());
  const MutationSettings settings{state.config.minibatch_size, state.config.capture_meta_prompts};

  while (!state.finished) {
    if (options.stop_after_iterations && static_cast<std::int64_t>(state.history.size()) >= *options.stop_after_iterations)
      return;
    if (!state.budget.can_afford(worst_case)) {
      state.finished = true;
      break;
    }
    const std::int64_t iteration = state.next_iteration;
    IterationRecord record;
    record.iteration = iteration;

    bool merged = false;
    if (state.pool.size() >= 3 && schedule_merge(iteration, schedule, state.merge_log)) {
      const MergeOutcome outcome = merge_step(state.pool, state.program, state.datasets, context, state.budget,
                                              state.rng, state.merge_log, state.config.minibatch_size, iteration);
      if (outcome.attempted) {
        merged = true;
        record.action = StepAction::Merge;
        record.accepted = outcome.accepted;
        record.parent = outcome.i;
        record.second_parent = outcome.j;
        record.child = outcome.child_index;
        record.sigma_before = outcome.sigma_parents;
        record.sigma_after = outcome.sigma_child;
        if (options.on_merge) options.on_merge(outcome, iteration);
      }
    }

    if (!merged) {
      std::size_t parent = 0;
      if (state.config.strategy == SelectionStrategy::Pareto) {
        parent = select_candidate_pareto(state.pool.score_matrix(), state.rng).selected_index;
      } else {
        parent = select_candidate_best(state.pool);
      }
      const MutationOutcome outcome = mutate_step(state.pool, parent, state.program, state.datasets, context,
                                                  state.budget, state.rng, state.round_robin, settings, iteration);
      record.action = StepAction::Mutation;
      record.accepted = outcome.accepted;
      record.parent = parent;
      record.child = outcome.child_index;
      record.target_module = outcome.target_module;
      record.sigma_before = outcome.sigma_before;
      record.sigma_after = outcome.sigma_after;
      record.abandoned = outcome.abandoned;
      if (options.on_mutation) options.on_mutation(outcome, iteration);
    }

    record.rollouts_consumed_total = state.budget.consumed();
    record.best_mean_so_far = best_mean(state.pool);
    state.history.push_back(std::move(record));
    state.next_iteration = iteration + 1;
    if (options.on_checkpoint) options.on_checkpoint(state);
  }
  if (options.on_checkpoint) options.on_checkpoint(state);
}

RunResult result_of(RunState state) {
  RunResult result;
  result.best_index = state.pool.best_by_average();
  result.best = state.pool.candidate(result.best_index);
  result.state = std::move(state);
  return result;
}

RunResult run_gepa(const GepaConfig& config, const SystemProgram& program, DatasetSplit datasets,
                   const Registries& registries, const Generators& generators, const RunOptions& options) {
  RunState state = initialize_run(config, program, std::move(datasets), registries, generators);
  continue_run(state, registries, generators, options);
  return result_of(std::move(state));
}

RunResult run_gepa(const GepaConfig& config, const SystemProgram& program, const std::vector<TaskInstance>& d_train,
                   const Registries& registries, const Generators& generators, const RunOptions& options) {
  if (config.n_pareto == 0 || config.n_pareto >= d_train.size())
    throw ConfigError("n_pareto must leave at least one feedback instance (use inference-time search to share them)");
  return run_gepa(config, program, split_dataset(d_train, config.n_pareto, config.rng_seed), registries, generators,
                  options);
}

std::vector<TaskReport> harvest_frontier(const Pool& pool) {
  std::vector<TaskReport> reports;
  for (std::size_t i = 0; i < pool.n_instances(); ++i) {
    TaskReport report;
    report.task_index = i;
    report.best_score = pool.scores(0)[i];
    for (std::size_t k = 1; k < pool.size(); ++k) {
      if (pool.scores(k)[i] > report.best_score) {
        report.best_score = pool.scores(k)[i];
        report.candidate_index = k;
      }
    }
    const auto& outputs = pool.outputs(report.candidate_index);
    if (!outputs.empty()) report.output = outputs[i];
    reports.push_back(std::move(report));
  }
  return reports;
}

InferenceResult run_inference_time_search(GepaConfig config, const SystemProgram& program,
                                          const std::vector<TaskInstance>& tasks, const Registries& registries,
                                          const Generators& generators, const RunOptions& options) {
  config.n_pareto = tasks.size();
  RunState state = initialize_run(config, program, inference_time_split(tasks), registries, generators, true);
  continue_run(state, registries, generators, options);
  InferenceResult result;
  result.reports = harvest_frontier(state.pool);
  result.state = std::move(state);
  return result;
}

}  // namespace gepa
