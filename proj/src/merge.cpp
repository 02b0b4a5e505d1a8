#include "gepa/merge.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "gepa/reflective_mutation.hpp"

namespace gepa {

bool desirable(std::size_t ancestor, std::size_t i, std::size_t j, const Pool& pool) {
  const auto& pa = pool.candidate(ancestor).prompts;
  const auto& pi = pool.candidate(i).prompts;
  const auto& pj = pool.candidate(j).prompts;
  for (const auto& [module, prompt_a] : pa) {
    const auto& prompt_i = pi.at(module);
    const auto& prompt_j = pj.at(module);
    if ((prompt_a == prompt_i && prompt_j != prompt_i) || (prompt_a == prompt_j && prompt_i != prompt_j)) return true;
  }
  return false;
}

std::string_view to_string(MergeBranch branch) {
  switch (branch) {
    case MergeBranch::TakeJ: return "take_j";
    case MergeBranch::TakeI: return "take_i";
    case MergeBranch::BetterOfBoth: return "better_of_both";
    case MergeBranch::Default: return "default";
  }
  return "default";
}

MergeProposal combine(const Pool& pool, std::size_t ancestor, std::size_t i, std::size_t j,
                      const std::vector<double>& aggregate, Rng& rng, std::int64_t iteration) {
  MergeProposal proposal;
  proposal.i = i;
  proposal.j = j;
  proposal.ancestor = ancestor;
  proposal.child.prompts = pool.candidate(ancestor).prompts;
  proposal.child.provenance = MergeOrigin{i, j, ancestor, iteration};

  const auto& pi = pool.candidate(i).prompts;
  const auto& pj = pool.candidate(j).prompts;
  for (auto& [module, prompt] : proposal.child.prompts) {
    const std::string prompt_a = prompt;
    const auto& prompt_i = pi.at(module);
    const auto& prompt_j = pj.at(module);
    MergeBranch branch;
    if (prompt_a == prompt_i && prompt_j != prompt_i) {
      branch = MergeBranch::TakeJ;
      prompt = prompt_j;
    } else if (prompt_a == prompt_j && prompt_i != prompt_j) {
      branch = MergeBranch::TakeI;
      prompt = prompt_i;
    } else if (prompt_i != prompt_j && prompt_j != prompt_a && prompt_i != prompt_a) {
      branch = MergeBranch::BetterOfBoth;
      bool pick_i;
      if (aggregate.at(i) != aggregate.at(j)) {
        pick_i = aggregate.at(i) > aggregate.at(j);
      } else {
        pick_i = rng.uniform_index(2) == 0;
      }
      prompt = pick_i ? prompt_i : prompt_j;
    } else {
      branch = MergeBranch::Default;
      prompt = prompt_i;
    }
    proposal.branches.emplace_back(module, branch);
  }
  return proposal;
}

std::optional<MergeProposal> merge_candidates(const Pool& pool, const std::vector<double>& aggregate, Rng& rng,
                                              MergeAttemptLog& log, std::int64_t iteration) {
  const std::size_t n = pool.size();
  if (n < 3 || log.invocations_used >= log.max_invocations) return std::nullopt;
  if (aggregate.size() != n) throw ShapeMismatch("aggregate scores do not match the pool size");

  for (std::size_t draw = 0; draw < n * n; ++draw) {
    const auto i = static_cast<std::size_t>(rng.uniform_index(n));
    auto j = static_cast<std::size_t>(rng.uniform_index(n - 1));
    if (j >= i) ++j;

    const auto ancestors_i = pool.ancestors(i);
    const auto ancestors_j = pool.ancestors(j);
    if (ancestors_i.count(j) || ancestors_j.count(i)) continue;

    std::vector<std::size_t> common;
    std::set_intersection(ancestors_i.begin(), ancestors_i.end(), ancestors_j.begin(), ancestors_j.end(),
                          std::back_inserter(common));
    for (auto it = common.rbegin(); it != common.rend(); ++it) {
      const std::size_t a = *it;
      const auto key = std::tuple{std::min(i, j), std::max(i, j), a};
      if (log.tried.count(key)) continue;
      if (aggregate[a] > std::min(aggregate[i], aggregate[j])) continue;
      if (!desirable(a, i, j, pool)) continue;
      log.tried.insert(key);
      ++log.invocations_used;
      return combine(pool, a, i, j, aggregate, rng, iteration);
    }
  }
  return std::nullopt;
}

std::int64_t MergeSchedule::default_period(std::int64_t budget, std::size_t minibatch_size,
                                           std::size_t max_invocations) {
  const auto step_floor = static_cast<std::int64_t>(2 * std::max<std::size_t>(minibatch_size, 1));
  const std::int64_t max_iterations = budget / step_floor;
  const auto slots = static_cast<std::int64_t>(max_invocations + 1);
  return std::max<std::int64_t>(1, max_iterations / slots);
}

bool schedule_merge(std::int64_t iteration, const MergeSchedule& schedule, const MergeAttemptLog& log) {
  if (!schedule.enabled) return false;
  if (log.invocations_used >= schedule.max_invocations) return false;
  if (!schedule.iterations.empty()) {
    return std::find(schedule.iterations.begin(), schedule.iterations.end(), iteration) != schedule.iterations.end();
  }
  return schedule.period > 0 && iteration > 0 && iteration % schedule.period == 0;
}

MergeOutcome merge_step(Pool& pool, const SystemProgram& program, const DatasetSplit& datasets,
                        const RunContext& context, RolloutBudget& budget, Rng& rng, MergeAttemptLog& log,
                        std::size_t minibatch_size, std::int64_t iteration) {
  MergeOutcome outcome;
  auto proposal = merge_candidates(pool, pool.aggregate_scores(), rng, log, iteration);
  if (!proposal) return outcome;
  outcome.attempted = true;
  outcome.i = proposal->i;
  outcome.j = proposal->j;
  outcome.ancestor = proposal->ancestor;
  outcome.branches = proposal->branches;

  const auto picks = sample_indices(datasets.d_pareto.size(), minibatch_size, rng);
  std::vector<TaskInstance> minibatch;
  double sum_i = 0.0;
  double sum_j = 0.0;
  for (std::size_t index : picks) {
    minibatch.push_back(datasets.d_pareto[index]);
    sum_i += pool.scores(proposal->i)[index];
    sum_j += pool.scores(proposal->j)[index];
  }
  const double count = static_cast<double>(picks.size());
  outcome.sigma_parents = std::max(sum_i / count, sum_j / count);

  const auto child_results = evaluate_candidate(program, proposal->child.prompts, minibatch, context, budget,
                                                Purpose::MinibatchReeval, iteration);
  double sum_child = 0.0;
  for (const auto& r : child_results) sum_child += r.score;
  outcome.sigma_child = sum_child / count;
  if (!(outcome.sigma_child > outcome.sigma_parents)) return outcome;

  const auto pareto = evaluate_candidate(program, proposal->child.prompts, datasets.d_pareto, context, budget,
                                         Purpose::ParetoEval, iteration);
  ScoreRow row;
  std::vector<FieldMap> outputs;
  for (const auto& r : pareto) {
    row.push_back(r.score);
    outputs.push_back(r.output);
  }
  outcome.child_index =
      pool.add_candidate(std::move(proposal->child), {proposal->i, proposal->j}, std::move(row), std::move(outputs));
  outcome.accepted = true;
  return outcome;
}

}  // namespace gepa
