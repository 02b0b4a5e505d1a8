#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gepa/cli.hpp"

namespace {

void add_run_flags(CLI::App& command, gepa::cli::OptimizeOptions& options, std::optional<std::uint64_t>& seed,
                   std::optional<std::int64_t>& budget, std::optional<std::string>& strategy,
                   std::optional<std::int64_t>& stop_after) {
  command.add_option("--config", options.config_path, "run configuration (JSON)")->required();
  command.add_option("--out", options.out_dir, "output directory")->required();
  command.add_flag("--resume", options.resume, "continue from <out>/run_state.json");
  command.add_option("--seed", seed, "RNG seed");
  command.add_option("--budget", budget, "rollout budget");
  command.add_option("--strategy", strategy, "candidate selection")->check(CLI::IsMember({"pareto", "best"}));
  command.add_flag("--debug-prompts", options.debug_prompts, "record reflection meta-prompts");
  command.add_option("--stop-after", stop_after, "stop after N iterations, leaving the run resumable");
}

void add_merge_flags(CLI::App& command, std::optional<bool>& merge) {
  command.add_flag_callback("--merge", [&merge] { merge = true; }, "enable merge steps");
  command.add_flag_callback("--no-merge", [&merge] { merge = false; }, "disable merge steps");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reflective prompt evolution for compound LLM systems"};
  app.require_subcommand(1);

  gepa::cli::OptimizeOptions optimize;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> budget;
  std::optional<std::string> strategy;
  std::optional<std::int64_t> stop_after;
  std::optional<bool> merge;

  auto* optimize_cmd = app.add_subcommand("optimize", "evolve the prompts of a system");
  add_run_flags(*optimize_cmd, optimize, seed, budget, strategy, stop_after);
  add_merge_flags(*optimize_cmd, merge);

  auto* search_cmd = app.add_subcommand("inference-search", "search per-task outputs on a fixed task set");
  add_run_flags(*search_cmd, optimize, seed, budget, strategy, stop_after);
  add_merge_flags(*search_cmd, merge);

  gepa::cli::EvalOptions eval;
  std::string dataset;
  std::string eval_config;
  std::string traces;
  auto* eval_cmd = app.add_subcommand("eval", "score a stored candidate");
  eval_cmd->add_option("--state", eval.state_path, "run_state.json")->required();
  eval_cmd->add_option("--dataset", dataset, "JSONL dataset (default: the run's Pareto set)");
  eval_cmd->add_option("--candidate", eval.candidate, "'best' or a pool index");
  eval_cmd->add_option("--config", eval_config, "run configuration supplying adapter profiles");
  eval_cmd->add_option("--traces", traces, "write execution traces as JSONL");

  std::string tree_state;
  std::string tree_format = "dot";
  std::string tree_out;
  auto* tree_cmd = app.add_subcommand("export-tree", "write the candidate ancestry tree");
  tree_cmd->add_option("--state", tree_state, "run_state.json")->required();
  tree_cmd->add_option("--format", tree_format, "output format")->check(CLI::IsMember({"dot"}));
  tree_cmd->add_option("--out", tree_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*optimize_cmd || *search_cmd) {
    optimize.seed = seed;
    optimize.budget = budget;
    optimize.merge = merge;
    optimize.stop_after = stop_after;
    if (strategy) optimize.strategy = gepa::strategy_from_string(*strategy);
    return *optimize_cmd ? gepa::cli::cmd_optimize(optimize, std::cout, std::cerr)
                         : gepa::cli::cmd_inference_search(optimize, std::cout, std::cerr);
  }
  if (*eval_cmd) {
    if (!dataset.empty()) eval.dataset_path = dataset;
    if (!eval_config.empty()) eval.config_path = eval_config;
    if (!traces.empty()) eval.traces_path = traces;
    return gepa::cli::cmd_eval(eval, std::cout, std::cerr);
  }
  return gepa::cli::cmd_export_tree(tree_state, tree_format, tree_out, std::cout, std::cerr);
}
