#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gepa/cli.hpp"
#include "gepa/pareto_selection.hpp"
#include "gepa/reflective_mutation.hpp"
#include "gepa/serialization.hpp"

namespace py = pybind11;

namespace {

struct CommandResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

gepa::cli::OptimizeOptions optimize_options(const std::string& config, const std::string& out, bool resume,
                                            std::optional<std::uint64_t> seed, std::optional<std::int64_t> budget,
                                            std::optional<std::string> strategy, std::optional<bool> merge,
                                            std::optional<std::int64_t> stop_after) {
  gepa::cli::OptimizeOptions o;
  o.config_path = config;
  o.out_dir = out;
  o.resume = resume;
  o.seed = seed;
  o.budget = budget;
  if (strategy) o.strategy = gepa::strategy_from_string(*strategy);
  o.merge = merge;
  o.stop_after = stop_after;
  return o;
}

template <typename Command>
CommandResult capture(Command&& command) {
  std::ostringstream out;
  std::ostringstream err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = command(out, err);
  }
  return CommandResult{code, out.str(), err.str()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reflective prompt evolution core";

  py::register_exception<gepa::Error>(m, "GepaError");

  py::class_<CommandResult>(m, "CommandResult")
      .def_readonly("exit_code", &CommandResult::exit_code)
      .def_readonly("out", &CommandResult::out)
      .def_readonly("err", &CommandResult::err);

  m.def("dominates", &gepa::dominates, py::arg("a"), py::arg("b"));

  m.def(
      "select_pareto",
      [](const gepa::ScoreMatrix& scores, std::uint64_t seed) {
        gepa::Rng rng(seed);
        const auto outcome = gepa::select_candidate_pareto(scores, rng);
        return py::make_tuple(outcome.selected_index, std::vector<std::size_t>(outcome.frontier.begin(), outcome.frontier.end()),
                              outcome.frequencies);
      },
      py::arg("scores"), py::arg("seed") = 0,
      "(selected index, sorted frontier, frequency per frontier member)");

  m.attr("META_PROMPT_TEMPLATE") = std::string(gepa::kMetaPromptTemplate);

  m.def(
      "build_meta_prompt",
      [](const std::string& instruction, const std::vector<py::dict>& records) {
        std::vector<gepa::ReflectiveRecord> rs;
        for (const auto& d : records) {
          gepa::ReflectiveRecord r;
          if (d.contains("task_input")) r.task_input = d["task_input"].cast<gepa::FieldMap>();
          if (d.contains("module_inputs")) r.module_inputs = d["module_inputs"].cast<gepa::FieldMap>();
          if (d.contains("module_output")) r.module_output = d["module_output"].cast<std::string>();
          if (d.contains("score")) r.outcome_score = d["score"].cast<double>();
          if (d.contains("feedback")) r.feedback_text = d["feedback"].cast<std::string>();
          rs.push_back(std::move(r));
        }
        return gepa::build_meta_prompt(instruction, rs);
      },
      py::arg("instruction"), py::arg("records"));

  m.def("extract_last_fenced_block", &gepa::extract_last_fenced_block, py::arg("text"));

  m.def(
      "optimize",
      [](const std::string& config, const std::string& out, bool resume, std::optional<std::uint64_t> seed,
         std::optional<std::int64_t> budget, std::optional<std::string> strategy, std::optional<bool> merge,
         std::optional<std::int64_t> stop_after) {
        const auto o = optimize_options(config, out, resume, seed, budget, strategy, merge, stop_after);
        return capture([&](std::ostream& so, std::ostream& se) { return gepa::cli::cmd_optimize(o, so, se); });
      },
      py::arg("config"), py::arg("out"), py::arg("resume") = false, py::arg("seed") = py::none(),
      py::arg("budget") = py::none(), py::arg("strategy") = py::none(), py::arg("merge") = py::none(),
      py::arg("stop_after") = py::none());

  m.def(
      "inference_search",
      [](const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
         std::optional<std::int64_t> budget) {
        const auto o = optimize_options(config, out, false, seed, budget, std::nullopt, std::nullopt, std::nullopt);
        return capture([&](std::ostream& so, std::ostream& se) { return gepa::cli::cmd_inference_search(o, so, se); });
      },
      py::arg("config"), py::arg("out"), py::arg("seed") = py::none(), py::arg("budget") = py::none());

  m.def(
      "evaluate",
      [](const std::string& state, const std::string& candidate, std::optional<std::string> dataset) {
        gepa::cli::EvalOptions o;
        o.state_path = state;
        o.candidate = candidate;
        if (dataset) o.dataset_path = *dataset;
        const auto report = gepa::cli::evaluate_stored(o);
        return py::make_tuple(report.candidate_index, report.scores, report.mean);
      },
      py::arg("state"), py::arg("candidate") = "best", py::arg("dataset") = py::none(),
      "(candidate index, per-instance scores, mean)");

  m.def(
      "load_state_json", [](const std::string& path) { return gepa::dump_state(gepa::load_state(path)); },
      py::arg("path"));

  m.def(
      "ancestry_dot", [](const std::string& path) { return gepa::ancestry_dot(gepa::load_state(path).pool); },
      py::arg("path"));
}
