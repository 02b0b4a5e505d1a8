#include "gepa/serialization.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace gepa {

using json = nlohmann::json;

namespace {

std::string format_double(double value) {
  std::array<char, 64> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buffer.data(), end);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

template <typename T>
json optional_to(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Program, tasks, traces

json to_json(const SystemProgram& program) {
  json modules = json::array();
  for (const auto& m : program.modules) {
    modules.push_back({{"module_id", m.module_id},
                       {"input_fields", m.input_fields},
                       {"output_fields", m.output_fields},
                       {"instruction", m.instruction}});
  }
  return {{"modules", std::move(modules)}, {"controller_id", program.controller_id}, {"model_id", program.model_id}};
}

SystemProgram program_from_json(const json& j) {
  SystemProgram program;
  for (const auto& m : j.at("modules")) {
    program.modules.push_back({m.at("module_id").get<std::string>(),
                               m.at("input_fields").get<std::vector<std::string>>(),
                               m.at("output_fields").get<std::vector<std::string>>(),
                               m.at("instruction").get<std::string>()});
  }
  program.controller_id = j.value("controller_id", std::string("linear"));
  program.model_id = j.value("model_id", std::string());
  program.validate();
  return program;
}

json to_json(const TaskInstance& task) { return {{"input", task.input}, {"metadata", task.metadata}}; }

TaskInstance task_from_json(const json& j) {
  TaskInstance task;
  task.input = j.at("input").get<FieldMap>();
  task.metadata = j.value("metadata", json::object());
  return task;
}

json to_json(const ModuleInvocationRecord& record) {
  return {{"module_id", record.module_id},           {"rendered_prompt", record.rendered_prompt},
          {"inputs", record.inputs},                 {"raw_output", record.raw_output},
          {"parsed_outputs", record.parsed_outputs}, {"missing_fields", record.missing_fields},
          {"sequence_index", record.sequence_index}};
}

json to_json(const ExecutionTrace& trace) {
  json records = json::array();
  for (const auto& r : trace.records) records.push_back(to_json(r));
  return {{"records", std::move(records)},
          {"final_output", trace.final_output},
          {"rollout_charged", trace.rollout_charged}};
}

// ---------------------------------------------------------------------------
// Candidates and pool

json to_json(const Candidate& candidate) {
  json provenance = std::visit(
      [](const auto& origin) -> json {
        using T = std::decay_t<decltype(origin)>;
        if constexpr (std::is_same_v<T, SeedOrigin>) {
          return {{"kind", "seed"}};
        } else if constexpr (std::is_same_v<T, MutationOrigin>) {
          return {{"kind", "mutation"},
                  {"parent", origin.parent},
                  {"module_id", origin.module_id},
                  {"iteration", origin.iteration}};
        } else {
          return {{"kind", "merge"},
                  {"parent_i", origin.parent_i},
                  {"parent_j", origin.parent_j},
                  {"ancestor", origin.ancestor},
                  {"iteration", origin.iteration}};
        }
      },
      candidate.provenance);
  return {{"prompts", candidate.prompts}, {"provenance", std::move(provenance)}};
}

Candidate candidate_from_json(const json& j) {
  Candidate candidate;
  candidate.prompts = j.at("prompts").get<PromptMap>();
  const json& p = j.at("provenance");
  const auto kind = p.at("kind").get<std::string>();
  if (kind == "seed") {
    candidate.provenance = SeedOrigin{};
  } else if (kind == "mutation") {
    candidate.provenance = MutationOrigin{p.at("parent").get<std::size_t>(), p.at("module_id").get<std::string>(),
                                          p.at("iteration").get<std::int64_t>()};
  } else if (kind == "merge") {
    candidate.provenance = MergeOrigin{p.at("parent_i").get<std::size_t>(), p.at("parent_j").get<std::size_t>(),
                                       p.at("ancestor").get<std::size_t>(), p.at("iteration").get<std::int64_t>()};
  } else {
    throw std::invalid_argument("unknown provenance kind '" + kind + "'");
  }
  return candidate;
}

json to_json(const Pool& pool) {
  json candidates = json::array();
  for (std::size_t k = 0; k < pool.size(); ++k) {
    json c = to_json(pool.candidate(k));
    c["index"] = k;
    c["parents"] = pool.parents(k);
    c["scores"] = pool.scores(k);
    c["outputs"] = pool.outputs(k);
    candidates.push_back(std::move(c));
  }
  return {{"n_instances", pool.n_instances()}, {"candidates", std::move(candidates)}};
}

Pool pool_from_json(const json& j) {
  Pool pool(j.at("n_instances").get<std::size_t>());
  for (const auto& c : j.at("candidates")) {
    pool.add_candidate(candidate_from_json(c), c.at("parents").get<std::vector<std::size_t>>(),
                       c.at("scores").get<ScoreRow>(), c.value("outputs", std::vector<FieldMap>{}));
  }
  return pool;
}

// ---------------------------------------------------------------------------
// Budget, config, history

json to_json(const RolloutBudget& budget) {
  json ledger = json::array();
  for (const auto& e : budget.ledger()) {
    ledger.push_back({{"iteration", e.iteration}, {"purpose", std::string(to_string(e.purpose))}, {"count", e.count}});
  }
  return {{"limit", budget.limit()}, {"consumed", budget.consumed()}, {"ledger", std::move(ledger)}};
}

RolloutBudget budget_from_json(const json& j) {
  std::vector<LedgerEntry> ledger;
  for (const auto& e : j.at("ledger")) {
    ledger.push_back({e.at("iteration").get<std::int64_t>(), purpose_from_string(e.at("purpose").get<std::string>()),
                      e.at("count").get<std::int64_t>()});
  }
  RolloutBudget budget = RolloutBudget::restore(j.at("limit").get<std::int64_t>(), std::move(ledger));
  if (budget.consumed() != j.at("consumed").get<std::int64_t>())
    throw std::invalid_argument("budget ledger does not sum to consumed");
  return budget;
}

json to_json(const GepaConfig& c) {
  return {{"minibatch_size", c.minibatch_size},
          {"n_pareto", c.n_pareto},
          {"budget", c.budget},
          {"selection_strategy", std::string(to_string(c.strategy))},
          {"merge_enabled", c.merge_enabled},
          {"max_merge_invocations", c.max_merge_invocations},
          {"merge_iterations", c.merge_iterations},
          {"rng_seed", c.rng_seed},
          {"task_model", c.task_model},
          {"reflection_model", c.reflection_model},
          {"metric", c.metric_id},
          {"task_temperature", c.task_temperature},
          {"reflection_temperature", c.reflection_temperature},
          {"max_tokens", c.max_tokens},
          {"capture_meta_prompts", c.capture_meta_prompts}};
}

GepaConfig config_from_json(const json& j) {
  GepaConfig c;
  c.minibatch_size = j.value("minibatch_size", c.minibatch_size);
  c.n_pareto = j.value("n_pareto", c.n_pareto);
  c.budget = j.value("budget", c.budget);
  c.strategy = strategy_from_string(j.value("selection_strategy", std::string("pareto")));
  c.merge_enabled = j.value("merge_enabled", c.merge_enabled);
  c.max_merge_invocations = j.value("max_merge_invocations", c.max_merge_invocations);
  c.merge_iterations = j.value("merge_iterations", c.merge_iterations);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  c.task_model = j.value("task_model", c.task_model);
  c.reflection_model = j.value("reflection_model", c.reflection_model);
  c.metric_id = j.value("metric", c.metric_id);
  c.task_temperature = j.value("task_temperature", c.task_temperature);
  c.reflection_temperature = j.value("reflection_temperature", c.reflection_temperature);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.capture_meta_prompts = j.value("capture_meta_prompts", c.capture_meta_prompts);
  return c;
}

json to_json(const IterationRecord& r) {
  return {{"iteration", r.iteration},
          {"rollouts_consumed_total", r.rollouts_consumed_total},
          {"best_mean_so_far", r.best_mean_so_far},
          {"action", std::string(to_string(r.action))},
          {"accepted", r.accepted},
          {"parent", r.parent},
          {"second_parent", optional_to(r.second_parent)},
          {"child", optional_to(r.child)},
          {"target_module", r.target_module},
          {"sigma_before", r.sigma_before},
          {"sigma_after", r.sigma_after},
          {"abandoned", r.abandoned}};
}

IterationRecord iteration_from_json(const json& j) {
  IterationRecord r;
  r.iteration = j.at("iteration").get<std::int64_t>();
  r.rollouts_consumed_total = j.at("rollouts_consumed_total").get<std::int64_t>();
  r.best_mean_so_far = j.at("best_mean_so_far").get<double>();
  r.action = action_from_string(j.at("action").get<std::string>());
  r.accepted = j.at("accepted").get<bool>();
  r.parent = j.at("parent").get<std::size_t>();
  r.second_parent = optional_from<std::size_t>(j, "second_parent");
  r.child = optional_from<std::size_t>(j, "child");
  r.target_module = j.value("target_module", std::string());
  r.sigma_before = j.value("sigma_before", 0.0);
  r.sigma_after = j.value("sigma_after", 0.0);
  r.abandoned = j.value("abandoned", std::string());
  return r;
}

json to_json(const MutationOutcome& o, std::int64_t iteration) {
  json out = {{"iteration", iteration},
              {"accepted", o.accepted},
              {"child_index", optional_to(o.child_index)},
              {"parent_index", o.parent_index},
              {"target_module", o.target_module},
              {"sigma_before", o.sigma_before},
              {"sigma_after", o.sigma_after},
              {"proposed_instruction", o.proposed_instruction},
              {"abandoned", o.abandoned}};
  if (!o.meta_prompt.empty()) out["meta_prompt"] = o.meta_prompt;
  return out;
}

json to_json(const MergeOutcome& o, std::int64_t iteration) {
  json branches = json::array();
  for (const auto& [module, branch] : o.branches) {
    branches.push_back({{"module_id", module}, {"branch", std::string(to_string(branch))}});
  }
  return {{"iteration", iteration},
          {"triple", {o.i, o.j, o.ancestor}},
          {"branches", std::move(branches)},
          {"accepted", o.accepted},
          {"child_index", optional_to(o.child_index)},
          {"sigma_parents", o.sigma_parents},
          {"sigma_child", o.sigma_child}};
}

// ---------------------------------------------------------------------------
// Run state

json to_json(const RunState& s) {
  json feedback = json::array();
  for (const auto& t : s.datasets.d_feedback) feedback.push_back(to_json(t));
  json pareto = json::array();
  for (const auto& t : s.datasets.d_pareto) pareto.push_back(to_json(t));
  json tried = json::array();
  for (const auto& [i, j, a] : s.merge_log.tried) tried.push_back({i, j, a});
  json history = json::array();
  for (const auto& r : s.history) history.push_back(to_json(r));

  return {{"schema_version", s.schema_version},
          {"config", to_json(s.config)},
          {"program", to_json(s.program)},
          {"datasets", {{"feedback", std::move(feedback)}, {"pareto", std::move(pareto)}}},
          {"inference_mode", s.inference_mode},
          {"pool", to_json(s.pool)},
          {"budget", to_json(s.budget)},
          {"round_robin", s.round_robin.counter},
          {"merge_log",
           {{"tried", std::move(tried)},
            {"invocations_used", s.merge_log.invocations_used},
            {"max_invocations", s.merge_log.max_invocations}}},
          {"history", std::move(history)},
          {"rng", s.rng.save()},
          {"next_iteration", s.next_iteration},
          {"finished", s.finished},
          {"extras", s.extras}};
}

RunState state_from_json(const json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version > kStateSchemaVersion || version < 1) throw SchemaVersionMismatch(version, kStateSchemaVersion);
  RunState s;
  s.schema_version = version;
  s.config = config_from_json(j.at("config"));
  s.program = program_from_json(j.at("program"));
  for (const auto& t : j.at("datasets").at("feedback")) s.datasets.d_feedback.push_back(task_from_json(t));
  for (const auto& t : j.at("datasets").at("pareto")) s.datasets.d_pareto.push_back(task_from_json(t));
  s.inference_mode = j.value("inference_mode", false);
  s.pool = pool_from_json(j.at("pool"));
  s.budget = budget_from_json(j.at("budget"));
  s.round_robin.counter = j.at("round_robin").get<std::uint64_t>();
  const json& merge = j.at("merge_log");
  for (const auto& t : merge.at("tried")) {
    s.merge_log.tried.insert({t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>(), t.at(2).get<std::size_t>()});
  }
  s.merge_log.invocations_used = merge.at("invocations_used").get<std::size_t>();
  s.merge_log.max_invocations = merge.at("max_invocations").get<std::size_t>();
  for (const auto& r : j.at("history")) s.history.push_back(iteration_from_json(r));
  s.rng.load(j.at("rng").get<std::string>());
  s.next_iteration = j.at("next_iteration").get<std::int64_t>();
  s.finished = j.at("finished").get<bool>();
  s.extras = j.value("extras", json::object());
  return s;
}

std::string dump_state(const RunState& state) { return to_json(state).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Files

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto parent = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  const auto temp = parent / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + temp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing " + temp.string());
  }
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::filesystem::remove(temp, ec);
    throw IoError("cannot move " + temp.string() + " to " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void save_state(const RunState& state, const std::filesystem::path& path) {
  write_file_atomic(path, dump_state(state));
}

RunState load_state(const std::filesystem::path& path) {
  const json parsed = json::parse(read_file(path), nullptr, false);
  if (parsed.is_discarded()) throw IoError("state file " + path.string() + " is not valid JSON");
  try {
    return state_from_json(parsed);
  } catch (const SchemaVersionMismatch&) {
    throw;
  } catch (const json::exception& e) {
    throw IoError("malformed state file " + path.string() + ": " + e.what());
  }
}

SystemProgram load_system(const std::filesystem::path& path) {
  const json parsed = json::parse(read_file(path), nullptr, false);
  if (parsed.is_discarded()) throw IoError("system file " + path.string() + " is not valid JSON");
  try {
    return program_from_json(parsed);
  } catch (const json::exception& e) {
    throw IoError("malformed system file " + path.string() + ": " + e.what());
  }
}

std::vector<TaskInstance> load_dataset(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<TaskInstance> tasks;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
      throw IoError(path.string() + ":" + std::to_string(number) + ": not a JSON object");
    try {
      tasks.push_back(task_from_json(parsed));
    } catch (const json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return tasks;
}

std::string dataset_jsonl(const std::vector<TaskInstance>& tasks) {
  std::string out;
  for (const auto& t : tasks) out += to_json(t).dump() + "\n";
  return out;
}

std::string trace_jsonl(const ExecutionTrace& trace) {
  std::string out;
  for (const auto& r : trace.records) out += to_json(r).dump() + "\n";
  return out;
}

std::string ledger_csv(const RolloutBudget& budget) {
  std::string out = "iteration,purpose,count\n";
  for (const auto& e : budget.ledger()) {
    out += std::to_string(e.iteration) + "," + std::string(to_string(e.purpose)) + "," + std::to_string(e.count) + "\n";
  }
  return out;
}

std::string history_csv(const std::vector<IterationRecord>& history) {
  std::string out = "iteration,rollouts,best_mean,action,accepted\n";
  for (const auto& r : history) {
    out += std::to_string(r.iteration) + "," + std::to_string(r.rollouts_consumed_total) + "," +
           format_double(r.best_mean_so_far) + "," + std::string(to_string(r.action)) + "," +
           (r.accepted ? "1" : "0") + "\n";
  }
  return out;
}

std::string best_prompts_text(const SystemProgram& program, const Candidate& candidate) {
  std::string out;
  for (const auto& module : program.modules) {
    if (!out.empty()) out += "\n";
    out += "=== " + module.module_id + " ===\n";
    out += candidate.prompts.at(module.module_id);
    out += "\n";
  }
  return out;
}

}  // namespace gepa
