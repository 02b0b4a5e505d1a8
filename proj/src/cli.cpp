#include "gepa/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <iostream>
#include <set>

#include "gepa/serialization.hpp"

namespace gepa::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed, const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : object.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

fs::path existing_path(const json& document, const std::string& key, const fs::path& base_dir) {
  if (!document.at(key).is_string()) throw ConfigError("'" + key + "' must be a path string");
  fs::path path = document.at(key).get<std::string>();
  if (path.is_relative()) path = base_dir / path;
  if (!fs::exists(path)) throw ConfigError("'" + key + "' refers to a missing file: " + path.string());
  return path;
}

template <typename T>
T typed(const json& document, const std::string& key, T fallback) {
  const auto it = document.find(key);
  if (it == document.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("'" + key + "' has the wrong type");
  }
}

void validate_profile(const json& profile, const std::string& where) {
  if (!profile.is_object() || !profile.contains("type")) throw ConfigError(where + " needs a \"type\"");
  const auto type = profile.at("type").get<std::string>();
  if (type == "scripted") {
    reject_unknown_keys(profile, {"type", "rules", "queue", "default", "model"}, where);
    for (const auto& rule : profile.value("rules", json::array())) {
      reject_unknown_keys(rule, {"contains", "reply", "transform"}, where + " rule");
      if (!rule.contains("contains") || !rule.contains("reply"))
        throw ConfigError(where + " rules need \"contains\" and \"reply\"");
      const auto transform = rule.value("transform", std::string());
      if (!transform.empty() && transform != "lower" && transform != "upper")
        throw ConfigError(where + " rule transform must be \"lower\" or \"upper\"");
    }
  } else if (type == "chat_completions") {
    reject_unknown_keys(profile,
                        {"type", "model", "base_url", "profile", "temperature", "max_tokens", "max_retries",
                         "timeout_ms"},
                        where);
    if (!profile.contains("model")) throw ConfigError(where + " needs a \"model\"");
    const auto family = profile.value("profile", std::string("hosted"));
    if (family != "open" && family != "hosted") throw ConfigError(where + " profile must be \"open\" or \"hosted\"");
  } else {
    throw ConfigError(where + " has unknown type '" + type + "'");
  }
}

FieldMap prompt_fields(const std::string& prompt) {
  FieldMap fields;
  std::size_t start = 0;
  while (start < prompt.size()) {
    auto end = prompt.find('\n', start);
    if (end == std::string::npos) end = prompt.size();
    const std::string line = prompt.substr(start, end - start);
    const auto colon = line.find(": ");
    if (colon != std::string::npos && colon > 0 &&
        std::all_of(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(colon),
                    [](unsigned char c) { return std::isalnum(c) || c == '_'; })) {
      fields.emplace(line.substr(0, colon), line.substr(colon + 2));
    }
    start = end + 1;
  }
  return fields;
}

std::string fill_placeholders(const std::string& reply, const FieldMap& fields) {
  std::string out;
  std::size_t pos = 0;
  while (pos < reply.size()) {
    const auto open = reply.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = reply.find("}}", open + 2);
    if (close == std::string::npos) break;
    out += reply.substr(pos, open - pos);
    const auto it = fields.find(reply.substr(open + 2, close - open - 2));
    if (it != fields.end()) out += it->second;
    pos = close + 2;
  }
  out += reply.substr(pos);
  return out;
}

ScriptedAdapter::Responder templated(std::string reply, std::string transform) {
  return [reply = std::move(reply), transform = std::move(transform)](const GenerationRequest& request) {
    std::string text = fill_placeholders(reply, prompt_fields(request.messages.back().content));
    if (transform == "lower") {
      std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    } else if (transform == "upper") {
      std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::toupper(c); });
    }
    return text;
  };
}

struct Loaded {
  RunConfigFile file;
  SystemProgram program;
  DatasetSplit split;
  bool presplit = false;
  std::vector<TaskInstance> train;
};

Loaded load_inputs(const OptimizeOptions& options) {
  Loaded loaded;
  loaded.file = load_run_config(options.config_path);
  GepaConfig& config = loaded.file.config;
  if (options.seed) config.rng_seed = *options.seed;
  if (options.budget) config.budget = *options.budget;
  if (options.strategy) config.strategy = *options.strategy;
  if (options.merge) config.merge_enabled = *options.merge;
  if (options.debug_prompts) config.capture_meta_prompts = true;

  try {
    loaded.program = load_system(loaded.file.system_path);
    if (loaded.file.train_path) {
      loaded.train = load_dataset(*loaded.file.train_path);
    } else {
      loaded.split.d_feedback = load_dataset(*loaded.file.feedback_path);
      loaded.split.d_pareto = load_dataset(*loaded.file.pareto_path);
      loaded.presplit = true;
    }
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  } catch (const InvalidProgram& e) {
    throw ConfigError(e.what());
  }
  return loaded;
}

struct Artifacts {
  fs::path dir;
  std::vector<std::string> mutation_lines;
  std::vector<std::string> merge_lines;

  static std::vector<std::string> read_lines(const fs::path& path) {
    std::vector<std::string> lines;
    if (!fs::exists(path)) return lines;
    const std::string content = read_file(path);
    std::size_t start = 0;
    while (start < content.size()) {
      auto end = content.find('\n', start);
      if (end == std::string::npos) end = content.size();
      if (end > start) lines.push_back(content.substr(start, end - start));
      start = end + 1;
    }
    return lines;
  }

  static std::string joined(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& line : lines) out += line + "\n";
    return out;
  }

  void write(const RunState& state) const {
    save_state(state, dir / "run_state.json");
    write_file_atomic(dir / "history.csv", history_csv(state.history));
    write_file_atomic(dir / "ledger.csv", ledger_csv(state.budget));
    write_file_atomic(dir / "best_prompts.txt",
                      best_prompts_text(state.program, state.pool.candidate(state.pool.best_by_average())));
    write_file_atomic(dir / "mutations.jsonl", joined(mutation_lines));
    write_file_atomic(dir / "merges.jsonl", joined(merge_lines));
  }
};

json reports_json(const std::vector<TaskReport>& reports) {
  json out = json::array();
  for (const auto& r : reports) {
    out.push_back({{"task_index", r.task_index},
                   {"best_score", r.best_score},
                   {"candidate_index", r.candidate_index},
                   {"output", r.output}});
  }
  return out;
}

int run_command(const OptimizeOptions& options, bool inference, std::ostream& out, std::ostream& err) {
  Loaded loaded;
  std::unique_ptr<Generator> task;
  std::unique_ptr<Generator> reflection;
  try {
    loaded = load_inputs(options);
    task = make_generator(loaded.file.task_adapter);
    reflection = make_generator(loaded.file.reflection_adapter);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  }

  const ControllerRegistry controllers = ControllerRegistry::with_builtins();
  const MetricRegistry metrics = MetricRegistry::with_builtins();
  const Registries registries{controllers, metrics};
  const Generators generators{*task, *reflection};

  Artifacts artifacts;
  artifacts.dir = options.out_dir;

  RunState state;
  try {
    if (options.resume) {
      const auto state_path = options.out_dir / "run_state.json";
      if (!std::filesystem::exists(state_path)) throw ConfigError("--resume given but " + state_path.string() + " does not exist");
      state = load_state(state_path);
      artifacts.mutation_lines = Artifacts::read_lines(options.out_dir / "mutations.jsonl");
      artifacts.merge_lines = Artifacts::read_lines(options.out_dir / "merges.jsonl");
    } else if (inference) {
      const auto tasks = loaded.presplit ? loaded.split.d_pareto : loaded.train;
      GepaConfig config = loaded.file.config;
      config.n_pareto = tasks.size();
      state = initialize_run(config, loaded.program, inference_time_split(tasks), registries, generators, true);
    } else if (loaded.presplit) {
      state = initialize_run(loaded.file.config, loaded.program, loaded.split, registries, generators);
    } else {
      const auto& config = loaded.file.config;
      if (config.n_pareto == 0 || config.n_pareto >= loaded.train.size())
        throw ConfigError("n_pareto must be in [1, " + std::to_string(loaded.train.size() - 1) + "]");
      state = initialize_run(config, loaded.program, split_dataset(loaded.train, config.n_pareto, config.rng_seed),
                             registries, generators);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidSize& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  state.extras["adapters"] = {{"task", loaded.file.task_adapter}, {"reflection", loaded.file.reflection_adapter}};

  RunOptions run_options;
  run_options.stop_after_iterations = options.stop_after;
  run_options.on_mutation = [&](const MutationOutcome& o, std::int64_t it) {
    artifacts.mutation_lines.push_back(to_json(o, it).dump());
  };
  run_options.on_merge = [&](const MergeOutcome& o, std::int64_t it) {
    artifacts.merge_lines.push_back(to_json(o, it).dump());
  };
  run_options.on_checkpoint = [&](const RunState& s) { artifacts.write(s); };

  try {
    continue_run(state, registries, generators, run_options);
    artifacts.write(state);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    try {
      artifacts.write(state);
    } catch (const std::exception& flush_error) {
      err << "error: could not flush state: " << flush_error.what() << "\n";
    }
    return 2;
  }

  const std::size_t best = state.pool.best_by_average();
  out << "candidates: " << state.pool.size() << "\n"
      << "rollouts: " << state.budget.consumed() << "/" << state.budget.limit() << "\n"
      << "best: " << best << " (mean " << state.pool.aggregate_score(best) << ")\n";
  if (inference) {
    const auto reports = harvest_frontier(state.pool);
    try {
      write_file_atomic(options.out_dir / "inference_report.json", reports_json(reports).dump(2) + "\n");
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
    for (const auto& r : reports) {
      out << "task " << r.task_index << ": score " << r.best_score << " by candidate " << r.candidate_index << "\n";
    }
  }
  return 0;
}

}  // namespace

RunConfigFile parse_run_config(const json& document, const fs::path& base_dir) {
  reject_unknown_keys(document,
                      {"system", "train", "feedback", "pareto", "test", "minibatch_size", "n_pareto", "budget",
                       "selection_strategy", "merge_enabled", "max_merge_invocations", "merge_iterations",
                       "rng_seed", "metric", "max_tokens", "capture_meta_prompts", "task_adapter",
                       "reflection_adapter"},
                      "run config");
  for (const char* key : {"system", "budget", "metric", "task_adapter", "reflection_adapter"}) {
    if (!document.contains(key)) throw ConfigError(std::string("run config is missing '") + key + "'");
  }

  RunConfigFile file;
  file.system_path = existing_path(document, "system", base_dir);
  const bool has_train = document.contains("train");
  const bool has_split = document.contains("feedback") || document.contains("pareto");
  if (has_train == has_split) throw ConfigError("give either 'train' or both 'feedback' and 'pareto'");
  if (has_train) {
    file.train_path = existing_path(document, "train", base_dir);
  } else {
    if (!document.contains("feedback") || !document.contains("pareto"))
      throw ConfigError("'feedback' and 'pareto' must be given together");
    file.feedback_path = existing_path(document, "feedback", base_dir);
    file.pareto_path = existing_path(document, "pareto", base_dir);
  }
  if (document.contains("test")) file.test_path = existing_path(document, "test", base_dir);

  file.task_adapter = document.at("task_adapter");
  file.reflection_adapter = document.at("reflection_adapter");
  validate_profile(file.task_adapter, "task_adapter");
  validate_profile(file.reflection_adapter, "reflection_adapter");

  GepaConfig& c = file.config;
  c.minibatch_size = typed<std::size_t>(document, "minibatch_size", c.minibatch_size);
  c.n_pareto = typed<std::size_t>(document, "n_pareto", c.n_pareto);
  c.budget = typed<std::int64_t>(document, "budget", c.budget);
  c.strategy = strategy_from_string(typed<std::string>(document, "selection_strategy", "pareto"));
  c.merge_enabled = typed<bool>(document, "merge_enabled", c.merge_enabled);
  c.max_merge_invocations = typed<std::size_t>(document, "max_merge_invocations", c.max_merge_invocations);
  c.merge_iterations = typed<std::vector<std::int64_t>>(document, "merge_iterations", c.merge_iterations);
  c.rng_seed = typed<std::uint64_t>(document, "rng_seed", c.rng_seed);
  c.metric_id = typed<std::string>(document, "metric", c.metric_id);
  c.max_tokens = typed<int>(document, "max_tokens", c.max_tokens);
  c.capture_meta_prompts = typed<bool>(document, "capture_meta_prompts", c.capture_meta_prompts);
  c.task_model = profile_model(file.task_adapter);
  c.reflection_model = profile_model(file.reflection_adapter);
  if (auto t = profile_temperature(file.task_adapter)) c.task_temperature = *t;
  if (auto t = profile_temperature(file.reflection_adapter)) c.reflection_temperature = *t;
  if (c.minibatch_size == 0) throw ConfigError("minibatch_size must be >= 1");
  if (c.budget < 0) throw ConfigError("budget must be nonnegative");
  if (!MetricRegistry::with_builtins().contains(c.metric_id)) throw ConfigError("unknown metric '" + c.metric_id + "'");
  return file;
}

RunConfigFile load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  const json document = json::parse(text, nullptr, false);
  if (document.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  return parse_run_config(document, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

std::string profile_model(const json& profile) { return profile.value("model", std::string("scripted")); }

std::optional<double> profile_temperature(const json& profile) {
  if (profile.contains("temperature")) return profile.at("temperature").get<double>();
  if (profile.value("type", std::string()) != "chat_completions") return std::nullopt;
  return profile.value("profile", std::string("hosted")) == "open" ? kOpenModelProfile.temperature
                                                                   : kHostedModelProfile.temperature;
}

std::unique_ptr<Generator> make_generator(const json& profile, bool debug) {
  validate_profile(profile, "adapter profile");
  const auto type = profile.at("type").get<std::string>();
  if (type == "scripted") {
    auto adapter = std::make_unique<ScriptedAdapter>();
    for (const auto& rule : profile.value("rules", json::array())) {
      adapter->on(rule.at("contains").get<std::string>(),
                  templated(rule.at("reply").get<std::string>(), rule.value("transform", std::string())));
    }
    for (const auto& reply : profile.value("queue", json::array())) adapter->enqueue(reply.get<std::string>());
    if (profile.contains("default")) adapter->set_default(templated(profile.at("default").get<std::string>(), ""));
    return adapter;
  }

  ChatCompletionsConfig config;
  config.model_id = profile.at("model").get<std::string>();
  config.base_url = profile.value("base_url", std::string());
  const bool open = profile.value("profile", std::string("hosted")) == "open";
  const DecodingProfile decoding = open ? kOpenModelProfile : kHostedModelProfile;
  config.temperature = profile.value("temperature", decoding.temperature);
  config.max_tokens = profile.value("max_tokens", decoding.max_tokens);
  config.max_retries = profile.value("max_retries", config.max_retries);
  config.timeout = std::chrono::milliseconds(profile.value("timeout_ms", config.timeout.count()));
  config.debug = debug;
  auto adapter = std::make_unique<ChatCompletionsAdapter>(ChatCompletionsConfig::from_environment(config));
  if (debug) adapter->set_debug_sink([](std::string_view line) { std::cerr << "[gepa] " << line << "\n"; });
  return adapter;
}

int cmd_optimize(const OptimizeOptions& options, std::ostream& out, std::ostream& err) {
  return run_command(options, false, out, err);
}

int cmd_inference_search(const OptimizeOptions& options, std::ostream& out, std::ostream& err) {
  return run_command(options, true, out, err);
}

EvalReport evaluate_stored(const EvalOptions& options) {
  const RunState state = load_state(options.state_path);
  EvalReport report;
  if (options.candidate == "best") {
    report.candidate_index = state.pool.best_by_average();
  } else {
    std::size_t parsed = 0;
    std::size_t consumed = 0;
    try {
      parsed = std::stoul(options.candidate, &consumed);
    } catch (const std::exception&) {
      throw UnknownIndex("candidate must be 'best' or an index, got '" + options.candidate + "'");
    }
    if (consumed != options.candidate.size() || parsed >= state.pool.size())
      throw UnknownIndex("candidate index " + options.candidate + " is outside the pool of " +
                         std::to_string(state.pool.size()));
    report.candidate_index = parsed;
  }

  json task_profile;
  json reflection_profile;
  if (options.config_path) {
    const auto file = load_run_config(*options.config_path);
    task_profile = file.task_adapter;
    reflection_profile = file.reflection_adapter;
  } else {
    const auto adapters = state.extras.find("adapters");
    if (adapters == state.extras.end()) throw ConfigError("state has no adapter profiles; pass --config");
    task_profile = adapters->at("task");
    reflection_profile = adapters->at("reflection");
  }
  auto task = make_generator(task_profile);
  auto reflection = make_generator(reflection_profile);

  const std::vector<TaskInstance> tasks =
      options.dataset_path ? load_dataset(*options.dataset_path) : state.datasets.d_pareto;

  const ControllerRegistry controllers = ControllerRegistry::with_builtins();
  const MetricRegistry metrics = MetricRegistry::with_builtins();
  const RunContext context{controllers,
                           metrics,
                           *task,
                           *reflection,
                           state.config.metric_id,
                           ExecutionOptions{state.config.task_temperature, state.config.max_tokens},
                           state.config.reflection_model,
                           ExecutionOptions{state.config.reflection_temperature, state.config.max_tokens}};
  const auto results =
      evaluate_uncharged(state.program, state.pool.candidate(report.candidate_index).prompts, tasks, context);
  std::string traces;
  for (const auto& r : results) {
    report.scores.push_back(r.score);
    traces += trace_jsonl(r.trace);
  }
  report.mean = mean_score(results);
  if (options.traces_path) write_file_atomic(*options.traces_path, traces);
  return report;
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const EvalReport report = evaluate_stored(options);
    out << "candidate " << report.candidate_index << "\n";
    for (std::size_t i = 0; i < report.scores.size(); ++i) out << i << "\t" << report.scores[i] << "\n";
    out << "mean\t" << report.mean << "\n";
    return 0;
  } catch (const UnknownIndex& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_export_tree(const fs::path& state_path, const std::string& format, const fs::path& out_path,
                    std::ostream& out, std::ostream& err) {
  if (format != "dot") {
    err << "error: unsupported tree format '" << format << "'\n";
    return 1;
  }
  try {
    const RunState state = load_state(state_path);
    const std::string dot = ancestry_dot(state.pool);
    if (out_path.empty()) {
      out << dot;
    } else {
      write_file_atomic(out_path, dot);
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace gepa::cli
