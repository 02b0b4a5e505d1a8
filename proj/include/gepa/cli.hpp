#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gepa/optimizer.hpp"

namespace gepa::cli {

/// Parsed run configuration file. All paths are resolved against the
/// directory holding the config file.
struct RunConfigFile {
  std::filesystem::path system_path;
  std::optional<std::filesystem::path> train_path;
  std::optional<std::filesystem::path> feedback_path;
  std::optional<std::filesystem::path> pareto_path;
  std::optional<std::filesystem::path> test_path;
  GepaConfig config;
  nlohmann::json task_adapter;
  nlohmann::json reflection_adapter;
};

/// Throws ConfigError for unknown keys, missing required keys, a dataset
/// choice that is neither "train" nor "feedback"+"pareto", or referenced
/// files that do not exist.
RunConfigFile parse_run_config(const nlohmann::json& document, const std::filesystem::path& base_dir);
RunConfigFile load_run_config(const std::filesystem::path& path);

/// Builds a generator from an adapter profile:
///   {"type": "scripted", "rules": [{"contains", "reply", "transform"?}],
///    "queue": [..], "default": ".."}
///   {"type": "chat_completions", "model", "base_url"?, "profile"?: "open"|"hosted",
///    "temperature"?, "max_tokens"?, "max_retries"?, "timeout_ms"?}
/// Scripted replies may contain {{field}} placeholders, filled from
/// "field: value" lines of the prompt; "transform" is "lower" or "upper".
std::unique_ptr<Generator> make_generator(const nlohmann::json& profile, bool debug = false);

/// Model id and decoding temperature a profile implies.
std::string profile_model(const nlohmann::json& profile);
std::optional<double> profile_temperature(const nlohmann::json& profile);

struct OptimizeOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  bool resume = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> budget;
  std::optional<SelectionStrategy> strategy;
  std::optional<bool> merge;
  bool debug_prompts = false;
  /// Stops after this many iterations without finishing the run.
  std::optional<std::int64_t> stop_after;
};

/// Exit codes: 0 success, 1 configuration error, 2 runtime error.
int cmd_optimize(const OptimizeOptions& options, std::ostream& out, std::ostream& err);

int cmd_inference_search(const OptimizeOptions& options, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::filesystem::path state_path;
  /// Defaults to the run's Pareto instances.
  std::optional<std::filesystem::path> dataset_path;
  /// "best" or a pool index.
  std::string candidate = "best";
  /// Adapter profiles; defaults to those recorded in the state.
  std::optional<std::filesystem::path> config_path;
  std::optional<std::filesystem::path> traces_path;
};

struct EvalReport {
  std::size_t candidate_index = 0;
  std::vector<double> scores;
  double mean = 0.0;
};

/// Scores a stored candidate; charges nothing against the run's budget.
/// Throws UnknownIndex, IoError.
EvalReport evaluate_stored(const EvalOptions& options);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);

/// Writes the DOT tree to out_path, or to `out` when out_path is empty.
int cmd_export_tree(const std::filesystem::path& state_path, const std::string& format,
                    const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);

}  // namespace gepa::cli
