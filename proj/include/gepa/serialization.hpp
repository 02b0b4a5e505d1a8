#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gepa/optimizer.hpp"

namespace gepa {

// JSON shapes. Object keys are emitted sorted, so dumps are byte-stable.

nlohmann::json to_json(const SystemProgram& program);
SystemProgram program_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TaskInstance& task);
TaskInstance task_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModuleInvocationRecord& record);
nlohmann::json to_json(const ExecutionTrace& trace);

nlohmann::json to_json(const Candidate& candidate);
Candidate candidate_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Pool& pool);
Pool pool_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RolloutBudget& budget);
RolloutBudget budget_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GepaConfig& config);
GepaConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const IterationRecord& record);
IterationRecord iteration_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MutationOutcome& outcome, std::int64_t iteration);
nlohmann::json to_json(const MergeOutcome& outcome, std::int64_t iteration);

/// Full run state including the schema version.
nlohmann::json to_json(const RunState& state);
/// Throws SchemaVersionMismatch for a newer schema.
RunState state_from_json(const nlohmann::json& j);

std::string dump_state(const RunState& state);

// Files

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

void save_state(const RunState& state, const std::filesystem::path& path);
RunState load_state(const std::filesystem::path& path);

SystemProgram load_system(const std::filesystem::path& path);
/// JSON Lines, one {"input": {...}, "metadata": ...} object per line.
std::vector<TaskInstance> load_dataset(const std::filesystem::path& path);
std::string dataset_jsonl(const std::vector<TaskInstance>& tasks);

/// One JSON object per module invocation.
std::string trace_jsonl(const ExecutionTrace& trace);

/// iteration,purpose,count
std::string ledger_csv(const RolloutBudget& budget);
/// iteration,rollouts,best_mean,action,accepted
std::string history_csv(const std::vector<IterationRecord>& history);

/// Per module: a header line followed by its instruction.
std::string best_prompts_text(const SystemProgram& program, const Candidate& candidate);

}  // namespace gepa
