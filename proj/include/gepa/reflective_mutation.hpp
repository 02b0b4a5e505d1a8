#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gepa/candidate_pool.hpp"
#include "gepa/evaluation.hpp"
#include "gepa/random.hpp"
#include "gepa/run_context.hpp"

namespace gepa {

/// What the reflection model sees about one invocation of the target module.
struct ReflectiveRecord {
  FieldMap task_input;
  FieldMap module_inputs;
  std::string module_output;
  double outcome_score = 0.0;
  std::string feedback_text;
};

struct MutationOutcome {
  bool accepted = false;
  std::optional<std::size_t> child_index;
  std::size_t parent_index = 0;
  std::string target_module;
  double sigma_before = 0.0;
  double sigma_after = 0.0;
  std::string proposed_instruction;
  /// Empty on a completed attempt; otherwise why the attempt stopped early
  /// ("no_fenced_block", "no_records").
  std::string abandoned;
  /// Filled only when meta-prompt capture is enabled.
  std::string meta_prompt;
};

/// Global round-robin cursor over module ids, advanced once per attempt.
struct RoundRobin {
  std::uint64_t counter = 0;

  /// Returns the module to target next and advances the cursor.
  std::string select_module(const SystemProgram& program);

  bool operator==(const RoundRobin&) const = default;
};

/// b indices into [0, n): partial Fisher-Yates without replacement when
/// b <= n, independent uniform draws otherwise.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t b, Rng& rng);

std::vector<TaskInstance> sample_minibatch(const std::vector<TaskInstance>& d_feedback, std::size_t b, Rng& rng);

struct ReflectiveDataset {
  std::vector<ReflectiveRecord> records;
  std::vector<double> scores;
  double sigma = 0.0;
};

/// Rolls out the candidate on each minibatch instance (one charged rollout
/// each) and gathers every invocation of target_module with its feedback.
/// Throws BudgetExhausted before spending anything if the minibatch is
/// unaffordable.
ReflectiveDataset collect_reflective_dataset(const SystemProgram& program, const PromptMap& prompts,
                                             const std::vector<TaskInstance>& minibatch, const RunContext& context,
                                             RolloutBudget& budget, const std::string& target_module,
                                             std::int64_t iteration);

/// The reflection meta-prompt with its two placeholders unfilled.
extern const std::string_view kMetaPromptTemplate;
extern const std::string_view kCurrentInstructionSlot;
extern const std::string_view kExamplesSlot;

/// Shortest backtick fence (at least three) that cannot close early on text.
std::string fence_for(std::string_view text);

std::string serialize_records(const std::vector<ReflectiveRecord>& records);

/// Fills the meta-prompt template. Throws std::invalid_argument on no records.
std::string build_meta_prompt(const std::string& current_instruction, const std::vector<ReflectiveRecord>& records);

/// Content of the last fenced block in text, trimmed. Throws NoFencedBlock.
std::string extract_last_fenced_block(const std::string& text);

std::string propose_new_instruction(Generator& reflection_generator, const std::string& meta_prompt,
                                    const std::string& model_id, const ExecutionOptions& options);

struct MutationSettings {
  std::size_t minibatch_size = 3;
  bool capture_meta_prompt = false;
};

/// One reflective mutation attempt on pool[parent_index]. An accepted child
/// is scored on every Pareto instance and appended to the pool. Budget
/// exhaustion propagates; partial charges stay in the ledger and nothing is
/// added to the pool.
MutationOutcome mutate_step(Pool& pool, std::size_t parent_index, const SystemProgram& program,
                            const DatasetSplit& datasets, const RunContext& context, RolloutBudget& budget, Rng& rng,
                            RoundRobin& round_robin, const MutationSettings& settings, std::int64_t iteration);

}  // namespace gepa
