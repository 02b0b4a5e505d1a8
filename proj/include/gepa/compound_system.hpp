#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gepa/budget.hpp"
#include "gepa/errors.hpp"
#include "gepa/llm_adapter.hpp"

namespace gepa {

using FieldMap = std::map<std::string, std::string>;
/// Instruction text per module id.
using PromptMap = std::map<std::string, std::string>;

/// One language module: instruction plus its input and output schemas.
struct ModuleSpec {
  std::string module_id;
  std::vector<std::string> input_fields;
  std::vector<std::string> output_fields;
  std::string instruction;

  bool operator==(const ModuleSpec&) const = default;
};

/// A compound system: ordered modules, a control-flow executor and an opaque
/// model identifier. Only the module instructions are ever optimized.
struct SystemProgram {
  std::vector<ModuleSpec> modules;
  std::string controller_id;
  std::string model_id;

  /// Throws InvalidProgram on an empty module list, duplicate ids, or empty
  /// and overlapping field schemas.
  void validate() const;

  const ModuleSpec& module(const std::string& module_id) const;
  bool has_module(const std::string& module_id) const;
  std::vector<std::string> module_ids() const;
  PromptMap prompts() const;

  bool operator==(const SystemProgram&) const = default;
};

struct TaskInstance {
  FieldMap input;
  nlohmann::json metadata = nlohmann::json::object();

  bool operator==(const TaskInstance&) const = default;
};

struct ModuleInvocationRecord {
  std::string module_id;
  std::string rendered_prompt;
  FieldMap inputs;
  std::string raw_output;
  FieldMap parsed_outputs;
  /// Declared output fields absent from raw_output.
  std::vector<std::string> missing_fields;
  std::int64_t sequence_index = 0;

  bool operator==(const ModuleInvocationRecord&) const = default;
};

struct ExecutionTrace {
  std::vector<ModuleInvocationRecord> records;
  FieldMap final_output;
  bool rollout_charged = false;

  bool operator==(const ExecutionTrace&) const = default;
};

/// Instruction, blank line, then one "field: value" line per input field in
/// schema order. Throws MissingField when an input is absent.
std::string render_prompt(const ModuleSpec& module, const FieldMap& inputs);

struct ParsedOutput {
  FieldMap fields;
  std::vector<std::string> missing;
};

/// Lenient header scan for "field_name:" lines; absent fields map to "".
ParsedOutput parse_module_output(const ModuleSpec& module, const std::string& raw);

/// Returns a copy of program with its instructions replaced by prompts.
/// Throws ArityMismatch unless prompts covers exactly the program's modules.
SystemProgram apply_candidate(const SystemProgram& program, const PromptMap& prompts);

// ---------------------------------------------------------------------------
// Execution

class ModuleCaller;

/// Host-code control flow. Receives the task and a handle for invoking
/// modules; returns the system output.
using Controller = std::function<FieldMap(ModuleCaller&, const TaskInstance&)>;

class ControllerRegistry {
 public:
  /// Registry holding the "linear" controller, which runs modules in
  /// declaration order. Each module reads its inputs from the task input plus
  /// all earlier outputs; the final output is the union of module outputs.
  static ControllerRegistry with_builtins();

  void add(std::string id, Controller controller);
  const Controller& get(const std::string& id) const;
  bool contains(const std::string& id) const;

 private:
  std::map<std::string, Controller> controllers_;
};

struct ExecutionOptions {
  double temperature = kHostedModelProfile.temperature;
  int max_tokens = kHostedModelProfile.max_tokens;
};

/// Module invocation handle given to controllers for one rollout.
class ModuleCaller {
 public:
  ModuleCaller(const SystemProgram& program, Generator& generator, const ExecutionOptions& options,
               ExecutionTrace& trace);

  /// Renders, generates, parses and records one module invocation.
  FieldMap call(const std::string& module_id, const FieldMap& inputs);

  const SystemProgram& program() const { return program_; }

 private:
  const SystemProgram& program_;
  Generator& generator_;
  const ExecutionOptions& options_;
  ExecutionTrace& trace_;
};

/// A generator failure inside a rollout. The rollout has been charged; the
/// partial trace holds every invocation that completed.
class GeneratorError : public Error {
 public:
  GeneratorError(std::string module_id, std::string cause, ExecutionTrace partial, FieldMap failed_inputs);

  const std::string& module_id() const noexcept { return module_id_; }
  const std::string& cause() const noexcept { return cause_; }
  const ExecutionTrace& partial_trace() const noexcept { return partial_; }
  const FieldMap& failed_inputs() const noexcept { return failed_inputs_; }

 private:
  std::string module_id_;
  std::string cause_;
  ExecutionTrace partial_;
  FieldMap failed_inputs_;
};

struct ExecutionContext {
  Generator& generator;
  const ControllerRegistry& controllers;
  ExecutionOptions options{};
};

struct Rollout {
  FieldMap final_output;
  ExecutionTrace trace;
};

/// Runs one full system execution and charges exactly one rollout, no matter
/// how many module calls the controller makes.
/// Throws BudgetExhausted before starting, UnknownController, or
/// GeneratorError (after charging).
Rollout execute_system(const SystemProgram& program, const TaskInstance& task, const ExecutionContext& context,
                       RolloutBudget& budget, Purpose purpose, std::int64_t iteration);

/// Execution that charges nothing; used for post-hoc evaluation.
Rollout execute_uncharged(const SystemProgram& program, const TaskInstance& task, const ExecutionContext& context);

}  // namespace gepa
