#include "gepa/compound_system.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace gepa {

namespace {

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

}  // namespace

// ---------------------------------------------------------------------------
// SystemProgram

void SystemProgram::validate() const {
  if (modules.empty()) throw InvalidProgram("system has no modules");
  std::set<std::string> ids;
  for (const auto& module : modules) {
    if (module.module_id.empty()) throw InvalidProgram("module with empty id");
    if (!ids.insert(module.module_id).second) throw InvalidProgram("duplicate module id '" + module.module_id + "'");
    if (module.input_fields.empty() || module.output_fields.empty())
      throw InvalidProgram("module '" + module.module_id + "' needs non-empty input and output fields");
    const std::set<std::string> inputs(module.input_fields.begin(), module.input_fields.end());
    for (const auto& field : module.output_fields) {
      if (inputs.count(field))
        throw InvalidProgram("module '" + module.module_id + "' uses '" + field + "' as both input and output");
    }
  }
}

const ModuleSpec& SystemProgram::module(const std::string& module_id) const {
  for (const auto& module : modules) {
    if (module.module_id == module_id) return module;
  }
  throw UnknownModule(module_id);
}

bool SystemProgram::has_module(const std::string& module_id) const {
  return std::any_of(modules.begin(), modules.end(), [&](const ModuleSpec& m) { return m.module_id == module_id; });
}

std::vector<std::string> SystemProgram::module_ids() const {
  std::vector<std::string> ids;
  ids.reserve(modules.size());
  for (const auto& module : modules) ids.push_back(module.module_id);
  return ids;
}

PromptMap SystemProgram::prompts() const {
  PromptMap prompts;
  for (const auto& module : modules) prompts.emplace(module.module_id, module.instruction);
  return prompts;
}

// ---------------------------------------------------------------------------
// Rendering and parsing

std::string render_prompt(const ModuleSpec& module, const FieldMap& inputs) {
  std::string text = module.instruction;
  text += "\n\n";
  for (const auto& name : module.input_fields) {
    const auto it = inputs.find(name);
    if (it == inputs.end()) throw MissingField(name);
    text += name;
    text += ": ";
    text += it->second;
    text += '\n';
  }
  text += "\nRespond with one \"field_name: value\" line for each of:";
  for (const auto& name : module.output_fields) {
    text += ' ';
    text += name;
  }
  return text;
}

ParsedOutput parse_module_output(const ModuleSpec& module, const std::string& raw) {
  ParsedOutput result;
  std::map<std::string, std::string> found;
  const std::string* current = nullptr;
  std::string buffer;

  auto flush = [&] {
    if (current && !found.count(*current)) found.emplace(*current, std::string(trim(buffer)));
    buffer.clear();
  };

  for (const auto line : split_lines(raw)) {
    const auto content = line.substr(std::min(line.size(), line.find_first_not_of(" \t")));
    const std::string* header = nullptr;
    for (const auto& field : module.output_fields) {
      if (content.size() > field.size() && content.compare(0, field.size(), field) == 0 &&
          content[field.size()] == ':') {
        header = &field;
        break;
      }
    }
    if (header) {
      flush();
      current = header;
      buffer = std::string(content.substr(header->size() + 1));
    } else if (current) {
      buffer += '\n';
      buffer += line;
    }
  }
  flush();

  for (const auto& field : module.output_fields) {
    auto it = found.find(field);
    if (it == found.end()) {
      result.fields.emplace(field, "");
      result.missing.push_back(field);
    } else {
      result.fields.emplace(field, std::move(it->second));
    }
  }
  return result;
}

SystemProgram apply_candidate(const SystemProgram& program, const PromptMap& prompts) {
  if (prompts.size() != program.modules.size())
    throw ArityMismatch("candidate has " + std::to_string(prompts.size()) + " prompts for " +
                        std::to_string(program.modules.size()) + " modules");
  SystemProgram updated = program;
  for (auto& module : updated.modules) {
    const auto it = prompts.find(module.module_id);
    if (it == prompts.end()) throw ArityMismatch("candidate has no prompt for module '" + module.module_id + "'");
    module.instruction = it->second;
  }
  return updated;
}

// ---------------------------------------------------------------------------
// Controllers

ControllerRegistry ControllerRegistry::with_builtins() {
  ControllerRegistry registry;
  registry.add("linear", [](ModuleCaller& caller, const TaskInstance& task) {
    FieldMap available = task.input;
    FieldMap final_output;
    for (const auto& module : caller.program().modules) {
      FieldMap inputs;
      for (const auto& name : module.input_fields) {
        const auto it = available.find(name);
        if (it == available.end()) throw MissingField(name);
        inputs.emplace(name, it->second);
      }
      for (auto& [name, value] : caller.call(module.module_id, inputs)) {
        available[name] = value;
        final_output[name] = std::move(value);
      }
    }
    return final_output;
  });
  return registry;
}

void ControllerRegistry::add(std::string id, Controller controller) {
  controllers_[std::move(id)] = std::move(controller);
}

const Controller& ControllerRegistry::get(const std::string& id) const {
  const auto it = controllers_.find(id);
  if (it == controllers_.end()) throw UnknownController(id);
  return it->second;
}

bool ControllerRegistry::contains(const std::string& id) const { return controllers_.count(id) > 0; }

// ---------------------------------------------------------------------------
// Execution

ModuleCaller::ModuleCaller(const SystemProgram& program, Generator& generator, const ExecutionOptions& options,
                           ExecutionTrace& trace)
    : program_(program), generator_(generator), options_(options), trace_(trace) {}

namespace {

/// Carries a generator failure out of the controller without losing which
/// module and inputs triggered it.
struct ModuleFailure {
  std::string module_id;
  std::string cause;
  FieldMap inputs;
};

}  // namespace

FieldMap ModuleCaller::call(const std::string& module_id, const FieldMap& inputs) {
  const ModuleSpec& module = program_.module(module_id);
  ModuleInvocationRecord record;
  record.module_id = module_id;
  for (const auto& name : module.input_fields) {
    const auto it = inputs.find(name);
    if (it == inputs.end()) throw MissingField(name);
    record.inputs.emplace(name, it->second);
  }
  record.rendered_prompt = render_prompt(module, record.inputs);

  try {
    record.raw_output =
        generator_
            .generate(GenerationRequest::single_turn(program_.model_id, record.rendered_prompt, options_.temperature,
                                                     options_.max_tokens))
            .text;
  } catch (const std::exception& e) {
    throw ModuleFailure{module_id, e.what(), record.inputs};
  }

  auto parsed = parse_module_output(module, record.raw_output);
  record.parsed_outputs = parsed.fields;
  record.missing_fields = std::move(parsed.missing);
  record.sequence_index = static_cast<std::int64_t>(trace_.records.size());
  trace_.records.push_back(std::move(record));
  return parsed.fields;
}

GeneratorError::GeneratorError(std::string module_id, std::string cause, ExecutionTrace partial,
                               FieldMap failed_inputs)
    : Error("generator failed in module '" + module_id + "': " + cause),
      module_id_(std::move(module_id)),
      cause_(std::move(cause)),
      partial_(std::move(partial)),
      failed_inputs_(std::move(failed_inputs)) {}

namespace {

Rollout run_controller(const SystemProgram& program, const TaskInstance& task, const ExecutionContext& context,
                       bool charged) {
  const Controller& controller = context.controllers.get(program.controller_id);
  Rollout rollout;
  rollout.trace.rollout_charged = charged;
  ModuleCaller caller(program, context.generator, context.options, rollout.trace);
  try {
    rollout.final_output = controller(caller, task);
  } catch (ModuleFailure& failure) {
    throw GeneratorError(std::move(failure.module_id), std::move(failure.cause), std::move(rollout.trace),
                         std::move(failure.inputs));
  }
  rollout.trace.final_output = rollout.final_output;
  return rollout;
}

}  // namespace

Rollout execute_system(const SystemProgram& program, const TaskInstance& task, const ExecutionContext& context,
                       RolloutBudget& budget, Purpose purpose, std::int64_t iteration) {
  context.controllers.get(program.controller_id);
  budget.charge(purpose, 1, iteration);
  return run_controller(program, task, context, true);
}

Rollout execute_uncharged(const SystemProgram& program, const TaskInstance& task, const ExecutionContext& context) {
  return run_controller(program, task, context, false);
}

}  // namespace gepa
