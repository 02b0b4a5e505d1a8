#include "gepa/reflective_mutation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace gepa {

const std::string_view kCurrentInstructionSlot = "<current instruction>";
const std::string_view kExamplesSlot = "<Inputs, Outputs and Feedback for minibatch of examples>";

const std::string_view kMetaPromptTemplate = R"TPL(I provided an assistant with the following instructions to perform a task for me:

```
<current instruction>
```

The following are examples of different task inputs provided to the assistant along with the assistant's response for each of them, and some feedback on how the assistant's response could be better:

```
<Inputs, Outputs and Feedback for minibatch of examples>
```

Your task is to write a new instruction for the assistant.

Read the inputs carefully and identify the input format and infer detailed task description about the task I wish to solve with the assistant.

Read all the assistant responses and the corresponding feedback. Identify all niche and domain specific factual information about the task and include it in the instruction, as a lot of it may not be available to the assistant in the future. The assistant may have utilized a generalizable strategy to solve the task, if so, include that in the instruction as well.

Provide the new instructions within ``` blocks.)TPL";

namespace {

std::string trim_copy(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

void fill_slot(std::string& text, std::string_view slot, const std::string& content) {
  const std::string fenced = "```\n" + std::string(slot) + "\n```";
  const auto pos = text.find(fenced);
  if (pos == std::string::npos) throw std::logic_error("meta-prompt template slot missing");
  const std::string fence = fence_for(content);
  text.replace(pos, fenced.size(), fence + "\n" + content + "\n" + fence);
}

void append_fields(std::string& out, const FieldMap& fields) {
  for (const auto& [name, value] : fields) {
    out += name;
    out += ": ";
    out += value;
    out += '\n';
  }
}

}  // namespace

std::string RoundRobin::select_module(const SystemProgram& program) {
  if (program.modules.empty()) throw InvalidProgram("system has no modules");
  const auto index = static_cast<std::size_t>(counter % program.modules.size());
  ++counter;
  return program.modules[index].module_id;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t b, Rng& rng) {
  if (n == 0) throw std::invalid_argument("cannot sample from an empty dataset");
  if (b == 0) throw std::invalid_argument("minibatch size must be positive");
  std::vector<std::size_t> out;
  if (b > n) {
    out.reserve(b);
    for (std::size_t k = 0; k < b; ++k) out.push_back(static_cast<std::size_t>(rng.uniform_index(n)));
    return out;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k < b; ++k) {
    std::swap(order[k], order[k + static_cast<std::size_t>(rng.uniform_index(n - k))]);
  }
  order.resize(b);
  return order;
}

std::vector<TaskInstance> sample_minibatch(const std::vector<TaskInstance>& d_feedback, std::size_t b, Rng& rng) {
  std::vector<TaskInstance> batch;
  for (std::size_t index : sample_indices(d_feedback.size(), b, rng)) batch.push_back(d_feedback[index]);
  return batch;
}

ReflectiveDataset collect_reflective_dataset(const SystemProgram& program, const PromptMap& prompts,
                                             const std::vector<TaskInstance>& minibatch, const RunContext& context,
                                             RolloutBudget& budget, const std::string& target_module,
                                             std::int64_t iteration) {
  const auto needed = static_cast<std::int64_t>(minibatch.size());
  if (!budget.can_afford(needed)) throw BudgetExhausted(needed, budget.remaining());

  const SystemProgram candidate = apply_candidate(program, prompts);
  const ExecutionContext execution = context.execution();
  ReflectiveDataset data;

  auto add_records = [&](const TaskInstance& task, const ExecutionTrace& trace, double score,
                         const std::string& feedback) {
    for (const auto& record : trace.records) {
      if (record.module_id != target_module) continue;
      data.records.push_back({task.input, record.inputs, record.raw_output, score, feedback});
    }
  };

  for (const auto& task : minibatch) {
    try {
      Rollout rollout = execute_system(candidate, task, execution, budget, Purpose::MutationMinibatch, iteration);
      const FeedbackBundle bundle =
          context.metrics.evaluate_with_feedback(context.metric_id, rollout.trace, rollout.final_output, task.metadata);
      const auto module_text = bundle.module_feedback.find(target_module);
      add_records(task, rollout.trace, bundle.score,
                  module_text != bundle.module_feedback.end() ? module_text->second : bundle.feedback_text);
      data.scores.push_back(bundle.score);
    } catch (const GeneratorError& e) {
      const std::string feedback = "The system failed before producing an output: " + e.cause();
      add_records(task, e.partial_trace(), 0.0, feedback);
      if (e.module_id() == target_module) data.records.push_back({task.input, e.failed_inputs(), "", 0.0, feedback});
      data.scores.push_back(0.0);
    }
  }
  data.sigma = mean_of(data.scores);
  return data;
}

std::string fence_for(std::string_view text) {
  std::size_t longest = 0;
  std::size_t run = 0;
  for (char c : text) {
    run = c == '`' ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  return std::string(std::max<std::size_t>(3, longest + 1), '`');
}

std::string serialize_records(const std::vector<ReflectiveRecord>& records) {
  std::string out;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    if (k > 0) out += '\n';
    out += "Example " + std::to_string(k + 1) + "\n";
    out += "Inputs:\n";
    append_fields(out, r.module_inputs);
    out += "Assistant response:\n";
    out += r.module_output;
    if (r.module_output.empty() || r.module_output.back() != '\n') out += '\n';
    out += "Feedback:\n";
    out += r.feedback_text;
    out += '\n';
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string build_meta_prompt(const std::string& current_instruction, const std::vector<ReflectiveRecord>& records) {
  if (records.empty()) throw std::invalid_argument("meta-prompt needs at least one record");
  std::string prompt(kMetaPromptTemplate);
  fill_slot(prompt, kCurrentInstructionSlot, current_instruction);
  fill_slot(prompt, kExamplesSlot, serialize_records(records));
  return prompt;
}

std::string extract_last_fenced_block(const std::string& text) {
  std::optional<std::string> last;
  // Line-oriented fences: an opening line starting with >= 3 backticks
  // (optionally followed by a language tag) and a closing line made of at
  // least as many backticks.
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = text.find('\n', start);
      lines.push_back(text.substr(start, end == std::string::npos ? std::string::npos : end - start));
      if (end == std::string::npos) break;
      start = end + 1;
    }
  }
  auto fence_length = [](const std::string& line) {
    const auto content = trim_copy(line);
    std::size_t n = 0;
    while (n < content.size() && content[n] == '`') ++n;
    return std::pair{n, content};
  };
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto [open, open_line] = fence_length(lines[k]);
    if (open < 3) {
      // Inline block after leading prose: "Use this: ```text```"
      const auto begin = open_line.find("```");
      if (begin == std::string::npos) continue;
      std::size_t run = begin;
      while (run < open_line.size() && open_line[run] == '`') ++run;
      const std::string marker(run - begin, '`');
      const auto end = open_line.find(marker, run);
      if (end != std::string::npos && end > run) last = trim_copy(open_line.substr(run, end - run));
      continue;
    }
    const std::string rest = open_line.substr(open);
    // Inline block on a single line: ```text```
    if (rest.size() >= open && rest.compare(rest.size() - open, open, std::string(open, '`')) == 0 &&
        rest.find_first_not_of('`') != std::string::npos) {
      last = trim_copy(rest.substr(0, rest.size() - open));
      continue;
    }
    std::size_t close = k + 1;
    for (; close < lines.size(); ++close) {
      const auto [n, content] = fence_length(lines[close]);
      if (n >= open && content.size() == n) break;
    }
    if (close >= lines.size()) break;
    std::string body;
    for (std::size_t m = k + 1; m < close; ++m) {
      if (m > k + 1) body += '\n';
      body += lines[m];
    }
    last = trim_copy(body);
    k = close;
  }
  if (!last || last->empty()) throw NoFencedBlock();
  return *last;
}

std::string propose_new_instruction(Generator& reflection_generator, const std::string& meta_prompt,
                                    const std::string& model_id, const ExecutionOptions& options) {
  const auto reply = reflection_generator.generate(
      GenerationRequest::single_turn(model_id, meta_prompt, options.temperature, options.max_tokens));
  return extract_last_fenced_block(reply.text);
}

MutationOutcome mutate_step(Pool& pool, std::size_t parent_index, const SystemProgram& program,
                            const DatasetSplit& datasets, const RunContext& context, RolloutBudget& budget, Rng& rng,
                            RoundRobin& round_robin, const MutationSettings& settings, std::int64_t iteration) {
  MutationOutcome outcome;
  outcome.parent_index = parent_index;
  outcome.target_module = round_robin.select_module(program);

  const PromptMap& parent_prompts = pool.candidate(parent_index).prompts;
  const auto minibatch = sample_minibatch(datasets.d_feedback, settings.minibatch_size, rng);
  const auto data =
      collect_reflective_dataset(program, parent_prompts, minibatch, context, budget, outcome.target_module, iteration);
  outcome.sigma_before = data.sigma;
  if (data.records.empty()) {
    outcome.abandoned = "no_records";
    return outcome;
  }

  const std::string meta_prompt = build_meta_prompt(parent_prompts.at(outcome.target_module), data.records);
  if (settings.capture_meta_prompt) outcome.meta_prompt = meta_prompt;
  try {
    outcome.proposed_instruction =
        propose_new_instruction(context.reflection_generator, meta_prompt, context.reflection_model_id,
                                context.reflection_options);
  } catch (const NoFencedBlock&) {
    outcome.abandoned = "no_fenced_block";
    return outcome;
  } catch (const GenerationError& e) {
    outcome.abandoned = std::string("reflection_failed: ") + e.what();
    return outcome;
  }

  PromptMap child_prompts = parent_prompts;
  child_prompts[outcome.target_module] = outcome.proposed_instruction;

  const auto after =
      evaluate_candidate(program, child_prompts, minibatch, context, budget, Purpose::MinibatchReeval, iteration);
  std::vector<double> after_scores;
  for (const auto& r : after) after_scores.push_back(r.score);
  outcome.sigma_after = mean_of(after_scores);
  if (!(outcome.sigma_after > outcome.sigma_before)) return outcome;

  const auto pareto =
      evaluate_candidate(program, child_prompts, datasets.d_pareto, context, budget, Purpose::ParetoEval, iteration);
  ScoreRow row;
  std::vector<FieldMap> outputs;
  for (const auto& r : pareto) {
    row.push_back(r.score);
    outputs.push_back(r.output);
  }
  Candidate child{std::move(child_prompts), MutationOrigin{parent_index, outcome.target_module, iteration}};
  outcome.child_index = pool.add_candidate(std::move(child), {parent_index}, std::move(row), std::move(outputs));
  outcome.accepted = true;
  return outcome;
}

}  // namespace gepa
