#include <gtest/gtest.h>

#include "gepa/reflective_mutation.hpp"
#include "worlds.hpp"

namespace gepa {
namespace {

using testing::module;

const std::string kOpening = "I provided an assistant with the following instructions to perform a task for me:";
const std::string kClosing = "Provide the new instructions within ``` blocks.";

ReflectiveRecord record(const std::string& q, const std::string& out, double score, const std::string& fb) {
  return ReflectiveRecord{{{"question", q}}, {{"question", q}}, out, score, fb};
}

TEST(RoundRobin, CyclesInDeclarationOrder) {
  SystemProgram p;
  p.modules = {module("a", {"x"}, {"y"}, ""), module("b", {"x"}, {"y"}, ""), module("c", {"x"}, {"y"}, "")};
  RoundRobin rr;
  std::vector<std::string> picks;
  for (int k = 0; k < 4; ++k) picks.push_back(rr.select_module(p));
  EXPECT_EQ(picks, (std::vector<std::string>{"a", "b", "c", "a"}));

  RoundRobin resumed{rr.counter};
  EXPECT_EQ(resumed.select_module(p), "b");

  SystemProgram single;
  single.modules = {module("only", {"x"}, {"y"}, "")};
  RoundRobin one;
  for (int k = 0; k < 3; ++k) EXPECT_EQ(one.select_module(single), "only");
}

TEST(RoundRobin, FairAfterWholeCycles) {
  SystemProgram p;
  for (int m = 0; m < 4; ++m) p.modules.push_back(module("m" + std::to_string(m), {"x"}, {"y"}, ""));
  RoundRobin rr;
  std::map<std::string, int> counts;
  for (int k = 0; k < 4 * 7; ++k) ++counts[rr.select_module(p)];
  for (const auto& [_, c] : counts) EXPECT_EQ(c, 7);
}

TEST(SampleMinibatch, DistinctWithoutReplacement) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto picks = sample_indices(7, 3, rng);
    ASSERT_EQ(picks.size(), 3u);
    EXPECT_EQ(std::set<std::size_t>(picks.begin(), picks.end()).size(), 3u);
    for (auto p : picks) EXPECT_LT(p, 7u);
  }
}

TEST(SampleMinibatch, WithReplacementWhenTooFew) {
  Rng rng(4);
  const auto picks = sample_indices(2, 3, rng);
  ASSERT_EQ(picks.size(), 3u);
  EXPECT_LE(std::set<std::size_t>(picks.begin(), picks.end()).size(), 2u);
}

TEST(SampleMinibatch, Reproducible) {
  Rng a(9);
  Rng b(9);
  const auto tasks = testing::version_tasks(10, {});
  EXPECT_EQ(sample_minibatch(tasks, 4, a), sample_minibatch(tasks, 4, b));
}

TEST(MetaPrompt, OneRecordHasBothBlocksAndClosing) {
  const auto text = build_meta_prompt("Answer the question.", {record("q1", "answer: 4", 0.0, "Wrong.")});
  EXPECT_EQ(text.rfind(kOpening, 0), 0u);
  EXPECT_NE(text.find("```\nAnswer the question.\n```"), std::string::npos);
  EXPECT_EQ(text.substr(text.size() - kClosing.size()), kClosing);
  EXPECT_NE(text.find("Example 1\nInputs:\nquestion: q1\nAssistant response:\nanswer: 4\nFeedback:\nWrong."),
            std::string::npos);
}

TEST(MetaPrompt, BacktickInstructionGetsLongerFence) {
  const std::string instruction = "Use ```python``` code blocks.";
  const auto text = build_meta_prompt(instruction, {record("q", "a", 1.0, "ok")});
  EXPECT_NE(text.find("````\n" + instruction + "\n````"), std::string::npos);
  EXPECT_EQ(fence_for("plain"), "```");
  EXPECT_EQ(fence_for("a ```` b"), "`````");
}

TEST(MetaPrompt, RecordsNumberedInOrder) {
  const auto text = build_meta_prompt(
      "x", {record("first", "a", 0, "f1"), record("second", "b", 0, "f2"), record("third", "c", 0, "f3")});
  const auto one = text.find("Example 1\nInputs:\nquestion: first");
  const auto two = text.find("Example 2\nInputs:\nquestion: second");
  const auto three = text.find("Example 3\nInputs:\nquestion: third");
  ASSERT_NE(one, std::string::npos);
  ASSERT_NE(two, std::string::npos);
  ASSERT_NE(three, std::string::npos);
  EXPECT_LT(one, two);
  EXPECT_LT(two, three);
}

TEST(MetaPrompt, TemplateDiffersOnlyInSlots) {
  const std::string instruction = "Some instruction\nwith two lines";
  const std::vector<ReflectiveRecord> records{record("q", "a", 0.5, "fb")};
  const auto text = build_meta_prompt(instruction, records);
  std::string expected(kMetaPromptTemplate);
  expected.replace(expected.find(kCurrentInstructionSlot), kCurrentInstructionSlot.size(), instruction);
  expected.replace(expected.find(kExamplesSlot), kExamplesSlot.size(), serialize_records(records));
  EXPECT_EQ(text, expected);
  EXPECT_THROW(build_meta_prompt("x", {}), std::invalid_argument);
}

TEST(ExtractFencedBlock, Examples) {
  EXPECT_EQ(extract_last_fenced_block("```\nNew instruction.\n```"), "New instruction.");
  EXPECT_EQ(extract_last_fenced_block("Thoughts first.\n```\nold\n```\nand then\n```text\n  newer  \n```\nbye"),
            "newer");
  EXPECT_THROW(extract_last_fenced_block("No fences here."), NoFencedBlock);
  EXPECT_THROW(extract_last_fenced_block("```\n\n```"), NoFencedBlock);
  EXPECT_EQ(extract_last_fenced_block("Use this: ```Be brief.```"), "Be brief.");
  EXPECT_EQ(extract_last_fenced_block("````\nhas ``` inside\n````"), "has ``` inside");
}

TEST(ProposeNewInstruction, UsesReflectionGenerator) {
  ScriptedAdapter reflection;
  reflection.on(kClosing, std::string("Sure.\n```\nBe precise.\n```"));
  const auto text = propose_new_instruction(reflection, build_meta_prompt("x", {record("q", "a", 0, "f")}), "r",
                                            ExecutionOptions{0.6, 128});
  EXPECT_EQ(text, "Be precise.");
  ASSERT_EQ(reflection.requests().size(), 1u);
  EXPECT_EQ(reflection.requests()[0].temperature, 0.6);
  EXPECT_EQ(reflection.requests()[0].max_tokens, 128);
}

class ReflectiveDatasetTest : public ::testing::Test {
 protected:
  ControllerRegistry controllers = ControllerRegistry::with_builtins();
  MetricRegistry metrics = MetricRegistry::with_builtins();
  ScriptedAdapter task_model;
  ScriptedAdapter reflection;
  SystemProgram program;
  std::vector<TaskInstance> tasks;

  void SetUp() override {
    program.controller_id = "linear";
    program.modules = {module("solve", {"question"}, {"answer"}, "Answer.")};
    task_model.set_default([](const GenerationRequest& r) {
      const auto q = testing::field_of(r.messages.back().content, "question");
      return "answer: " + std::string(q == "q0" ? "yes" : "no");
    });
    for (int k = 0; k < 3; ++k) {
      TaskInstance t;
      t.input["question"] = "q" + std::to_string(k);
      t.metadata = {{"gold", "yes"}};
      tasks.push_back(t);
    }
  }

  RunContext context() { return RunContext{controllers, metrics, task_model, reflection, "exact_match"}; }
};

TEST_F(ReflectiveDatasetTest, OneRecordPerRollout) {
  RolloutBudget budget(10);
  const auto data = collect_reflective_dataset(program, program.prompts(), tasks, context(), budget, "solve", 4);
  EXPECT_EQ(data.records.size(), 3u);
  EXPECT_DOUBLE_EQ(data.sigma, 1.0 / 3.0);
  EXPECT_EQ(budget.consumed(), 3);
  EXPECT_EQ(budget.ledger().at(0), (LedgerEntry{4, Purpose::MutationMinibatch, 3}));
  EXPECT_EQ(data.records[0].module_output, "answer: yes");
  EXPECT_NE(data.records[1].feedback_text.find("incorrect"), std::string::npos);
}

TEST_F(ReflectiveDatasetTest, LoopedModuleYieldsExtraRecords) {
  controllers.add("twice_on_first", [](ModuleCaller& caller, const TaskInstance& t) {
    auto out = caller.call("solve", t.input);
    if (t.input.at("question") == "q0") out = caller.call("solve", t.input);
    return out;
  });
  program.controller_id = "twice_on_first";
  RolloutBudget budget(10);
  const auto data = collect_reflective_dataset(program, program.prompts(), tasks, context(), budget, "solve", 1);
  EXPECT_EQ(data.records.size(), 4u);
  EXPECT_EQ(budget.consumed(), 3);
}

TEST_F(ReflectiveDatasetTest, GeneratorFailureScoresZero) {
  task_model.fail_on("question: q0", "timeout");
  RolloutBudget budget(10);
  const auto data = collect_reflective_dataset(program, program.prompts(), tasks, context(), budget, "solve", 1);
  ASSERT_EQ(data.records.size(), 3u);
  EXPECT_EQ(data.records[0].module_output, "");
  EXPECT_EQ(data.records[0].outcome_score, 0.0);
  EXPECT_EQ(data.scores[0], 0.0);
  EXPECT_EQ(budget.consumed(), 3);
}

TEST_F(ReflectiveDatasetTest, ModuleFeedbackReplacesGlobal) {
  metrics.add("with_module_text", {[](const FieldMap&, const nlohmann::json&) { return 0.5; },
                                   [](const ExecutionTrace&, const FieldMap&, const nlohmann::json&) {
                                     return FeedbackBundle{0.5, "global", {{"solve", "module specific"}}};
                                   }});
  RolloutBudget budget(10);
  RunContext ctx{controllers, metrics, task_model, reflection, "with_module_text"};
  const auto data = collect_reflective_dataset(program, program.prompts(), tasks, ctx, budget, "solve", 1);
  for (const auto& r : data.records) EXPECT_EQ(r.feedback_text, "module specific");
}

TEST_F(ReflectiveDatasetTest, InsufficientBudget) {
  RolloutBudget budget(2);
  EXPECT_THROW(collect_reflective_dataset(program, program.prompts(), tasks, context(), budget, "solve", 1),
               BudgetExhausted);
  EXPECT_EQ(budget.consumed(), 0);
}

// mutate_step on a world where the score depends only on the instruction.
class MutateStepTest : public ::testing::Test {
 protected:
  ControllerRegistry controllers = ControllerRegistry::with_builtins();
  MetricRegistry metrics = MetricRegistry::with_builtins();
  ScriptedAdapter task_model;
  ScriptedAdapter reflection;
  SystemProgram program;
  DatasetSplit data;
  Pool pool{5};

  void SetUp() override {
    program.controller_id = "linear";
    program.modules = {module("solve", {"question"}, {"answer"}, "Level 1.")};
    // "Level k." answers correctly on questions q < k.
    task_model.set_default([](const GenerationRequest& r) {
      const auto& prompt = r.messages.back().content;
      const long level = testing::tag_value(prompt, "Level ");
      const long q = std::stol(testing::field_of(prompt, "question"));
      return "answer: " + std::string(q < level ? "right" : "wrong");
    });
    for (int k = 0; k < 3; ++k) data.d_feedback.push_back({{{"question", std::to_string(k)}}, {{"gold", "right"}}});
    for (int k = 0; k < 5; ++k) data.d_pareto.push_back({{{"question", std::to_string(k)}}, {{"gold", "right"}}});
    pool.add_candidate(Candidate{program.prompts(), SeedOrigin{}}, {}, {1, 0, 0, 0, 0});
  }

  RunContext context() { return RunContext{controllers, metrics, task_model, reflection, "exact_match"}; }
};

TEST_F(MutateStepTest, StrictImprovementAccepted) {
  reflection.set_default("```\nLevel 2.\n```");
  RolloutBudget budget(100);
  Rng rng(1);
  RoundRobin rr;
  const auto outcome = mutate_step(pool, 0, program, data, context(), budget, rng, rr, {3, true}, 1);
  EXPECT_TRUE(outcome.accepted);
  EXPECT_DOUBLE_EQ(outcome.sigma_before, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(outcome.sigma_after, 2.0 / 3.0);
  ASSERT_TRUE(outcome.child_index.has_value());
  EXPECT_EQ(pool.parents(*outcome.child_index), std::vector<std::size_t>{0});
  EXPECT_EQ(pool.candidate(1).prompts.at("solve"), "Level 2.");
  EXPECT_EQ(pool.scores(1), (ScoreRow{1, 1, 0, 0, 0}));
  EXPECT_FALSE(outcome.meta_prompt.empty());
  const auto ledger = budget.ledger();
  ASSERT_EQ(ledger.size(), 3u);
  EXPECT_EQ(ledger[2], (LedgerEntry{1, Purpose::ParetoEval, 5}));
  EXPECT_EQ(budget.consumed(), 3 + 3 + 5);
  EXPECT_EQ(rr.counter, 1u);
}

TEST_F(MutateStepTest, EqualScoreRejected) {
  reflection.set_default("```\nLevel 1. Try harder.\n```");
  RolloutBudget budget(100);
  Rng rng(1);
  RoundRobin rr;
  const auto outcome = mutate_step(pool, 0, program, data, context(), budget, rng, rr, {3, false}, 1);
  EXPECT_FALSE(outcome.accepted);
  EXPECT_DOUBLE_EQ(outcome.sigma_before, outcome.sigma_after);
  EXPECT_EQ(pool.size(), 1u);
  EXPECT_EQ(budget.consumed(), 6);
  EXPECT_TRUE(outcome.meta_prompt.empty());
}

TEST_F(MutateStepTest, NoFenceAbandonsAfterMinibatch) {
  reflection.set_default("I would change nothing.");
  RolloutBudget budget(100);
  Rng rng(1);
  RoundRobin rr;
  const auto outcome = mutate_step(pool, 0, program, data, context(), budget, rng, rr, {3, false}, 1);
  EXPECT_FALSE(outcome.accepted);
  EXPECT_EQ(outcome.abandoned, "no_fenced_block");
  EXPECT_EQ(budget.consumed(), 3);
  EXPECT_EQ(rr.counter, 1u);
}

TEST_F(MutateStepTest, ReflectionFailureAbandons) {
  RolloutBudget budget(100);
  Rng rng(1);
  RoundRobin rr;
  const auto outcome = mutate_step(pool, 0, program, data, context(), budget, rng, rr, {3, false}, 1);
  EXPECT_EQ(outcome.abandoned.rfind("reflection_failed", 0), 0u);
  EXPECT_EQ(pool.size(), 1u);
}

TEST_F(MutateStepTest, SameMinibatchBeforeAndAfter) {
  reflection.set_default("```\nLevel 3.\n```");
  RolloutBudget budget(100);
  Rng rng(5);
  RoundRobin rr;
  mutate_step(pool, 0, program, data, context(), budget, rng, rr, {2, false}, 1);
  const auto reqs = task_model.requests();
  ASSERT_GE(reqs.size(), 4u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(testing::field_of(reqs[k].messages.back().content, "question"),
              testing::field_of(reqs[k + 2].messages.back().content, "question"));
  }
}

}  // namespace
}  // namespace gepa
