// Acceptance checks G1-G9. One PASS/FAIL line per criterion; exit status is
// the number of failures. `--regenerate-fixtures` rewrites the golden file
// for G4 from the reference simulation.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gepa/merge.hpp"
#include "gepa/optimizer.hpp"
#include "gepa/pareto_selection.hpp"
#include "gepa/reflective_mutation.hpp"
#include "gepa/serialization.hpp"
#include "reference_sim.hpp"
#include "worlds.hpp"

namespace {

using namespace gepa;
using json = nlohmann::json;
namespace fs = std::filesystem;

const fs::path kFixtures = GEPA_FIXTURE_DIR;

// Tolerances and limits.
constexpr double kChiSquareCritical_df2_p01 = 9.210340371976184;
constexpr double kG1Seconds = 5.0;
constexpr double kG2Seconds = 2.0;
constexpr double kG3Seconds = 10.0;
constexpr double kG4Seconds = 5.0;
constexpr double kG5Seconds = 5.0;
constexpr double kG6Seconds = 5.0;
constexpr double kG7Seconds = 30.0;
constexpr double kG8Seconds = 10.0;
constexpr double kG9Seconds = 5.0;
constexpr double kExact = 1e-12;

struct Verdict {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string fmt(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json load_fixture(const std::string& name) { return json::parse(slurp(kFixtures / name)); }

struct Harness {
  ControllerRegistry controllers = ControllerRegistry::with_builtins();
  MetricRegistry metrics = MetricRegistry::with_builtins();
  Harness() {
    testing::register_version_metric(metrics);
    testing::register_landscape_metric(metrics);
  }
  Registries registries() const { return Registries{controllers, metrics}; }
};

// ---------------------------------------------------------------------------
// G1: frontier and frequencies against an O(n^2 m) dominance oracle.

Verdict g1() {
  Verdict v;
  std::mt19937 gen(20240601);
  Rng rng(1);
  for (int trial = 0; trial < 500 && v.ok; ++trial) {
    const std::size_t n = 1 + gen() % 8;
    const std::size_t m = 1 + gen() % 6;
    ScoreMatrix s(n, ScoreRow(m));
    for (auto& row : s)
      for (auto& x : row) x = 0.25 * static_cast<double>(gen() % 5);

    std::vector<double> best(m, -1.0);
    for (const auto& row : s)
      for (std::size_t i = 0; i < m; ++i) best[i] = std::max(best[i], row[i]);
    std::vector<bool> member(n, false);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < m; ++i) member[k] = member[k] || s[k][i] == best[i];
    std::set<std::size_t> frontier;
    std::map<std::size_t, std::size_t> freq;
    for (std::size_t k = 0; k < n; ++k) {
      if (!member[k]) continue;
      bool beaten = false;
      for (std::size_t c = 0; c < n && !beaten; ++c) {
        if (c == k || !member[c]) continue;
        bool geq = true;
        bool gt = false;
        for (std::size_t i = 0; i < m; ++i) {
          geq = geq && s[c][i] >= s[k][i];
          gt = gt || s[c][i] > s[k][i];
        }
        beaten = geq && (gt || c < k);
      }
      if (beaten) continue;
      frontier.insert(k);
      for (std::size_t i = 0; i < m; ++i) freq[k] += s[k][i] == best[i];
    }

    const auto outcome = select_candidate_pareto(s, rng);
    v.require(outcome.frontier == frontier, "frontier mismatch on trial " + std::to_string(trial));
    v.require(outcome.frequencies == freq, "frequency mismatch on trial " + std::to_string(trial));
    v.require(frontier.count(outcome.selected_index) == 1, "selection outside frontier");
  }
  if (v.ok) v.detail = "500 matrices agree";
  return v;
}

// ---------------------------------------------------------------------------
// G2: uniform draws over a three-member frontier.

Verdict g2() {
  Verdict v;
  const ScoreMatrix s{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.5, 0.5, 0.5}};
  Rng rng(2);
  const auto first = select_candidate_pareto(s, rng);
  v.require(first.frontier == std::set<std::size_t>({0, 1, 2}), "frontier is not the first three candidates");
  for (std::size_t k = 0; k < 3; ++k) v.require(first.frequencies.at(k) == 1, "frequency not 1");
  for (std::size_t a = 0; a < 4; ++a)
    v.require(!dominates(s[a], s[3]) || a == 3, "fourth candidate is dominated");

  const int draws = 30000;
  std::array<int, 4> counts{};
  ++counts[first.selected_index];
  for (int k = 1; k < draws; ++k) ++counts[select_candidate_pareto(s, rng).selected_index];
  const double expected = draws / 3.0;
  double chi2 = 0.0;
  for (std::size_t k = 0; k < 3; ++k) chi2 += std::pow(counts[k] - expected, 2) / expected;
  v.require(counts[3] == 0, "off-frontier candidate was drawn");
  v.require(chi2 < kChiSquareCritical_df2_p01, "chi-square " + fmt(chi2) + " exceeds critical value");
  if (v.ok) {
    v.detail = "counts " + std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" +
               std::to_string(counts[2]) + ", chi2 = " + fmt(chi2);
  }
  return v;
}

// ---------------------------------------------------------------------------
// G3: greedy selection stalls where Pareto selection keeps a second lineage.

struct ArmResult {
  double best_mean = 0.0;
  std::size_t accepted = 0;
  std::size_t lineages = 0;
};

ArmResult run_landscape(const json& fx, SelectionStrategy strategy) {
  Harness h;
  DatasetSplit data;
  int k = 0;
  for (const auto& type : fx.at("pareto_types"))
    data.d_pareto.push_back(testing::landscape_task("p" + std::to_string(k++), type.get<std::string>()));
  for (const auto& type : fx.at("feedback_types"))
    data.d_feedback.push_back(testing::landscape_task("f" + std::to_string(k++), type.get<std::string>()));
  GepaConfig c;
  c.budget = fx.at("budget").get<std::int64_t>();
  c.minibatch_size = fx.at("minibatch_size").get<std::size_t>();
  c.n_pareto = data.d_pareto.size();
  c.rng_seed = fx.at("seed").get<std::uint64_t>();
  c.metric_id = "landscape";
  c.strategy = strategy;
  auto task = testing::landscape_task_adapter();
  auto reflection = testing::landscape_reflection_adapter();
  const auto result =
      run_gepa(c, testing::landscape_program(), data, h.registries(), Generators{*task, *reflection});
  ArmResult arm;
  arm.best_mean = result.state.pool.aggregate_score(result.best_index);
  arm.accepted = result.state.pool.size() - 1;
  arm.lineages = result.state.pool.lineage_count();
  return arm;
}

Verdict g3() {
  Verdict v;
  const auto fx = load_fixture("g3_landscape.json");
  for (const auto& [tag, row] : fx.at("table").items()) {
    const auto& entry = testing::landscape_table().at(tag);
    v.require(entry.type_a == row.at(0).get<double>() && entry.type_b == row.at(1).get<double>(),
              "scripted table differs from fixture at " + tag);
  }
  v.require(fx.at("budget") == 200 && fx.at("minibatch_size") == 3 && fx.at("pareto_types").size() == 6,
            "fixture does not use B=200, b=3, n_pareto=6");
  const auto greedy = run_landscape(fx, SelectionStrategy::Best);
  const auto pareto = run_landscape(fx, SelectionStrategy::Pareto);
  const auto& eg = fx.at("expected").at("greedy");
  const auto& ep = fx.at("expected").at("pareto");
  v.require(std::abs(greedy.best_mean - eg.at("best_mean").get<double>()) < kExact,
            "greedy best mean " + fmt(greedy.best_mean) + " differs from the hand simulation");
  v.require(greedy.accepted == eg.at("accepted").get<std::size_t>(), "greedy accepted count differs");
  v.require(std::abs(pareto.best_mean - ep.at("best_mean").get<double>()) < kExact,
            "pareto best mean " + fmt(pareto.best_mean) + " differs from the hand simulation");
  v.require(pareto.lineages == ep.at("lineages").get<std::size_t>(), "pareto lineage count differs");
  v.require(pareto.best_mean > greedy.best_mean, "pareto does not beat greedy");
  v.require(greedy.accepted <= pareto.lineages, "greedy accepted more than pareto has lineages");
  if (v.ok) {
    v.detail = "pareto " + fmt(pareto.best_mean) + " (" + std::to_string(pareto.lineages) + " lineages) vs greedy " +
               fmt(greedy.best_mean) + " (" + std::to_string(greedy.accepted) + " accepted)";
  }
  return v;
}

// ---------------------------------------------------------------------------
// G4: engine run equals the straight-line reference, byte for byte.

testing::ReferenceConfig g4_config() { return testing::ReferenceConfig{}; }

std::string engine_fixture(const RunState& state) {
  std::vector<std::vector<std::string>> lines;
  for (std::size_t k = 0; k < state.pool.size(); ++k) {
    std::string parents = "-";
    const auto& ps = state.pool.parents(k);
    for (std::size_t q = 0; q < ps.size(); ++q) parents = (q ? parents + "," : std::string()) + std::to_string(ps[q]);
    std::string row;
    const auto& scores = state.pool.scores(k);
    for (std::size_t i = 0; i < scores.size(); ++i)
      row += (i ? "," : "") + testing::reference_detail::shortest(scores[i]);
    std::vector<std::string> fields{std::to_string(k), parents};
    for (const auto& [module, prompt] : state.pool.candidate(k).prompts) fields.push_back(module + "=" + prompt);
    fields.push_back(row);
    lines.push_back(fields);
  }
  return testing::fixture_text(lines, ledger_csv(state.budget), history_csv(state.history));
}

Verdict g4() {
  Verdict v;
  const auto cfg = g4_config();
  const std::string golden = slurp(kFixtures / "g4_golden.txt");
  v.require(!golden.empty(), "missing fixture g4_golden.txt");
  v.require(testing::reference_fixture(cfg) == golden, "reference simulation no longer matches the fixture");

  Harness h;
  GepaConfig c;
  c.budget = cfg.budget;
  c.minibatch_size = cfg.b;
  c.n_pareto = cfg.n_pareto;
  c.rng_seed = cfg.seed;
  c.metric_id = "version_world";
  auto task = testing::version_task_adapter();
  auto reflection = testing::version_reflection_adapter();
  const auto result = run_gepa(c, testing::version_program(), testing::version_tasks(cfg.train_size, cfg.params),
                               h.registries(), Generators{*task, *reflection});
  const std::string engine = engine_fixture(result.state);
  if (engine != golden) {
    std::size_t at = 0;
    while (at < engine.size() && at < golden.size() && engine[at] == golden[at]) ++at;
    v.require(false, "engine export differs from fixture at byte " + std::to_string(at));
  }

  const auto& budget = result.state.budget;
  v.require(budget.consumed() <= 60, "consumed " + std::to_string(budget.consumed()) + " > 60");
  std::map<std::int64_t, std::int64_t> per_step;
  for (const auto& e : budget.ledger())
    if (e.iteration > 0) per_step[e.iteration] += e.count;
  const auto b = static_cast<std::int64_t>(cfg.b);
  const auto n = static_cast<std::int64_t>(cfg.n_pareto);
  for (const auto& [it, cost] : per_step)
    v.require(cost == 2 * b || cost == 2 * b + n, "iteration " + std::to_string(it) + " cost " + std::to_string(cost));
  if (v.ok) {
    v.detail = std::to_string(result.state.pool.size()) + " candidates, " + std::to_string(per_step.size()) +
               " steps, " + std::to_string(budget.consumed()) + "/60 rollouts";
  }
  return v;
}

// ---------------------------------------------------------------------------
// G5: merge predicates against brute force; two-parent and cap invariants.

Verdict g5() {
  Verdict v;
  std::mt19937 gen(55);
  const std::vector<std::string> alphabet{"x", "y", "z"};
  int cases = 0;
  int proposals = 0;
  while (cases < 1000 && v.ok) {
    const std::size_t n = 3 + gen() % 3;
    const std::size_t modules = 1 + gen() % 4;
    const std::size_t m = 1 + gen() % 3;
    Pool pool(m);
    for (std::size_t k = 0; k < n; ++k) {
      PromptMap prompts;
      for (std::size_t q = 0; q < modules; ++q) prompts["m" + std::to_string(q)] = alphabet[gen() % alphabet.size()];
      std::vector<std::size_t> parents;
      if (k > 0) parents.push_back(gen() % k);
      if (k > 1 && gen() % 4 == 0) {
        const std::size_t other = gen() % k;
        if (other != parents[0]) parents.push_back(other);
      }
      ScoreRow row;
      for (std::size_t i = 0; i < m; ++i) row.push_back(0.25 * static_cast<double>(gen() % 5));
      pool.add_candidate(Candidate{prompts, SeedOrigin{}}, parents, row);
    }
    const auto aggregate = pool.aggregate_scores();

    const std::size_t a = gen() % n;
    std::size_t i = gen() % n;
    std::size_t j = gen() % n;
    if (i == j) continue;
    ++cases;
    const auto& pa = pool.candidate(a).prompts;
    const auto& pi = pool.candidate(i).prompts;
    const auto& pj = pool.candidate(j).prompts;
    bool want_desirable = false;
    for (const auto& [module, prompt] : pa) want_desirable |= (pi.at(module) != prompt) != (pj.at(module) != prompt);
    v.require(desirable(a, i, j, pool) == want_desirable, "desirable() disagrees on case " + std::to_string(cases));

    Rng rng(cases);
    const auto proposal = combine(pool, a, i, j, aggregate, rng, 1);
    for (const auto& [module, branch] : proposal.branches) {
      const auto& x = pa.at(module);
      const auto& xi = pi.at(module);
      const auto& xj = pj.at(module);
      MergeBranch want = MergeBranch::Default;
      if (xi == x && xj != x) want = MergeBranch::TakeJ;
      else if (xj == x && xi != x) want = MergeBranch::TakeI;
      else if (xi != x && xj != x && xi != xj) want = MergeBranch::BetterOfBoth;
      v.require(branch == want, "branch mismatch for " + module + " on case " + std::to_string(cases));
      const auto& got = proposal.child.prompts.at(module);
      switch (want) {
        case MergeBranch::TakeJ: v.require(got == xj, "take_j prompt"); break;
        case MergeBranch::TakeI: v.require(got == xi, "take_i prompt"); break;
        case MergeBranch::Default: v.require(got == xi, "default prompt"); break;
        case MergeBranch::BetterOfBoth:
          if (aggregate[i] > aggregate[j]) v.require(got == xi, "better_of_both should take i");
          else if (aggregate[j] > aggregate[i]) v.require(got == xj, "better_of_both should take j");
          else v.require(got == xi || got == xj, "tie must pick one parent");
          break;
      }
    }

    // Cap and two-parent invariant over repeated merge attempts.
    MergeAttemptLog log;
    log.max_invocations = 5;
    Pool grown = pool;
    for (int round = 0; round < 12; ++round) {
      const auto p = merge_candidates(grown, grown.aggregate_scores(), rng, log, round + 1);
      if (!p) continue;
      ++proposals;
      const auto ai = grown.ancestors(p->i);
      const auto aj = grown.ancestors(p->j);
      v.require(p->i != p->j, "merge of a candidate with itself");
      v.require(!ai.count(p->j) && !aj.count(p->i), "merge parents in direct ancestry");
      v.require(ai.count(p->ancestor) && aj.count(p->ancestor), "ancestor not common to both parents");
      const auto child = grown.add_candidate(p->child, {p->i, p->j}, grown.scores(p->i));
      v.require(grown.parents(child).size() == 2, "merge child without two parents");
    }
    v.require(log.invocations_used <= 5, "merge cap exceeded");
  }

  Harness h;
  GepaConfig c;
  c.budget = 2000;
  c.minibatch_size = 2;
  c.n_pareto = 4;
  c.metric_id = "version_world";
  c.merge_enabled = true;
  c.max_merge_invocations = 5;
  c.merge_iterations = {};
  auto task = testing::version_task_adapter();
  auto reflection = testing::version_reflection_adapter();
  std::size_t merges = 0;
  RunOptions options;
  options.on_merge = [&](const MergeOutcome& m, std::int64_t) { merges += m.attempted; };
  const auto result = run_gepa(c, testing::version_program(), testing::version_tasks(10, {}), h.registries(),
                               Generators{*task, *reflection}, options);
  v.require(merges <= 5 && result.state.merge_log.invocations_used <= 5, "optimizer exceeded the merge cap");
  for (const auto& rec : result.state.history) {
    if (rec.action == StepAction::Merge && rec.accepted)
      v.require(result.state.pool.parents(*rec.child).size() == 2, "accepted merge without two parents");
  }
  if (v.ok) {
    v.detail = std::to_string(cases) + " cases, " + std::to_string(proposals) + " proposals, " +
               std::to_string(merges) + " merges in a full run";
  }
  return v;
}

// ---------------------------------------------------------------------------
// G6: the meta-prompt is the fixed skeleton with two filled regions.

Verdict g6() {
  Verdict v;
  const std::string opening = "I provided an assistant with the following instructions";
  const std::string closing = "Provide the new instructions within ``` blocks";
  const std::string tpl(kMetaPromptTemplate);
  v.require(tpl.rfind(opening, 0) == 0, "template does not open with the skeleton");
  v.require(tpl.find(closing) != std::string::npos && tpl.find(closing) == tpl.size() - closing.size() - 1,
            "template does not close with the skeleton");

  const std::string slot_a(kCurrentInstructionSlot);
  const std::string slot_b(kExamplesSlot);
  const auto pos_a = tpl.find(slot_a);
  const auto pos_b = tpl.find(slot_b);
  v.require(pos_a != std::string::npos && tpl.find(slot_a, pos_a + 1) == std::string::npos, "slot A not unique");
  v.require(pos_b != std::string::npos && tpl.find(slot_b, pos_b + 1) == std::string::npos, "slot B not unique");
  v.require(pos_a < pos_b, "slots out of order");
  if (!v.ok) return v;
  const std::string head = tpl.substr(0, pos_a);
  const std::string middle = tpl.substr(pos_a + slot_a.size(), pos_b - pos_a - slot_a.size());
  const std::string tail = tpl.substr(pos_b + slot_b.size());

  std::mt19937 gen(6);
  const std::vector<std::string> words{"answer", "carefully", "the", "question", "list", "facts", "in", "order"};
  for (int trial = 0; trial < 200 && v.ok; ++trial) {
    std::string instruction;
    for (int w = 0; w < 1 + static_cast<int>(gen() % 12); ++w) instruction += (w ? " " : "") + words[gen() % words.size()];
    std::vector<ReflectiveRecord> records;
    for (int r = 0; r < 1 + static_cast<int>(gen() % 4); ++r) {
      records.push_back({{{"question", words[gen() % words.size()]}}, {{"question", "q"}},
                         "answer: " + words[gen() % words.size()], 0.25 * (gen() % 5), "feedback " + std::to_string(r)});
    }
    const auto prompt = build_meta_prompt(instruction, records);
    v.require(prompt.rfind(head, 0) == 0, "prefix differs from template");
    v.require(prompt.size() >= head.size() + tail.size() &&
                  prompt.compare(prompt.size() - tail.size(), tail.size(), tail) == 0,
              "suffix differs from template");
    if (!v.ok) break;
    const std::string inner = prompt.substr(head.size(), prompt.size() - head.size() - tail.size());
    const auto split = inner.find(middle);
    v.require(split != std::string::npos && inner.find(middle, split + 1) == std::string::npos,
              "middle segment not found exactly once");
    if (!v.ok) break;
    v.require(inner.substr(0, split) == instruction, "first region is not the instruction");
    const std::string second = inner.substr(split + middle.size());
    v.require(second == serialize_records(records), "second region is not the serialized examples");
    for (std::size_t r = 0; r < records.size(); ++r)
      v.require(second.find(records[r].feedback_text) != std::string::npos, "feedback missing from examples");
  }
  if (v.ok) v.detail = "200 prompts diff to exactly two regions";
  return v;
}

// ---------------------------------------------------------------------------
// G7: monotone best, equal seeds give equal exports, resume equals a full run.

Verdict g7() {
  Verdict v;
  std::mt19937 gen(77);
  Harness h;
  int resumed = 0;
  for (int run = 0; run < 50 && v.ok; ++run) {
    testing::VersionParams params{1 + static_cast<long>(gen() % 4), 1 + static_cast<long>(gen() % 4),
                                  3 + static_cast<long>(gen() % 5)};
    const std::size_t train = 8 + gen() % 9;
    GepaConfig c;
    c.n_pareto = 2 + gen() % 4;
    c.minibatch_size = 1 + gen() % 4;
    c.budget = static_cast<std::int64_t>(c.n_pareto + gen() % 240);
    c.rng_seed = gen();
    c.metric_id = "version_world";
    c.strategy = gen() % 2 ? SelectionStrategy::Pareto : SelectionStrategy::Best;
    c.merge_enabled = gen() % 2 == 0;
    c.max_merge_invocations = 1 + gen() % 5;
    const auto tasks = testing::version_tasks(train, params);

    auto fresh_run = [&](const RunOptions& options) {
      auto task = testing::version_task_adapter();
      auto reflection = testing::version_reflection_adapter();
      return run_gepa(c, testing::version_program(), tasks, h.registries(), Generators{*task, *reflection}, options);
    };
    const auto a = fresh_run({});
    const auto b = fresh_run({});
    const std::string export_a = dump_state(a.state);
    v.require(export_a == dump_state(b.state), "equal seeds diverged on run " + std::to_string(run));

    double best = -1.0;
    for (const auto& rec : a.state.history) {
      v.require(rec.best_mean_so_far >= best, "best_mean_so_far decreased on run " + std::to_string(run));
      best = rec.best_mean_so_far;
    }

    if (a.state.history.size() >= 2) {
      RunOptions stop;
      stop.stop_after_iterations = 1 + static_cast<std::int64_t>(gen() % (a.state.history.size() - 1));
      auto partial = fresh_run(stop);
      auto restored = state_from_json(json::parse(dump_state(partial.state)));
      auto task = testing::version_task_adapter();
      auto reflection = testing::version_reflection_adapter();
      continue_run(restored, h.registries(), Generators{*task, *reflection});
      v.require(dump_state(restored) == export_a, "resume diverged on run " + std::to_string(run));
      ++resumed;
    }
  }
  if (v.ok) v.detail = "50 runs, " + std::to_string(resumed) + " resumed mid-run";
  return v;
}

// ---------------------------------------------------------------------------
// G8: the constraint task improves from 0 to the fixture threshold.

Verdict g8() {
  Verdict v;
  const auto fx = load_fixture("g8_constraint.json");
  Harness h;
  GepaConfig c;
  c.budget = fx.at("budget").get<std::int64_t>();
  c.minibatch_size = fx.at("minibatch_size").get<std::size_t>();
  c.n_pareto = fx.at("n_pareto").get<std::size_t>();
  c.rng_seed = fx.at("seed").get<std::uint64_t>();
  c.metric_id = "constraints";
  auto task = testing::constraint_task_adapter();
  auto reflection = testing::constraint_reflection_adapter();
  const auto result = run_gepa(c, testing::constraint_program(), testing::constraint_tasks(), h.registries(),
                               Generators{*task, *reflection});
  const double seed_mean = result.state.pool.aggregate_score(0);
  const double best_mean = result.state.pool.aggregate_score(result.best_index);
  v.require(std::abs(seed_mean - fx.at("seed_mean").get<double>()) < kExact, "seed mean " + fmt(seed_mean));
  v.require(best_mean >= fx.at("threshold").get<double>(), "best mean " + fmt(best_mean) + " below threshold");
  v.require(result.state.budget.consumed() <= c.budget, "budget exceeded");
  if (v.ok) {
    v.detail = "d_pareto mean " + fmt(seed_mean) + " -> " + fmt(best_mean) + " in " +
               std::to_string(result.state.budget.consumed()) + " rollouts";
  }
  return v;
}

// ---------------------------------------------------------------------------
// G9: inference-time search harvests every task's maximum.

Verdict g9() {
  Verdict v;
  Harness h;
  GepaConfig c;
  c.minibatch_size = 1;
  c.budget = 60;
  c.metric_id = "exact_match";
  auto task = testing::specialist_task_adapter();
  auto reflection = testing::specialist_reflection_adapter();
  const auto tasks = testing::specialist_tasks(3);
  const auto result =
      run_inference_time_search(c, testing::specialist_program(), tasks, h.registries(), Generators{*task, *reflection});
  v.require(result.state.datasets.d_feedback == tasks && result.state.datasets.d_pareto == tasks,
            "tasks are not both feedback and pareto instances");
  v.require(result.reports.size() == 3, "expected three task reports");
  std::set<std::size_t> sources;
  for (const auto& r : result.reports) {
    v.require(r.best_score == 1.0, "task " + std::to_string(r.task_index) + " reached " + fmt(r.best_score));
    v.require(r.output.at("answer") == "solution-" + std::to_string(r.task_index), "stored output is not the solution");
    sources.insert(r.candidate_index);
  }
  v.require(sources.size() == 3, "reports do not come from three specialists");
  v.require(result.state.pool.aggregate_score(result.state.pool.best_by_average()) < 1.0,
            "a single candidate solves everything");
  if (v.ok) v.detail = "3/3 tasks at their maximum from " + std::to_string(sources.size()) + " candidates";
  return v;
}

int regenerate() {
  const auto text = testing::reference_fixture(g4_config());
  std::ofstream(kFixtures / "g4_golden.txt", std::ios::binary) << text;
  std::cout << "wrote " << (kFixtures / "g4_golden.txt").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && std::strcmp(argv[1], "--regenerate-fixtures") == 0) return regenerate();

  struct Criterion {
    const char* id;
    const char* title;
    double limit_s;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria{
      {"G1", "pareto oracle equivalence", kG1Seconds, g1},
      {"G2", "sampling law", kG2Seconds, g2},
      {"G3", "greedy plateau versus frontier", kG3Seconds, g3},
      {"G4", "loop conformance", kG4Seconds, g4},
      {"G5", "merge conformance", kG5Seconds, g5},
      {"G6", "meta-prompt fidelity", kG6Seconds, g6},
      {"G7", "monotonicity and determinism", kG7Seconds, g7},
      {"G8", "end-to-end improvement", kG8Seconds, g8},
      {"G9", "inference-time mode", kG9Seconds, g9},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict verdict;
    try {
      verdict = c.check();
    } catch (const std::exception& e) {
      verdict.ok = false;
      verdict.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (verdict.ok && seconds >= c.limit_s) {
      verdict.ok = false;
      verdict.detail += " (took " + fmt(seconds) + " s, limit " + fmt(c.limit_s) + " s)";
    }
    failures += verdict.ok ? 0 : 1;
    std::printf("%s %s %s: %s [%.3f s]\n", verdict.ok ? "PASS" : "FAIL", c.id, c.title, verdict.detail.c_str(),
                seconds);
  }
  std::fflush(stdout);
  return failures;
}
