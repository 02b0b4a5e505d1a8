#include "gepa/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include "gepa/random.hpp"

namespace gepa {

using json = nlohmann::json;

DatasetSplit split_dataset(const std::vector<TaskInstance>& d_train, std::size_t n_pareto, std::uint64_t rng_seed) {
  if (n_pareto == 0 || n_pareto > d_train.size())
    throw InvalidSize("n_pareto=" + std::to_string(n_pareto) + " outside [1, " + std::to_string(d_train.size()) + "]");
  std::vector<std::size_t> order(d_train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(rng_seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  DatasetSplit split;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_pareto ? split.d_pareto : split.d_feedback).push_back(d_train[order[k]]);
  }
  return split;
}

DatasetSplit inference_time_split(const std::vector<TaskInstance>& tasks) {
  if (tasks.empty()) throw InvalidSize("inference-time search needs at least one task");
  return DatasetSplit{tasks, tasks};
}

// ---------------------------------------------------------------------------
// Built-in metrics

namespace {

std::string trimmed(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::string output_field(const FieldMap& output, const json& metadata) {
  const std::string field = metadata.value("field", std::string("answer"));
  const auto it = output.find(field);
  return it == output.end() ? std::string() : it->second;
}

std::vector<std::string> gold_items(const json& metadata) {
  std::vector<std::string> gold;
  for (const auto& item : metadata.value("gold", json::array())) gold.push_back(item.get<std::string>());
  return gold;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

// exact_match

double exact_match_score(const FieldMap& output, const json& metadata) {
  return trimmed(output_field(output, metadata)) == trimmed(metadata.value("gold", std::string())) ? 1.0 : 0.0;
}

FeedbackBundle exact_match_feedback(const ExecutionTrace&, const FieldMap& output, const json& metadata) {
  FeedbackBundle bundle;
  bundle.score = exact_match_score(output, metadata);
  if (bundle.score == 1.0) {
    bundle.feedback_text = "The response matches the expected answer.";
  } else {
    bundle.feedback_text = "The response `" + trimmed(output_field(output, metadata)) +
                           "` is incorrect. The expected answer is `" + metadata.value("gold", std::string()) + "`.";
  }
  return bundle;
}

// set_f1 / recall share the same item comparison.

struct SetComparison {
  std::vector<std::string> hits;
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

SetComparison compare_sets(const FieldMap& output, const json& metadata) {
  const auto predicted_items = split_items(output_field(output, metadata));
  const std::set<std::string> predicted(predicted_items.begin(), predicted_items.end());
  const auto gold_list = gold_items(metadata);
  const std::set<std::string> gold(gold_list.begin(), gold_list.end());
  SetComparison cmp;
  cmp.predicted = predicted.size();
  cmp.gold = gold.size();
  for (const auto& g : gold_list) {
    if (std::find(cmp.hits.begin(), cmp.hits.end(), g) != cmp.hits.end() ||
        std::find(cmp.missing.begin(), cmp.missing.end(), g) != cmp.missing.end())
      continue;
    (predicted.count(g) ? cmp.hits : cmp.missing).push_back(g);
  }
  for (const auto& p : predicted_items) {
    if (!gold.count(p) && std::find(cmp.extra.begin(), cmp.extra.end(), p) == cmp.extra.end()) cmp.extra.push_back(p);
  }
  return cmp;
}

double set_f1_score(const FieldMap& output, const json& metadata) {
  const auto cmp = compare_sets(output, metadata);
  if (cmp.gold == 0 && cmp.predicted == 0) return 1.0;
  if (cmp.hits.empty()) return 0.0;
  const double precision = static_cast<double>(cmp.hits.size()) / static_cast<double>(cmp.predicted);
  const double recall = static_cast<double>(cmp.hits.size()) / static_cast<double>(cmp.gold);
  return 2.0 * precision * recall / (precision + recall);
}

FeedbackBundle set_f1_feedback(const ExecutionTrace&, const FieldMap& output, const json& metadata) {
  const auto cmp = compare_sets(output, metadata);
  FeedbackBundle bundle;
  bundle.score = set_f1_score(output, metadata);
  if (cmp.missing.empty() && cmp.extra.empty()) {
    bundle.feedback_text = "All expected items were produced and nothing extra; all constraints satisfied.";
    return bundle;
  }
  bundle.feedback_text = "Correct items: " + (cmp.hits.empty() ? std::string("none") : join(cmp.hits)) + ".";
  if (!cmp.missing.empty()) bundle.feedback_text += " Missing items: " + join(cmp.missing) + ".";
  if (!cmp.extra.empty()) bundle.feedback_text += " Unexpected items: " + join(cmp.extra) + ".";
  return bundle;
}

double recall_score(const FieldMap& output, const json& metadata) {
  const auto cmp = compare_sets(output, metadata);
  if (cmp.gold == 0) return 1.0;
  return static_cast<double>(cmp.hits.size()) / static_cast<double>(cmp.gold);
}

FeedbackBundle recall_feedback(const ExecutionTrace&, const FieldMap& output, const json& metadata) {
  const auto cmp = compare_sets(output, metadata);
  FeedbackBundle bundle;
  bundle.score = recall_score(output, metadata);
  if (cmp.missing.empty()) {
    bundle.feedback_text = "All gold documents were retrieved; all constraints satisfied.";
    return bundle;
  }
  bundle.feedback_text = "Correct documents retrieved: " + (cmp.hits.empty() ? std::string("none") : join(cmp.hits)) +
                         ". Documents remaining to be retrieved: " + join(cmp.missing) + ".";
  return bundle;
}

// constraints

struct ConstraintCheck {
  std::vector<std::string> satisfied;
  std::vector<std::string> violated;
};

ConstraintCheck check_constraints(const FieldMap& output, const json& metadata) {
  const std::string text = trimmed(output_field(output, metadata));
  const bool empty = text.empty();
  ConstraintCheck check;
  if (metadata.value("lowercase", false)) {
    const bool ok = !empty && std::none_of(text.begin(), text.end(),
                                           [](unsigned char c) { return std::isupper(c) != 0; });
    (ok ? check.satisfied : check.violated).push_back("the response must be entirely lowercase");
  }
  for (const auto& keyword : metadata.value("keywords", json::array())) {
    const auto word = keyword.get<std::string>();
    const bool ok = !empty && text.find(word) != std::string::npos;
    (ok ? check.satisfied : check.violated).push_back("the response must contain the keyword \"" + word + "\"");
  }
  return check;
}

double constraints_score(const FieldMap& output, const json& metadata) {
  const auto check = check_constraints(output, metadata);
  const auto total = check.satisfied.size() + check.violated.size();
  if (total == 0) return 1.0;
  return static_cast<double>(check.satisfied.size()) / static_cast<double>(total);
}

FeedbackBundle constraints_feedback(const ExecutionTrace&, const FieldMap& output, const json& metadata) {
  const auto check = check_constraints(output, metadata);
  FeedbackBundle bundle;
  bundle.score = constraints_score(output, metadata);
  if (check.violated.empty()) {
    bundle.feedback_text = "All constraints satisfied.";
    return bundle;
  }
  bundle.feedback_text = "Violated constraints: " + join(check.violated) + ".";
  if (!check.satisfied.empty()) bundle.feedback_text += " Satisfied constraints: " + join(check.satisfied) + ".";
  return bundle;
}

void check_range(const std::string& id, double score) {
  if (!(score >= 0.0 && score <= 1.0))
    throw MetricContractViolation("metric '" + id + "' produced score " + std::to_string(score) + " outside [0,1]");
}

}  // namespace

std::vector<std::string> split_items(const std::string& text) {
  std::vector<std::string> items;
  std::string current;
  auto flush = [&] {
    auto item = trimmed(current);
    if (!item.empty()) items.push_back(std::move(item));
    current.clear();
  };
  for (char c : text) {
    if (c == ',' || c == ';' || c == '\n') {
      flush();
    } else {
      current += c;
    }
  }
  flush();
  return items;
}

MetricRegistry MetricRegistry::with_builtins() {
  MetricRegistry registry;
  registry.add("exact_match", {exact_match_score, exact_match_feedback});
  registry.add("set_f1", {set_f1_score, set_f1_feedback});
  registry.add("recall", {recall_score, recall_feedback});
  registry.add("constraints", {constraints_score, constraints_feedback});
  return registry;
}

void MetricRegistry::add(std::string id, MetricPair pair) { pairs_[std::move(id)] = std::move(pair); }

bool MetricRegistry::contains(const std::string& id) const { return pairs_.count(id) > 0; }

std::vector<std::string> MetricRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : pairs_) out.push_back(id);
  return out;
}

double MetricRegistry::evaluate(const std::string& metric_id, const FieldMap& final_output,
                                const json& metadata) const {
  const auto it = pairs_.find(metric_id);
  if (it == pairs_.end()) throw UnknownMetric(metric_id);
  const double score = it->second.metric(final_output, metadata);
  check_range(metric_id, score);
  return score;
}

FeedbackBundle MetricRegistry::evaluate_with_feedback(const std::string& feedback_id, const ExecutionTrace& trace,
                                                      const FieldMap& final_output, const json& metadata) const {
  const auto it = pairs_.find(feedback_id);
  if (it == pairs_.end()) throw UnknownFeedbackFunction(feedback_id);
  FeedbackBundle bundle = it->second.feedback(trace, final_output, metadata);
  check_range(feedback_id, bundle.score);
  const double expected = it->second.metric(final_output, metadata);
  if (bundle.score != expected)
    throw MetricContractViolation("feedback function '" + feedback_id + "' reported " +
                                  std::to_string(bundle.score) + " but its metric scores " +
                                  std::to_string(expected));
  return bundle;
}

}  // namespace gepa
