#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gepa/compound_system.hpp"

namespace gepa {

struct FeedbackBundle {
  double score = 0.0;
  std::string feedback_text;
  std::map<std::string, std::string> module_feedback;

  bool operator==(const FeedbackBundle&) const = default;
};

struct DatasetSplit {
  std::vector<TaskInstance> d_feedback;
  std::vector<TaskInstance> d_pareto;

  bool operator==(const DatasetSplit&) const = default;
};

/// Seeded shuffle; the first n_pareto shuffled instances become d_pareto.
/// Throws InvalidSize unless 0 < n_pareto <= |d_train|.
DatasetSplit split_dataset(const std::vector<TaskInstance>& d_train, std::size_t n_pareto, std::uint64_t rng_seed);

/// Every task serves as both feedback and Pareto instance.
DatasetSplit inference_time_split(const std::vector<TaskInstance>& tasks);

using Metric = std::function<double(const FieldMap& final_output, const nlohmann::json& metadata)>;
using FeedbackFunction = std::function<FeedbackBundle(const ExecutionTrace& trace, const FieldMap& final_output,
                                                      const nlohmann::json& metadata)>;

/// A metric together with the feedback function that explains it. The
/// feedback function must report exactly the metric's score.
struct MetricPair {
  Metric metric;
  FeedbackFunction feedback;
};

/// Registry of metric/feedback pairs keyed by one id.
///
/// Built-in ids, all reading an output field named by metadata "field":
///   exact_match  metadata {field, gold: string}; whitespace-trimmed equality
///   set_f1       metadata {field, gold: [string]}; F1 between the predicted
///                item set (split on commas, semicolons, newlines) and gold
///   recall       metadata {field, gold: [string]}; fraction of gold items
///                present in the predicted set
///   constraints  metadata {field, lowercase?: bool, keywords?: [string]};
///                fraction of the listed constraints the output satisfies
class MetricRegistry {
 public:
  static MetricRegistry with_builtins();

  void add(std::string id, MetricPair pair);
  bool contains(const std::string& id) const;
  std::vector<std::string> ids() const;

  /// Throws UnknownMetric, or MetricContractViolation for scores outside [0,1].
  double evaluate(const std::string& metric_id, const FieldMap& final_output, const nlohmann::json& metadata) const;

  /// Throws UnknownFeedbackFunction, or MetricContractViolation when the
  /// bundle's score is out of range or differs from evaluate().
  FeedbackBundle evaluate_with_feedback(const std::string& feedback_id, const ExecutionTrace& trace,
                                        const FieldMap& final_output, const nlohmann::json& metadata) const;

 private:
  std::map<std::string, MetricPair> pairs_;
};

/// Items of a list-valued output: split on commas, semicolons and newlines,
/// trimmed, empties dropped.
std::vector<std::string> split_items(const std::string& text);

}  // namespace gepa
