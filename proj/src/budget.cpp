#include "gepa/budget.hpp"

#include <stdexcept>
#include <string>

#include "gepa/errors.hpp"

namespace gepa {

std::string_view to_string(Purpose purpose) {
  switch (purpose) {
    case Purpose::InitialEval: return "initial_eval";
    case Purpose::MutationMinibatch: return "mutation_minibatch";
    case Purpose::MinibatchReeval: return "minibatch_reeval";
    case Purpose::ParetoEval: return "pareto_eval";
  }
  return "initial_eval";
}

Purpose purpose_from_string(std::string_view text) {
  if (text == "initial_eval") return Purpose::InitialEval;
  if (text == "mutation_minibatch") return Purpose::MutationMinibatch;
  if (text == "minibatch_reeval") return Purpose::MinibatchReeval;
  if (text == "pareto_eval") return Purpose::ParetoEval;
  throw std::invalid_argument("unknown budget purpose '" + std::string(text) + "'");
}

RolloutBudget::RolloutBudget(std::int64_t limit) : limit_(limit) {
  if (limit < 0) throw std::invalid_argument("budget limit must be nonnegative");
}

RolloutBudget::RolloutBudget(const RolloutBudget& other) {
  std::lock_guard lock(other.mutex_);
  limit_ = other.limit_;
  consumed_ = other.consumed_;
  ledger_ = other.ledger_;
}

RolloutBudget& RolloutBudget::operator=(const RolloutBudget& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  limit_ = other.limit_;
  consumed_ = other.consumed_;
  ledger_ = other.ledger_;
  return *this;
}

void RolloutBudget::charge(Purpose purpose, std::int64_t count, std::int64_t iteration) {
  if (count < 0) throw std::invalid_argument("cannot charge a negative rollout count");
  std::lock_guard lock(mutex_);
  const std::int64_t remaining = limit_ - consumed_;
  if (count > remaining) throw BudgetExhausted(count, remaining);
  if (count == 0) return;
  consumed_ += count;
  if (!ledger_.empty() && ledger_.back().iteration == iteration && ledger_.back().purpose == purpose) {
    ledger_.back().count += count;
  } else {
    ledger_.push_back({iteration, purpose, count});
  }
}

std::int64_t RolloutBudget::limit() const {
  std::lock_guard lock(mutex_);
  return limit_;
}

std::int64_t RolloutBudget::consumed() const {
  std::lock_guard lock(mutex_);
  return consumed_;
}

std::int64_t RolloutBudget::remaining() const {
  std::lock_guard lock(mutex_);
  return limit_ - consumed_;
}

bool RolloutBudget::can_afford(std::int64_t count) const { return count <= remaining(); }

std::vector<LedgerEntry> RolloutBudget::ledger() const {
  std::lock_guard lock(mutex_);
  return ledger_;
}

RolloutBudget RolloutBudget::restore(std::int64_t limit, std::vector<LedgerEntry> ledger) {
  RolloutBudget budget(limit);
  std::int64_t total = 0;
  for (const auto& entry : ledger) {
    if (entry.count <= 0) throw std::invalid_argument("ledger entries must have positive counts");
    total += entry.count;
  }
  if (total > limit) throw std::invalid_argument("ledger exceeds budget limit");
  budget.consumed_ = total;
  budget.ledger_ = std::move(ledger);
  return budget;
}

bool RolloutBudget::operator==(const RolloutBudget& other) const {
  if (this == &other) return true;
  std::scoped_lock lock(mutex_, other.mutex_);
  return limit_ == other.limit_ && consumed_ == other.consumed_ && ledger_ == other.ledger_;
}

}  // namespace gepa
