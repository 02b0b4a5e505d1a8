#pragma once

#include <cstdint>
#include <mutex>
#include <string_view>
#include <vector>

namespace gepa {

/// Why a rollout was spent.
enum class Purpose { InitialEval, MutationMinibatch, MinibatchReeval, ParetoEval };

std::string_view to_string(Purpose purpose);
Purpose purpose_from_string(std::string_view text);

struct LedgerEntry {
  std::int64_t iteration = 0;
  Purpose purpose = Purpose::InitialEval;
  std::int64_t count = 0;

  bool operator==(const LedgerEntry&) const = default;
};

/// Global rollout budget. All charges serialize through an internal mutex.
///
/// Consecutive charges with the same iteration and purpose are folded into a
/// single ledger entry, so the ledger reads as one line per spending phase.
class RolloutBudget {
 public:
  explicit RolloutBudget(std::int64_t limit = 0);
  RolloutBudget(const RolloutBudget& other);
  RolloutBudget& operator=(const RolloutBudget& other);

  /// Throws BudgetExhausted(count, remaining) without charging when the
  /// charge would exceed the limit.
  void charge(Purpose purpose, std::int64_t count, std::int64_t iteration);

  std::int64_t limit() const;
  std::int64_t consumed() const;
  std::int64_t remaining() const;
  bool can_afford(std::int64_t count) const;
  std::vector<LedgerEntry> ledger() const;

  /// Rebuilds a budget from persisted parts; throws std::invalid_argument
  /// when the ledger does not sum to consumed or consumed > limit.
  static RolloutBudget restore(std::int64_t limit, std::vector<LedgerEntry> ledger);

  bool operator==(const RolloutBudget& other) const;

 private:
  mutable std::mutex mutex_;
  std::int64_t limit_ = 0;
  std::int64_t consumed_ = 0;
  std::vector<LedgerEntry> ledger_;
};

}  // namespace gepa
