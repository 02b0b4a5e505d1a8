#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace gepa {

/// Seeded random source used by every stochastic decision of the optimizer.
///
/// Bounded draws are computed here rather than through the standard
/// distributions so that a given seed yields the same run on every standard
/// library implementation. The engine state round-trips through text, which
/// is what makes resumed runs continue the exact random stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform real in [0, 1) with 53 bits of resolution.
  double uniform_real();

  std::string save() const;
  void load(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gepa
