#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "nplab/numerics/matrix.hpp"

namespace nplab {

/// Counter-based pseudorandom stream.
///
/// Each output is a SplitMix64 finalization of (key, counter), so a stream is
/// fully described by two integers and child streams derived with split() are
/// independent of how many values the parent has already produced.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  /// Derives an independent named substream.
  [[nodiscard]] Rng split(std::string_view name) const;
  [[nodiscard]] Rng split(std::uint64_t index) const;

  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
  double normal();

  Vector normal_vector(Index n);
  Matrix normal_matrix(Index rows, Index cols);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Independent root streams for one run.
struct RngRoots {
  Rng data;
  Rng init;
  Rng noise;
};

RngRoots seed_everything(std::uint64_t seed);

}  // namespace nplab
