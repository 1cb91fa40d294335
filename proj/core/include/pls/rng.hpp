#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pls {

/// Seedable, splittable pseudo-random stream.
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the C++
/// standard). Seeds and sub-streams are derived with SplitMix64, and all
/// distributions are implemented here rather than through <random>
/// distributions, whose output is implementation-defined. Two builds on
/// different standard libraries therefore produce the same draws.
class Rng {
public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+splitmix64/v1";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer on [0, bound) without modulo bias. bound > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal draw (Marsaglia polar method).
  double normal();

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace pls
