#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace tusla {

/// SplitMix64 finaliser; used to derive independent substream seeds.
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of substream `stream` under a master seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

/// Well-known substream identifiers.
namespace streams {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kNoiseBase = 16;  // + algorithm index
inline constexpr std::uint64_t kInit = 8;
inline constexpr std::uint64_t kMonteCarlo = 9;
}  // namespace streams

/// Portable random source: std::mt19937_64 (its output sequence is fixed by
/// the standard), 53-bit uniform doubles, Marsaglia polar Gaussians. Nothing
/// here goes through std::*_distribution, whose algorithms are unspecified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform01() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }
  /// Standard normal.
  double gaussian() noexcept;
  void fill_gaussian(std::span<double> out) noexcept;

  std::uint64_t next_u64() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tusla
