#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rheat {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed from (seed, a, b), e.g. (base, replica, level).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(seed) ^ (a + 0x9e3779b97f4a7c15ULL)) ^
               (b + 0x632be59bd9b4e019ULL));
}

/// Counter-based standard normal stream: the k-th variate depends only on
/// (seed, k), so any partition of the draws across threads gives the same
/// numbers.
class CounterNormal {
 public:
  explicit constexpr CounterNormal(std::uint64_t seed) noexcept
      : key_(mix64(seed)) {}

  double operator()(std::uint64_t counter) const noexcept {
    // Box-Muller on two SplitMix64 positions; u1 in (0,1] keeps the log finite.
    const double u1 = (static_cast<double>(bits(2 * counter) >> 11) + 1.0) * 0x1p-53;
    const double u2 = static_cast<double>(bits(2 * counter + 1) >> 11) * 0x1p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t bits(std::uint64_t position) const noexcept {
    return mix64(key_ + (position + 1) * 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t key_;
};

}  // namespace rheat
