#pragma once

// PCG32 (XSH-RR, 64-bit state) seeded through SplitMix64. The algorithm is
// fixed for the 1.x series; changing it changes every seeded artifact.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace segnoise {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for stream `index` of a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

class Pcg32 {
 public:
  using result_type = std::uint32_t;

  explicit Pcg32(std::uint64_t seed = 0x853C49E6748FEA9BULL) noexcept
      : Pcg32(splitmix64(seed), splitmix64(seed ^ 0xDA3E39CB94B95BDBULL)) {}

  Pcg32(std::uint64_t init_state, std::uint64_t stream) noexcept
      : inc_((stream << 1u) | 1u) {
    (*this)();
    state_ += init_state;
    (*this)();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return 0xFFFFFFFFu; }

  result_type operator()() noexcept {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31u));
  }

  /// Uniform in [0, 1) with 32 bits of resolution.
  double uniform() noexcept { return (*this)() * 0x1.0p-32; }

  /// Uniform in (0, 1); never returns zero.
  double uniform_open() noexcept { return ((*this)() + 0.5) * 0x1.0p-32; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
  std::uint32_t below(std::uint32_t bound) noexcept {
    std::uint64_t m = std::uint64_t{(*this)()} * bound;
    auto low = static_cast<std::uint32_t>(m);
    if (low < bound) {
      std::uint32_t threshold = (0u - bound) % bound;
      while (low < threshold) {
        m = std::uint64_t{(*this)()} * bound;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  /// Standard normal via Box-Muller (no cached second variate).
  double normal() noexcept {
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_;
};

}  // namespace segnoise
