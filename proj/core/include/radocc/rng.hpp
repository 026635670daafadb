#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace radocc {

/// Counter-based generator: every draw is splitmix64(key + counter), where the
/// key mixes the global seed with a named stream. Two generators with the same
/// (seed, stream) produce identical sequences on every platform, and no draw
/// depends on state outside the generator.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view stream) noexcept
      : key_(mix(seed ^ fnv1a(stream))) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix(seed ^ mix(stream + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t next_u64() noexcept { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  /// Uniform in [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : next_u64() % n; }

  /// Standard normal via Box-Muller; consumes two draws.
  double normal() noexcept {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Derives an independent child generator.
  CounterRng child(std::string_view stream) const noexcept {
    return CounterRng(key_, stream);
  }

  static constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    return h;
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace radocc
