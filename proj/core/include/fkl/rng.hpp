#pragma once

#include <cmath>
#include <cstdint>

namespace fkl {

/// Counter-based pseudorandom generator. Each draw hashes
/// (seed, stream, counter) through a splitmix64-style finalizer, so a
/// generator is a value type: copying it replays the stream, and distinct
/// streams derived from one seed are independent. Every stochastic
/// operation in the library takes a seed or an Rng explicitly; nothing
/// draws from hidden global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  /// Independent generator for a named parallel stream (per task, per
  /// dimension, per split, ...).
  Rng stream(std::uint64_t substream) const {
    return Rng(seed_, mix(stream_ ^ mix(substream + 0x9e3779b97f4a7c15ull)));
  }

  std::uint64_t next_u64() {
    std::uint64_t x = seed_ + 0x9e3779b97f4a7c15ull * ++counter_;
    return mix(x ^ mix(stream_));
  }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe to pass to log().
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes two uniforms per draw.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Fisher-Yates index: uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace fkl
