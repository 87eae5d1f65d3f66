#pragma once

#include <cstdint>
#include <vector>

namespace promnet {

// xorshift64* generator. Update rule:
//   x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;  output = x * 0x2545F4914F6CDD1D
// Integer state only, so a seeded stream replays identically on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed)) {
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
  }

  // Restores a previously captured raw state (checkpoint resume).
  static Rng from_state(std::uint64_t raw) {
    Rng r(0);
    r.state_ = raw == 0 ? 0x9E3779B97F4A7C15ULL : raw;
    return r;
  }

  std::uint64_t next_u64() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  // Uniform in [0,1) with 53 random bits.
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

  // Approximate standard normal: sum of 12 uniforms minus 6 (Irwin-Hall).
  // Additions only, so the value does not depend on the host libm.
  double next_gaussian() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += next_uniform();
    return s - 6.0;
  }

  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t state() const { return state_; }

  // splitmix64 finalizer; used for seeding and per-stream seed derivation.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive(std::uint64_t base, std::uint64_t stream) {
    return mix(base ^ mix(stream));
  }

 private:
  std::uint64_t state_;
};

}  // namespace promnet
