#pragma once

#include <cstdint>
#include <string_view>

namespace tsg {

// Deterministic splitmix64 generator. Every stochastic choice in the project
// (parameter init, corpus synthesis, shuffles) flows through this class so
// runs are reproducible bit-for-bit across platforms. Standard-library
// distributions are avoided on purpose: their output sequences are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Independent child stream, e.g. Rng(seed).fork("captioner").
  Rng(std::uint64_t seed, std::string_view tag) : state_(seed ^ hash64(tag)) {
    next_u64();  // decorrelate from the parent seed
  }

  Rng fork(std::string_view tag) const { return Rng(state_, tag); }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Box-Muller; both values of each pair are used, so draws stay aligned.
  double normal(double mean, double stddev);

  // Geometric count of failures before first success, P(success) = p.
  // Used for event durations: 1 + geometric(1/mean) has mean `mean`.
  std::uint64_t geometric(double p);

  static std::uint64_t hash64(std::string_view s);  // FNV-1a

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tsg
