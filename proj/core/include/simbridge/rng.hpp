#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace simbridge {

// Deterministic random stream. Every operation that needs randomness takes
// one of these explicitly; there is no global state. Distributions are
// hand-rolled on top of mt19937_64 so the sequence is identical across
// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the paired draw is cached.
  double normal();

  double normal(double mean, double stddev) {
    return mean + stddev * normal();
  }

  // Uniform integer in [0, n). Rejection sampling, bias-free.
  std::uint64_t below(std::uint64_t n);

  // Engine + cache state as text, for checkpoints.
  std::string state() const;
  void restore(const std::string& text);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Stream-splitting helper: derives a well-mixed child seed, so evaluation
// and auxiliary draws never disturb the main training stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace simbridge
