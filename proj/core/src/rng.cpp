#include "simbridge/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "simbridge/errors.hpp"

namespace simbridge {

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller on two fresh uniforms; u1 nudged away from zero.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ContractViolation("Rng::below: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r < limit) return r % n;
  }
}

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_ << ' ' << (has_cached_normal_ ? 1 : 0);
  if (has_cached_normal_) {
    out << ' ' << std::hexfloat << cached_normal_;
  }
  return out.str();
}

void Rng::restore(const std::string& text) {
  std::istringstream in(text);
  in >> engine_;
  int has = 0;
  in >> has;
  if (!in) throw ContractViolation("Rng::restore: malformed state");
  has_cached_normal_ = has != 0;
  if (has_cached_normal_) {
    in >> std::hexfloat >> cached_normal_;
    if (!in) throw ContractViolation("Rng::restore: malformed cached value");
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace simbridge
