#pragma once

#include <cmath>
#include <cstdint>

namespace dynpanel {

namespace rng_detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace rng_detail

// Derives an independent sub-seed from (seed, salt). Used to key replication,
// simulation, and bootstrap-draw streams so that results do not depend on
// scheduling or worker count.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  using namespace rng_detail;
  return mix64(mix64(seed + kGolden) ^ mix64(salt + 0xD1B54A32D192ED03ULL));
}

// Counter-based generator (splitmix64): output i is mix64(key + i*golden),
// so a stream is a pure function of (seed, stream) and the draw index.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(derive_seed(seed, stream)) {}

  std::uint64_t next_u64() {
    counter_ += rng_detail::kGolden;
    return rng_detail::mix64(key_ + counter_);
  }

  // Uniform on the open interval (0,1); never returns an exact 0 or 1.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (cosine branch; two uniforms per draw).
  double next_normal() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Logistic scaled to unit variance: s*log(U/(1-U)) with s = sqrt(3)/pi.
  double next_unit_variance_logistic() {
    const double u = next_uniform();
    constexpr double scale = 0.55132889542179204;  // sqrt(3)/pi
    return scale * std::log(u / (1.0 - u));
  }

  // Uniform integer in [0, bound) by 128-bit multiply; bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dynpanel
