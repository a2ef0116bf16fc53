#pragma once

#include <cstdint>

namespace mvbridge {

// Deterministic, platform-independent generator. xoshiro256++ (Blackman &
// Vigna, 2019) seeded through splitmix64 so that any 64-bit seed yields a
// well-mixed state. std::mt19937 + std::*_distribution are avoided on
// purpose: distribution output is implementation-defined and would break
// bit-reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0,1) with 53 random mantissa bits.
  double uniform();
  double uniform(double lo, double hi);

  // i in [0, n), n > 0. Unbiased via rejection.
  std::uint64_t next_below(std::uint64_t n);

  // Standard normal via Box-Muller. One value per call; the spare is cached.
  double normal();

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 step, exposed for deriving stream seeds from (seed, index)
// pairs without carrying generator state around.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace mvbridge
