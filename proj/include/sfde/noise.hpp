#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>

#include "sfde/errors.hpp"
#include "sfde/types.hpp"

namespace sfde {

// Deterministic per-sample random streams: the stream key is a splitmix64
// scramble of (base_seed, sample_index), which seeds a xoshiro256++ state.
// Gaussians come from Box-Muller on 53-bit uniforms, so regeneration is
// bit-identical across platforms and independent of worker scheduling.

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream key for (base_seed, sample_index); distinct indices under one base
/// seed always map to distinct keys.
inline std::uint64_t stream_key(std::uint64_t base_seed, std::uint64_t sample_index) {
  std::uint64_t s = base_seed ^ (0x9E3779B97F4A7C15ULL * (sample_index + 1));
  return splitmix64(s);
}

/// xoshiro256++ seeded from four splitmix64 draws off the stream key.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t key) {
    for (auto& w : s_) w = splitmix64(key);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on (0, 1] with 53-bit resolution (never 0, safe under log).
  double uniform01() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; draws are paired, the spare is cached.
  double gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rng

/// One Brownian sample on an equidistant grid: column k holds
/// B((k+1) delta_fine) - B(k delta_fine). Immutable after creation.
struct BrownianGrid {
  Real delta_fine = 0.0;
  Mat increments;  // dim_noise x n_fine
  std::uint64_t base_seed = 0;
  std::uint64_t sample_index = 0;
  std::uint64_t sample_seed = 0;  // derived stream key identifying this path

  Index n_fine() const { return increments.cols(); }
  Index dim_noise() const { return increments.rows(); }
};

/// Deterministic function of (base_seed, sample_index): i.i.d. Gaussian
/// increments with variance delta_fine per coordinate, one independent
/// stream per sample.
BrownianGrid generate_brownian_grid(std::uint64_t base_seed,
                                    std::uint64_t sample_index, Index n_fine,
                                    Real delta_fine, Index dim_noise);

/// Aggregates increments to a grid coarser by `factor`: coarse increment j is
/// the ascending-order sum of fine increments [j*factor, (j+1)*factor), so
/// both grids realize the same Brownian path and composition of coarsenings
/// is bit-exact. factor must divide n_fine.
BrownianGrid coarsen(const BrownianGrid& grid, Index factor);

/// Binary debug dump: 24-byte header (magic "SFDEBG01", n_fine as 64-bit
/// unsigned, delta_fine as 64-bit float), then the increments as row-major
/// little-endian 64-bit floats (increment index major, component minor).
void write_grid(const BrownianGrid& grid, std::ostream& out);

namespace detail {

/// Balanced dyadic summation of `len` increments starting at column `start`.
/// This is the summation tree both coarsen() and the scheme's per-step
/// aggregation use, so aggregating on the fly is bit-identical to coarsening
/// first.
Real dyadic_sum_scalar(const Real* x, Index stride, Index len);
void dyadic_sum_into(const Mat& increments, Index start, Index len, Vec& out);

}  // namespace detail

}  // namespace sfde
