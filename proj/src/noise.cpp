#include "sfde/noise.hpp"

#include <bit>
#include <cstring>
#include <ostream>

namespace sfde {

namespace detail {

// Balanced dyadic summation tree over a contiguous block: split at the
// largest power of two below the length. Any chain of power-of-two
// coarsenings then reproduces the direct coarsening bit for bit.
Real dyadic_sum_scalar(const Real* x, Index stride, Index len) {
  if (len == 1) return *x;
  const Index h = static_cast<Index>(
      std::bit_floor(static_cast<std::uint64_t>(len - 1)));
  return dyadic_sum_scalar(x, stride, h) +
         dyadic_sum_scalar(x + h * stride, stride, len - h);
}

void dyadic_sum_into(const Mat& increments, Index start, Index len, Vec& out) {
  const Index rows = increments.rows();
  for (Index d = 0; d < rows; ++d)
    out(d) = dyadic_sum_scalar(increments.data() + start * rows + d, rows, len);
}

}  // namespace detail

BrownianGrid generate_brownian_grid(std::uint64_t base_seed,
                                    std::uint64_t sample_index, Index n_fine,
                                    Real delta_fine, Index dim_noise) {
  if (n_fine < 1) throw ConfigError("generate_brownian_grid: n_fine must be >= 1");
  if (!(delta_fine > 0.0))
    throw ConfigError("generate_brownian_grid: delta_fine must be positive");
  if (dim_noise < 1)
    throw ConfigError("generate_brownian_grid: dim_noise must be >= 1");

  BrownianGrid grid;
  grid.delta_fine = delta_fine;
  grid.base_seed = base_seed;
  grid.sample_index = sample_index;
  grid.sample_seed = rng::stream_key(base_seed, sample_index);
  grid.increments.resize(dim_noise, n_fine);

  rng::Xoshiro256pp gen(grid.sample_seed);
  const Real scale = std::sqrt(delta_fine);
  for (Index k = 0; k < n_fine; ++k)
    for (Index d = 0; d < dim_noise; ++d)
      grid.increments(d, k) = scale * gen.gauss();
  return grid;
}

BrownianGrid coarsen(const BrownianGrid& grid, Index factor) {
  if (factor < 1) throw ConfigError("coarsen: factor must be >= 1");
  if (grid.n_fine() % factor != 0)
    throw ConfigError("coarsen: factor must divide the number of increments");

  BrownianGrid out;
  out.delta_fine = grid.delta_fine * static_cast<Real>(factor);
  out.base_seed = grid.base_seed;
  out.sample_index = grid.sample_index;
  out.sample_seed = grid.sample_seed;

  const Index n_coarse = grid.n_fine() / factor;
  out.increments.resize(grid.dim_noise(), n_coarse);
  Vec sum(grid.dim_noise());
  for (Index j = 0; j < n_coarse; ++j) {
    detail::dyadic_sum_into(grid.increments, j * factor, factor, sum);
    out.increments.col(j) = sum;
  }
  return out;
}

void write_grid(const BrownianGrid& grid, std::ostream& out) {
  static_assert(std::endian::native == std::endian::little,
                "grid dump assumes a little-endian host");
  char header[24];
  std::memcpy(header, "SFDEBG01", 8);
  const std::uint64_t n = static_cast<std::uint64_t>(grid.n_fine());
  std::memcpy(header + 8, &n, 8);
  std::memcpy(header + 16, &grid.delta_fine, 8);
  out.write(header, sizeof(header));
  // Column-major storage is increment-major, i.e. row-major in the
  // (increment, component) layout of the format.
  out.write(reinterpret_cast<const char*>(grid.increments.data()),
            static_cast<std::streamsize>(sizeof(Real)) * grid.increments.size());
}

}  // namespace sfde
