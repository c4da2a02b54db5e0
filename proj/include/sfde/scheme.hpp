#pragma once

#include <memory>
#include <string>

#include "sfde/noise.hpp"
#include "sfde/truncation.hpp"

namespace sfde {

/// State of the truncated EM recursion at step k: the current segment
/// (nodes Y((k-m)Delta) .. Y(kDelta)) and the pre-truncation value
/// yhat = Yhat(kDelta). The segment's node at zero is pi_delta(yhat).
struct SchemeState {
  long k = 0;
  Segment segment;
  Vec y_hat;
};

/// Full node record of one simulated path: Y(kDelta) and Yhat(kDelta) for
/// k = -m..N, plus the fine Brownian grid the path consumed (kept for
/// auxiliary-process evaluation and coupling checks).
struct SimulatedPath {
  Real delta = 0.0;
  long history_intervals = 0;  // m
  GridFunction nodes_y;        // times (k Delta), k = -m..N
  GridFunction nodes_y_hat;
  std::string model_id;
  std::shared_ptr<const BrownianGrid> noise;
  bool truncated = true;
  Real trunc_radius = 0.0;  // R(delta) in effect (inf when untruncated)

  long steps() const { return nodes_y.times.size() - history_intervals - 1; }  // N
  Real horizon() const { return delta * static_cast<Real>(steps()); }

  /// Column index of grid time t = k Delta, k in [-m, N]; tolerance
  /// 1e-12 relative, otherwise a domain error.
  Index index_of(Real t) const;

  /// Y at grid time t.
  Vec y_at(Real t) const { return nodes_y.values.col(index_of(t)); }

  /// The floor map: largest grid multiple of delta that is <= t.
  Real floor_time(Real t) const {
    return std::floor(t / delta) * delta;
  }
};

/// Initial state: segment nodes pi_delta(xi(i Delta)) for i = -m..0 and
/// yhat = xi(0). delta must divide tau (m is derived by rounding and
/// validated to relative 1e-12) and delta <= 1.
SchemeState init_state(const SfdeModel& model, const TruncationPolicy& policy,
                       Real delta);

/// One step of the recursion:
///   yhat' = Y(kDelta) + f(Y_k) Delta + g(Y_k) dB
///   segment' = shift_append(segment, pi_delta(yhat'))
/// Pure: same inputs give bit-identical outputs. Non-finite coefficients or
/// |yhat'| beyond 1e12 raise a blow-up error carrying the step index.
SchemeState step(SchemeState state, const SfdeModel& model,
                 const TruncationPolicy& policy, Real delta, const Vec& db);

/// Iterates the scheme to horizon_t = N Delta (N validated). The noise grid
/// may be finer than delta: its step must divide delta, and each step
/// consumes the ascending-order sum of the spanned fine increments, which is
/// bit-identical to coarsening first. With truncate = false the projection is
/// the identity (classical EM).
SimulatedPath simulate(const SfdeModel& model, const TruncationPolicy& policy,
                       Real delta, Real horizon_t,
                       std::shared_ptr<const BrownianGrid> noise,
                       bool truncate = true);

/// Convenience overload copying the grid.
SimulatedPath simulate(const SfdeModel& model, const TruncationPolicy& policy,
                       Real delta, Real horizon_t, const BrownianGrid& noise,
                       bool truncate = true);

/// Continuous auxiliary interpolant between scheme nodes:
///   Z(t) = Y(kDelta) + f(Y_k)(t - kDelta) + g(Y_k)(B(t) - B(kDelta))
/// for t in [kDelta, (k+1)Delta). t must lie on the path's fine noise grid
/// (Z(t) = xi(t) for t < 0 is not needed here; t must be in [0, horizon]).
/// At grid nodes Z(kDelta) = Y(kDelta) exactly.
Vec z_process_eval(const SimulatedPath& path, const SfdeModel& model, Real t);

/// The segment Y_k with k Delta = at_time: nodes Y(at_time - tau + i Delta),
/// i = 0..m. at_time must be a grid multiple of delta in [0, horizon].
Segment terminal_segment(const SimulatedPath& path, Real at_time);

}  // namespace sfde
