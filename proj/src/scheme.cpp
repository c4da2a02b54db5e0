#include "sfde/scheme.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace sfde {

namespace {

constexpr Real kBlowUpThreshold = 1e12;

long derive_intervals(Real tau, Real delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw ConfigError("scheme: delta must lie in (0, 1]");
  const long m = std::lround(tau / delta);
  if (m < 1 || std::abs(static_cast<Real>(m) * delta - tau) > 1e-12 * tau)
    throw ConfigError("scheme: delta must divide tau (delta = tau/m)");
  return m;
}

SchemeState init_with_radius(const SfdeModel& model, Real delta, Real r) {
  const long m = derive_intervals(model.tau, delta);
  Mat nodes(model.dim_state, m + 1);
  for (long i = 0; i <= m; ++i) {
    const Real t = static_cast<Real>(i - m) * delta;
    nodes.col(i) = pi_delta(model.initial(std::max(t, -model.tau)), r);
  }
  return SchemeState{0, Segment(std::move(nodes), delta), model.initial(0.0)};
}

SchemeState step_with_radius(SchemeState state, const SfdeModel& model,
                             Real delta, const Vec& db, Real r) {
  if (db.size() != model.dim_noise)
    throw ConfigError("step: noise increment dimension mismatch");
  if (!db.allFinite()) throw DomainError("step: noise increment must be finite");

  const Vec f = model.drift(state.segment);
  const Mat g = model.diffusion(state.segment);
  if (!f.allFinite() || !g.allFinite())
    throw BlowUpError(state.k, "scheme: non-finite drift/diffusion at step " +
                                   std::to_string(state.k));

  Vec y_hat = state.segment.at_zero() + delta * f + g * db;
  const Real n = y_hat.norm();
  if (!std::isfinite(n) || n > kBlowUpThreshold)
    throw BlowUpError(state.k + 1, "scheme: state blew up at step " +
                                       std::to_string(state.k + 1));

  state.segment = std::move(state.segment).shifted(pi_delta(y_hat, r));
  state.y_hat = std::move(y_hat);
  state.k += 1;
  return state;
}

}  // namespace

Index SimulatedPath::index_of(Real t) const {
  const long k = std::lround(t / delta);
  const long m = history_intervals;
  if (std::abs(static_cast<Real>(k) * delta - t) >
      1e-12 * std::max(delta, std::abs(t)))
    throw DomainError("SimulatedPath: time is not on the grid");
  if (k < -m || k > steps())
    throw DomainError("SimulatedPath: time outside the simulated range");
  return static_cast<Index>(m + k);
}

SchemeState init_state(const SfdeModel& model, const TruncationPolicy& policy,
                       Real delta) {
  model.validate();
  policy.validate();
  derive_intervals(model.tau, delta);  // reject bad deltas as config errors
  return init_with_radius(model, delta, radius(policy, delta));
}

SchemeState step(SchemeState state, const SfdeModel& model,
                 const TruncationPolicy& policy, Real delta, const Vec& db) {
  return step_with_radius(std::move(state), model, delta, db,
                          radius(policy, delta));
}

SimulatedPath simulate(const SfdeModel& model, const TruncationPolicy& policy,
                       Real delta, Real horizon_t,
                       std::shared_ptr<const BrownianGrid> noise,
                       bool truncate) {
  model.validate();
  policy.validate();
  if (!noise) throw ConfigError("simulate: noise grid is required");
  if (noise->dim_noise() != model.dim_noise)
    throw ConfigError("simulate: noise dimension does not match the model");

  const long m = derive_intervals(model.tau, delta);
  if (horizon_t < 0.0) throw ConfigError("simulate: horizon must be nonnegative");
  const long n_steps = std::lround(horizon_t / delta);

  const long factor = std::lround(delta / noise->delta_fine);
  if (factor < 1 ||
      std::abs(static_cast<Real>(factor) * noise->delta_fine - delta) >
          1e-12 * delta)
    throw ConfigError("simulate: noise step must divide delta");
  if (n_steps * factor > noise->n_fine())
    throw ConfigError("simulate: noise grid too short for the horizon");

  const Real r = truncate ? radius(policy, delta)
                          : std::numeric_limits<Real>::infinity();

  SchemeState state = init_with_radius(model, delta, r);

  const Index dim = model.dim_state;
  Mat ys(dim, m + n_steps + 1), y_hats(dim, m + n_steps + 1);
  ys.leftCols(m + 1) = state.segment.nodes();
  for (long i = 0; i < m; ++i) {
    const Real t = static_cast<Real>(i - m) * delta;
    y_hats.col(i) = model.initial(std::max(t, -model.tau));
  }
  y_hats.col(m) = state.y_hat;

  Vec db(model.dim_noise);
  for (long k = 0; k < n_steps; ++k) {
    detail::dyadic_sum_into(noise->increments, k * factor, factor, db);
    state = step_with_radius(std::move(state), model, delta, db, r);
    ys.col(m + k + 1) = state.segment.at_zero();
    y_hats.col(m + k + 1) = state.y_hat;
  }

  SimulatedPath path;
  path.delta = delta;
  path.history_intervals = m;
  Vec times(m + n_steps + 1);
  for (long k = -m; k <= n_steps; ++k)
    times(k + m) = static_cast<Real>(k) * delta;
  path.nodes_y = GridFunction{times, std::move(ys)};
  path.nodes_y_hat = GridFunction{std::move(times), std::move(y_hats)};
  path.model_id = model.id;
  path.noise = std::move(noise);
  path.truncated = truncate;
  path.trunc_radius = r;
  return path;
}

SimulatedPath simulate(const SfdeModel& model, const TruncationPolicy& policy,
                       Real delta, Real horizon_t, const BrownianGrid& noise,
                       bool truncate) {
  return simulate(model, policy, delta, horizon_t,
                  std::make_shared<BrownianGrid>(noise), truncate);
}

Vec z_process_eval(const SimulatedPath& path, const SfdeModel& model, Real t) {
  if (!path.noise) throw ConfigError("z_process_eval: path carries no noise grid");
  const BrownianGrid& grid = *path.noise;
  const Real df = grid.delta_fine;

  const long j = std::lround(t / df);
  if (std::abs(static_cast<Real>(j) * df - t) > 1e-12 * std::max(df, std::abs(t)))
    throw DomainError("z_process_eval: t is not on the fine grid");
  const long factor = std::lround(path.delta / df);
  const long n_total = path.steps() * factor;
  if (j < 0 || j > n_total)
    throw DomainError("z_process_eval: t outside [0, horizon]");

  const long k = j / factor;
  const long rem = j - k * factor;
  const Real t_k = static_cast<Real>(k) * path.delta;
  if (rem == 0) return path.y_at(t_k);

  const Segment seg = terminal_segment(path, t_k);
  const Vec f = model.drift(seg);
  const Mat g = model.diffusion(seg);
  Vec b_diff(grid.dim_noise());
  detail::dyadic_sum_into(grid.increments, k * factor, rem, b_diff);
  return path.y_at(t_k) + (static_cast<Real>(rem) * df) * f + g * b_diff;
}

Segment terminal_segment(const SimulatedPath& path, Real at_time) {
  const long k = std::lround(at_time / path.delta);
  if (std::abs(static_cast<Real>(k) * path.delta - at_time) >
      1e-12 * std::max(path.delta, std::abs(at_time)))
    throw DomainError("terminal_segment: at_time is not on the grid");
  if (k < 0 || k > path.steps())
    throw DomainError("terminal_segment: at_time outside [0, horizon]");
  const long m = path.history_intervals;
  return Segment(path.nodes_y.values.middleCols(k, m + 1), path.delta);
}

}  // namespace sfde
