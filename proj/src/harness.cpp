#include "sfde/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

namespace sfde {

namespace {

Real param_or(const std::map<std::string, Real>& params, const std::string& key,
              Real fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void require_known_params(const std::map<std::string, Real>& params,
                          std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : params) {
    (void)value;
    bool known = false;
    for (const char* name : allowed)
      if (key == name) known = true;
    if (!known) throw ConfigError("unknown model parameter: " + key);
  }
}

Real dyadic_delta(int e) { return std::ldexp(1.0, -e); }

/// Runs fn(i) for i in [0, n) across the requested number of threads.
/// Results must be written into per-index slots; the caller reduces in
/// ascending order afterwards, so output is independent of scheduling.
void parallel_for_samples(long n, int workers, const std::function<void(long)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = static_cast<int>(std::min<long>(workers, n));
  pool.reserve(count);
  for (int w = 0; w < count; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (step_exps.empty()) throw ConfigError("config: step_exps must be nonempty");
  for (int e : step_exps) {
    if (e < 0) throw ConfigError("config: step exponents must be nonnegative");
    if (ref_exp <= e)
      throw ConfigError("config: ref_exp must exceed every step exponent");
  }
  if (samples < 1) throw ConfigError("config: samples must be >= 1");
  if (!(varrho > 0.0 && varrho < 0.5))
    throw ConfigError("config: varrho must lie in (0, 1/2)");
  if (h_scale <= 0.0) throw ConfigError("config: h_scale must be positive");
  if (workers < 1) throw ConfigError("config: workers must be >= 1");
  if (!(horizon_t > 0.0)) throw ConfigError("config: horizon must be positive");
}

SfdeModel make_model(const ExperimentConfig& config) {
  // xi0 overrides the built-in constant initial function (used by the
  // taming demonstrations, which start the plain EM far outside the stable
  // region).
  SfdeModel model;
  if (config.model_id == "cubic-vol") {
    require_known_params(config.model_params, {"a0", "a1", "a2", "xi0"});
    model = make_cubic_volatility_model(param_or(config.model_params, "a0", 3.0),
                                        param_or(config.model_params, "a1", 10.0),
                                        param_or(config.model_params, "a2", 53.0));
  } else if (config.model_id == "linear-delay") {
    require_known_params(config.model_params,
                         {"lambda", "mu", "sigma0", "sigma1", "xi0"});
    model = make_linear_delay_model(
        param_or(config.model_params, "lambda", -1.0),
        param_or(config.model_params, "mu", 0.3),
        param_or(config.model_params, "sigma0", 0.1),
        param_or(config.model_params, "sigma1", 0.5));
  } else {
    throw ConfigError("unknown model id: " + config.model_id);
  }
  if (config.model_params.count("xi0"))
    model = with_constant_initial(std::move(model),
                                  config.model_params.at("xi0"));
  return model;
}

Real segment_error(const SimulatedPath& ref, const SimulatedPath& coarse,
                   Real at_time, ErrorNorm norm) {
  if (!ref.noise || !coarse.noise)
    throw CouplingError("segment_error: paths carry no noise grids");
  if (ref.noise->base_seed != coarse.noise->base_seed ||
      ref.noise->sample_index != coarse.noise->sample_index ||
      ref.noise->sample_seed != coarse.noise->sample_seed)
    throw CouplingError("segment_error: paths were driven by different samples");

  if (norm == ErrorNorm::kTerminalPoint)
    return (ref.y_at(at_time) - coarse.y_at(at_time)).norm();

  const Real tau_ref = ref.delta * static_cast<Real>(ref.history_intervals);
  const Real tau_coarse =
      coarse.delta * static_cast<Real>(coarse.history_intervals);
  if (std::abs(tau_ref - tau_coarse) > 1e-12 * tau_ref)
    throw CouplingError("segment_error: paths disagree on tau");

  const Segment seg = terminal_segment(coarse, at_time);
  const Index base = ref.index_of(at_time - tau_ref);
  const long n = ref.history_intervals;  // fine grid points spanning tau
  Real worst = 0.0;
  for (long i = 0; i <= n; ++i) {
    const Real theta = static_cast<Real>(i) * ref.delta - tau_ref;
    const Real d = (ref.nodes_y.values.col(base + i) - seg.eval(theta)).norm();
    worst = std::max(worst, d);
  }
  return worst;
}

ConvergenceReport run_convergence(const ExperimentConfig& config) {
  config.validate();
  const SfdeModel model = make_model(config);
  if (config.horizon_t < model.tau)
    throw ConfigError("run_convergence: horizon must be at least tau");

  auto check_divides = [&](int e) {
    const Real steps_per_tau = model.tau * std::ldexp(1.0, e);
    if (std::abs(steps_per_tau - std::round(steps_per_tau)) > 1e-12 * steps_per_tau)
      throw ConfigError("run_convergence: 2^-e must divide tau");
  };
  check_divides(config.ref_exp);
  for (int e : config.step_exps) check_divides(e);

  const TruncationPolicy policy =
      make_policy(model, config.h_scale, config.varrho);
  const Real delta_ref = dyadic_delta(config.ref_exp);
  const long n_fine = std::lround(config.horizon_t / delta_ref);
  const Real horizon = static_cast<Real>(n_fine) * delta_ref;

  std::vector<int> exps = config.step_exps;
  std::sort(exps.begin(), exps.end());  // ascending e = descending delta
  const size_t n_steps = exps.size();

  const long m_samples = config.samples;
  // Per-sample squared errors; reduced in ascending sample order afterwards.
  std::vector<std::vector<Real>> sq(n_steps,
                                    std::vector<Real>(m_samples, 0.0));
  std::vector<char> valid(m_samples, 0);
  std::atomic<long> blowups{0};

  parallel_for_samples(m_samples, config.workers, [&](long i) {
    auto grid = std::make_shared<BrownianGrid>(generate_brownian_grid(
        config.base_seed, static_cast<std::uint64_t>(i), n_fine, delta_ref,
        model.dim_noise));
    try {
      const SimulatedPath ref = simulate(model, policy, delta_ref, horizon,
                                         grid, config.truncate);
      for (size_t s = 0; s < n_steps; ++s) {
        const SimulatedPath coarse = simulate(
            model, policy, dyadic_delta(exps[s]), horizon, grid, config.truncate);
        const Real err = segment_error(ref, coarse, horizon, config.error_norm);
        sq[s][i] = err * err;
      }
      valid[i] = 1;
    } catch (const BlowUpError&) {
      if (config.truncate) throw;  // must not happen under truncation
      blowups.fetch_add(1);
    }
  });

  long n_valid = 0;
  for (long i = 0; i < m_samples; ++i) n_valid += valid[i];
  if (n_valid == 0)
    throw BlowUpError(-1, "run_convergence: every sample blew up");

  ConvergenceReport report;
  report.blowups = blowups.load();
  std::vector<std::pair<Real, Real>> points;
  for (size_t s = 0; s < n_steps; ++s) {
    Real sum = 0.0;
    for (long i = 0; i < m_samples; ++i)
      if (valid[i]) sum += sq[s][i];
    const Real mean_sq = sum / static_cast<Real>(n_valid);
    Real var_sum = 0.0;
    for (long i = 0; i < m_samples; ++i)
      if (valid[i]) var_sum += (sq[s][i] - mean_sq) * (sq[s][i] - mean_sq);
    const Real rms = std::sqrt(mean_sq);
    // Delta method: se(sqrt(U)) ~ se(U) / (2 sqrt(U)).
    Real se = 0.0;
    if (n_valid > 1 && rms > 0.0) {
      const Real se_mean =
          std::sqrt(var_sum / static_cast<Real>(n_valid - 1) /
                    static_cast<Real>(n_valid));
      se = se_mean / (2.0 * rms);
    }
    report.rows.push_back({dyadic_delta(exps[s]), rms, se});
    points.emplace_back(dyadic_delta(exps[s]), rms);
  }

  const LineFit fit = fit_loglog(points);
  report.slope = fit.slope;
  report.intercept = fit.intercept;
  report.r_squared = fit.r_squared;
  return report;
}

std::vector<MomentRow> moment_diagnostic(const ExperimentConfig& config,
                                         Real p_exp, Real p_cap) {
  config.validate();
  if (p_exp < 2.0) throw ConfigError("moment_diagnostic: p must be >= 2");
  if (p_exp > p_cap)
    throw ConfigError("moment_diagnostic: p exceeds the configured cap");
  const SfdeModel model = make_model(config);
  const TruncationPolicy policy =
      make_policy(model, config.h_scale, config.varrho);

  std::vector<MomentRow> rows;
  std::vector<int> exps = config.step_exps;
  std::sort(exps.begin(), exps.end());

  constexpr long kBlock = 32;  // fixed-size reduction blocks
  for (int e : exps) {
    const Real delta = dyadic_delta(e);
    const long n_steps = std::lround(config.horizon_t / delta);
    const Real horizon = static_cast<Real>(n_steps) * delta;
    const long m = std::lround(model.tau / delta);
    const long n_nodes = m + n_steps + 1;

    const long n_blocks = (config.samples + kBlock - 1) / kBlock;
    std::vector<Vec> block_sums(n_blocks, Vec::Zero(n_nodes));
    std::vector<long> block_valid(n_blocks, 0);
    std::atomic<long> blowups{0};

    // Parallelize over whole blocks so each accumulator has one writer.
    parallel_for_samples(n_blocks, config.workers, [&](long b) {
      const long lo = b * kBlock;
      const long hi = std::min(lo + kBlock, config.samples);
      for (long i = lo; i < hi; ++i) {
        try {
          const BrownianGrid grid = generate_brownian_grid(
              config.base_seed, static_cast<std::uint64_t>(i), n_steps, delta,
              model.dim_noise);
          const SimulatedPath path =
              simulate(model, policy, delta, horizon, grid, config.truncate);
          block_sums[b] += path.nodes_y.values.colwise()
                               .norm()
                               .array()
                               .pow(p_exp)
                               .matrix()
                               .transpose();
          block_valid[b] += 1;
        } catch (const BlowUpError&) {
          if (config.truncate) throw;
          blowups.fetch_add(1);
        }
      }
    });

    long n_valid = 0;
    Vec total = Vec::Zero(n_nodes);
    for (long b = 0; b < n_blocks; ++b) {
      total += block_sums[b];
      n_valid += block_valid[b];
    }
    MomentRow row;
    row.delta = delta;
    row.blowups = blowups.load();
    row.sup_moment = n_valid > 0
                         ? (total / static_cast<Real>(n_valid)).maxCoeff()
                         : std::numeric_limits<Real>::quiet_NaN();
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(),
            [](const MomentRow& a, const MomentRow& b) { return a.delta > b.delta; });
  return rows;
}

LineFit fit_loglog(const std::vector<std::pair<Real, Real>>& points) {
  if (points.size() < 2)
    throw ConfigError("fit_loglog: need at least two points");
  for (const auto& [delta, value] : points) {
    if (!(delta > 0.0)) throw DomainError("fit_loglog: deltas must be positive");
    if (!(value > 0.0)) throw DomainError("fit_loglog: values must be positive");
  }
  const Index n = static_cast<Index>(points.size());
  Vec x(n), y(n);
  for (Index i = 0; i < n; ++i) {
    x(i) = std::log(points[i].first);
    y(i) = std::log(points[i].second);
  }
  const Real mx = x.mean();
  const Real my = y.mean();
  const Vec dx = x.array() - mx;
  const Vec dy = y.array() - my;
  const Real sxx = dx.squaredNorm();
  const Real sxy = dx.dot(dy);
  const Real syy = dy.squaredNorm();
  if (sxx <= 0.0) throw ConfigError("fit_loglog: deltas must be distinct");

  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

void write_report_csv(const ConvergenceReport& report, std::ostream& out) {
  char buf[96];
  out << "delta,rms_error,std_err\n";
  // Rows are kept in descending-delta order; format with full precision so
  // the bytes are reproducible.
  std::vector<ReportRow> rows = report.rows;
  std::sort(rows.begin(), rows.end(),
            [](const ReportRow& a, const ReportRow& b) { return a.delta > b.delta; });
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", row.delta,
                  row.rms_error, row.std_err);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "slope,%.17g\n", report.slope);
  out << buf;
  std::snprintf(buf, sizeof(buf), "intercept,%.17g\n", report.intercept);
  out << buf;
  std::snprintf(buf, sizeof(buf), "r2,%.17g\n", report.r_squared);
  out << buf;
}

}  // namespace sfde
