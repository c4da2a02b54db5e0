#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sfde/harness.hpp"

using namespace sfde;

namespace {

ExperimentConfig small_linear_config() {
  ExperimentConfig cfg;
  cfg.model_id = "linear-delay";
  cfg.horizon_t = 2.0;
  cfg.ref_exp = 8;
  cfg.step_exps = {5, 6};
  cfg.samples = 6;
  cfg.base_seed = 4242;
  return cfg;
}

std::string report_bytes(const ConvergenceReport& report) {
  std::ostringstream out;
  write_report_csv(report, out);
  return out.str();
}

}  // namespace

TEST_CASE("fit_loglog recovers exact lines") {
  const LineFit unit = fit_loglog({{1.0, 1.0}, {0.5, 0.5}});
  CHECK(unit.slope == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(unit.intercept == doctest::Approx(0.0).epsilon(1e-14));

  const LineFit flat = fit_loglog({{1.0, 0.7}, {0.5, 0.7}, {0.25, 0.7}});
  CHECK(flat.slope == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(flat.r_squared == doctest::Approx(1.0));

  // Synthetic exact half-order data: value = 3 delta^(1/2).
  std::vector<std::pair<Real, Real>> pts;
  for (int e = 7; e <= 11; ++e) {
    const Real delta = std::ldexp(1.0, -e);
    pts.emplace_back(delta, 3.0 * std::sqrt(delta));
  }
  const LineFit half = fit_loglog(pts);
  CHECK(std::abs(half.slope - 0.5) < 1e-12);
  CHECK(std::abs(half.intercept - std::log(3.0)) < 1e-12);
  CHECK(std::abs(half.r_squared - 1.0) < 1e-12);
}

TEST_CASE("fit_loglog recovers planted slopes") {
  rng::Xoshiro256pp gen(515);
  for (int trial = 0; trial < 50; ++trial) {
    const Real slope = 4.0 * gen.uniform01() - 2.0;
    const Real intercept = 2.0 * gen.uniform01() - 1.0;
    std::vector<std::pair<Real, Real>> pts;
    for (int e = 2; e <= 9; ++e) {
      const Real delta = std::ldexp(1.0, -e);
      pts.emplace_back(delta, std::exp(intercept + slope * std::log(delta)));
    }
    const LineFit fit = fit_loglog(pts);
    CHECK(std::abs(fit.slope - slope) < 1e-12);
    CHECK(std::abs(fit.intercept - intercept) < 1e-12);
  }
}

TEST_CASE("fit_loglog rejects degenerate input") {
  CHECK_THROWS_AS(fit_loglog({{1.0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(fit_loglog({{1.0, 1.0}, {0.5, 0.0}}), DomainError);
  CHECK_THROWS_AS(fit_loglog({{1.0, 1.0}, {0.5, -2.0}}), DomainError);
  CHECK_THROWS_AS(fit_loglog({{0.5, 1.0}, {0.5, 2.0}}), ConfigError);
}

TEST_CASE("make_model resolves ids, parameters and overrides") {
  ExperimentConfig cfg;
  cfg.model_id = "cubic-vol";
  const SfdeModel cubic = make_model(cfg);
  CHECK(cubic.id == "cubic-vol");
  CHECK(cubic.initial(0.0)(0) == 0.05);

  cfg.model_params["a2"] = 7.0;
  cfg.model_params["xi0"] = 10.0;
  const SfdeModel modified = make_model(cfg);
  CHECK(modified.initial(-0.5)(0) == 10.0);

  cfg.model_params.clear();
  cfg.model_params["bogus"] = 1.0;
  CHECK_THROWS_AS(make_model(cfg), ConfigError);

  cfg.model_params.clear();
  cfg.model_id = "no-such-model";
  CHECK_THROWS_AS(make_model(cfg), ConfigError);
}

TEST_CASE("config validation catches inconsistent ladders") {
  ExperimentConfig cfg = small_linear_config();
  cfg.ref_exp = 6;  // must exceed every step exponent
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_linear_config();
  cfg.step_exps.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_linear_config();
  cfg.samples = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_linear_config();
  cfg.varrho = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_linear_config();
  cfg.horizon_t = 0.5;  // below tau
  CHECK_THROWS_AS(run_convergence(cfg), ConfigError);
}

TEST_CASE("segment_error vanishes for a path against itself") {
  const SfdeModel lin = make_linear_delay_model(-1.0, 0.3, 0.1, 0.5);
  const TruncationPolicy policy = make_policy(lin);
  const Real delta = std::ldexp(1.0, -6);
  const BrownianGrid grid = generate_brownian_grid(3, 5, 128, delta, 1);
  const SimulatedPath path = simulate(lin, policy, delta, 2.0, grid);
  CHECK(segment_error(path, path, 2.0, ErrorNorm::kSegmentSup) == 0.0);
  CHECK(segment_error(path, path, 2.0, ErrorNorm::kTerminalPoint) == 0.0);

  // Re-simulating through a factor-1 coarsening is also exact.
  const SimulatedPath again = simulate(lin, policy, delta, 2.0, coarsen(grid, 1));
  CHECK(segment_error(path, again, 2.0, ErrorNorm::kSegmentSup) == 0.0);
}

TEST_CASE("segment_error rejects uncoupled paths") {
  const SfdeModel lin = make_linear_delay_model(-1.0, 0.3, 0.1, 0.5);
  const TruncationPolicy policy = make_policy(lin);
  const Real delta = std::ldexp(1.0, -6);
  const BrownianGrid a = generate_brownian_grid(3, 5, 128, delta, 1);
  const BrownianGrid b = generate_brownian_grid(3, 6, 128, delta, 1);
  const SimulatedPath pa = simulate(lin, policy, delta, 2.0, a);
  const SimulatedPath pb = simulate(lin, policy, delta, 2.0, b);
  CHECK_THROWS_AS(segment_error(pa, pb, 2.0, ErrorNorm::kSegmentSup),
                  CouplingError);
}

TEST_CASE("additive unit noise is reproduced at shared grid times") {
  // f = 0, g = 1: both discretizations integrate dB exactly, so the
  // terminal-point error is pure summation reordering.
  SfdeModel bm;
  bm.tau = 1.0;
  bm.drift = [](const Segment&) { return Vec::Zero(1); };
  bm.diffusion = [](const Segment&) { return Mat::Constant(1, 1, 1.0); };
  bm.initial = [](Real) { return Vec::Zero(1); };
  bm.id = "bm";
  TruncationPolicy none;

  const Real df = std::ldexp(1.0, -9);
  const BrownianGrid grid = generate_brownian_grid(8, 2, 1024, df, 1);
  const SimulatedPath ref = simulate(bm, none, df, 2.0, grid);
  const SimulatedPath coarse =
      simulate(bm, none, std::ldexp(1.0, -5), 2.0, grid);
  CHECK(segment_error(ref, coarse, 2.0, ErrorNorm::kTerminalPoint) <= 1e-12);
}

TEST_CASE("deterministic delay model error shrinks linearly") {
  ExperimentConfig cfg;
  cfg.model_id = "linear-delay";
  cfg.model_params = {{"lambda", -1.0}, {"mu", 0.0}, {"sigma0", 0.0},
                      {"sigma1", 0.0}};
  cfg.horizon_t = 1.0;
  cfg.ref_exp = 12;
  cfg.step_exps = {5, 6, 7, 8};
  cfg.samples = 1;
  cfg.error_norm = ErrorNorm::kTerminalPoint;
  const ConvergenceReport report = run_convergence(cfg);
  REQUIRE(report.rows.size() == 4);
  for (size_t i = 1; i < report.rows.size(); ++i) {
    const Real ratio = report.rows[i - 1].rms_error / report.rows[i].rms_error;
    CHECK(ratio > 1.8);
    CHECK(ratio < 2.2);
  }
  CHECK(report.slope > 0.9);
  CHECK(report.slope < 1.1);
}

TEST_CASE("single-sample run completes and reports finite rows") {
  ExperimentConfig cfg = small_linear_config();
  cfg.samples = 1;
  const ConvergenceReport report = run_convergence(cfg);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].delta > report.rows[1].delta);  // descending
  for (const auto& row : report.rows) {
    CHECK(std::isfinite(row.rms_error));
    CHECK(row.rms_error >= 0.0);
    CHECK(row.std_err == 0.0);  // no spread estimate from one sample
  }
  CHECK(std::isfinite(report.slope));
}

TEST_CASE("report bytes are identical across worker counts") {
  ExperimentConfig cfg = small_linear_config();
  cfg.samples = 12;
  cfg.workers = 1;
  const std::string one = report_bytes(run_convergence(cfg));
  cfg.workers = 3;
  const std::string three = report_bytes(run_convergence(cfg));
  cfg.workers = 8;
  const std::string eight = report_bytes(run_convergence(cfg));
  CHECK(one == three);
  CHECK(one == eight);
  CHECK(one.rfind("delta,rms_error,std_err\n", 0) == 0);
  CHECK(one.find("slope,") != std::string::npos);
  CHECK(one.find("r2,") != std::string::npos);
}

TEST_CASE("moment diagnostic is exact for frozen dynamics") {
  // lambda = mu = sigma = 0 freezes the path at xi = 1: every moment is 1.
  ExperimentConfig cfg;
  cfg.model_id = "linear-delay";
  cfg.model_params = {{"lambda", 0.0}, {"mu", 0.0}, {"sigma0", 0.0},
                      {"sigma1", 0.0}};
  cfg.horizon_t = 2.0;
  cfg.step_exps = {3, 4};
  cfg.ref_exp = 8;
  cfg.samples = 4;
  const auto rows = moment_diagnostic(cfg, 4.0);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.sup_moment == 1.0);
    CHECK(row.blowups == 0);
  }
  CHECK_THROWS_AS(moment_diagnostic(cfg, 8.0), ConfigError);
  CHECK_THROWS_AS(moment_diagnostic(cfg, 1.0), ConfigError);
}

TEST_CASE("moment diagnostic counts plain-EM blow-ups") {
  ExperimentConfig cfg;
  cfg.model_id = "cubic-vol";
  cfg.model_params = {{"xi0", 10.0}};
  cfg.horizon_t = 2.0;
  cfg.step_exps = {3};
  cfg.ref_exp = 8;
  cfg.samples = 5;
  cfg.truncate = false;
  const auto rows = moment_diagnostic(cfg, 4.0);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].blowups >= 1);

  // The truncated counterpart finishes cleanly.
  cfg.truncate = true;
  const auto tamed = moment_diagnostic(cfg, 4.0);
  CHECK(tamed[0].blowups == 0);
  CHECK(std::isfinite(tamed[0].sup_moment));
}
