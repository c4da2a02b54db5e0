// Command-line front end for the truncated EM library: single-path
// simulation, coupled convergence runs, assumption verification, moment
// diagnostics and Brownian grid dumps.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "sfde/harness.hpp"

namespace {

using namespace sfde;

struct ModelOpts {
  std::string model = "cubic-vol";
  double a0 = 3.0, a1 = 10.0, a2 = 53.0;
  double lambda = -1.0, mu = 0.3, sigma0 = 0.1, sigma1 = 0.5;
  double xi0 = 0.0;
  double tau = 0.0;

  CLI::Option* xi0_opt = nullptr;
  CLI::Option* tau_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--model", model, "built-in model: cubic-vol or linear-delay")
        ->default_val("cubic-vol");
    cmd->add_option("--a0", a0, "cubic-vol drift constant");
    cmd->add_option("--a1", a1, "cubic-vol linear drift coefficient");
    cmd->add_option("--a2", a2, "cubic-vol cubic drift coefficient");
    cmd->add_option("--lambda", lambda, "linear-delay endpoint coefficient");
    cmd->add_option("--mu", mu, "linear-delay delayed coefficient");
    cmd->add_option("--sigma0", sigma0, "linear-delay additive noise");
    cmd->add_option("--sigma1", sigma1, "linear-delay delayed noise coefficient");
    xi0_opt = cmd->add_option("--xi0", xi0, "override the constant initial value");
    tau_opt = cmd->add_option("--tau", tau, "delay; must match the model (both models use 1)");
  }

  void fill(ExperimentConfig& cfg) const {
    cfg.model_id = model;
    if (model == "cubic-vol") {
      cfg.model_params = {{"a0", a0}, {"a1", a1}, {"a2", a2}};
    } else {
      cfg.model_params = {{"lambda", lambda}, {"mu", mu},
                          {"sigma0", sigma0}, {"sigma1", sigma1}};
    }
    if (xi0_opt && xi0_opt->count() > 0) cfg.model_params["xi0"] = xi0;
  }

  SfdeModel build(ExperimentConfig& cfg) const {
    fill(cfg);
    SfdeModel m = make_model(cfg);
    if (tau_opt && tau_opt->count() > 0 && std::abs(tau - m.tau) > 1e-12)
      throw ConfigError("--tau does not match the model's delay");
    return m;
  }
};

std::ostream& open_output(std::ofstream& file, const std::string& path,
                          bool binary = false) {
  if (path.empty() || path == "-") {
    if (binary) throw ConfigError("binary output requires --out <file>");
    return std::cout;
  }
  file.open(path, binary ? std::ios::binary : std::ios::out);
  if (!file) throw ConfigError("cannot open output file: " + path);
  return file;
}

void cmd_simulate(const ModelOpts& opts, int delta_exp, double horizon,
                  std::uint64_t seed, std::uint64_t sample_index,
                  bool no_truncate, double varrho, double h_scale,
                  const std::string& out_path) {
  ExperimentConfig cfg;
  const SfdeModel model = opts.build(cfg);
  const TruncationPolicy policy = make_policy(model, h_scale, varrho);
  const Real delta = std::ldexp(1.0, -delta_exp);
  const long n = std::lround(horizon / delta);
  if (n < 0) throw ConfigError("simulate: horizon must be nonnegative");
  const BrownianGrid grid = generate_brownian_grid(
      seed, sample_index, std::max<long>(n, 1), delta, model.dim_noise);
  const SimulatedPath path =
      simulate(model, policy, delta, horizon, grid, !no_truncate);

  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  out << "k,t";
  for (Index d = 0; d < model.dim_state; ++d) out << ",y_" << d;
  for (Index d = 0; d < model.dim_state; ++d) out << ",yhat_" << d;
  out << "\n";
  char buf[64];
  const long m = path.history_intervals;
  for (Index col = 0; col < path.nodes_y.times.size(); ++col) {
    out << (col - m);
    std::snprintf(buf, sizeof(buf), ",%.17g", path.nodes_y.times(col));
    out << buf;
    for (Index d = 0; d < model.dim_state; ++d) {
      std::snprintf(buf, sizeof(buf), ",%.17g", path.nodes_y.values(d, col));
      out << buf;
    }
    for (Index d = 0; d < model.dim_state; ++d) {
      std::snprintf(buf, sizeof(buf), ",%.17g", path.nodes_y_hat.values(d, col));
      out << buf;
    }
    out << "\n";
  }
}

void cmd_run(const ModelOpts& opts, ExperimentConfig cfg,
             const std::string& error_norm, const std::string& out_path) {
  opts.fill(cfg);
  if (error_norm == "segment-sup") {
    cfg.error_norm = ErrorNorm::kSegmentSup;
  } else if (error_norm == "terminal-point") {
    cfg.error_norm = ErrorNorm::kTerminalPoint;
  } else {
    throw ConfigError("--error-norm must be segment-sup or terminal-point");
  }
  {
    ExperimentConfig probe = cfg;
    (void)opts.build(probe);  // validates --tau against the model
  }
  const ConvergenceReport report = run_convergence(cfg);

  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  write_report_csv(report, out);
  if (&out != &std::cout) {
    std::printf("slope %.6f (RMS convention; mean-square order %.6f)\n",
                report.slope, 2.0 * report.slope);
    std::printf("intercept %.6f  r2 %.6f\n", report.intercept, report.r_squared);
    if (report.blowups > 0)
      std::printf("blown-up samples dropped: %ld\n", report.blowups);
  }
}

void cmd_verify(const ModelOpts& opts, const AssumptionConstants& constants,
                long count, double bound, long intervals, bool adversarial,
                std::uint64_t seed) {
  ExperimentConfig cfg;
  const SfdeModel model = opts.build(cfg);
  constants.validate();
  SegmentPairSampler sampler(model.tau, model.dim_state, intervals, bound,
                             adversarial
                                 ? SegmentPairSampler::Mode::kOpposedEndpoints
                                 : SegmentPairSampler::Mode::kUniform,
                             seed);
  const ViolationReport report =
      check_khasminskii_inequality(model, constants, sampler, count);
  std::printf("pairs checked:  %ld\n", report.checked);
  std::printf("violations:     %ld\n", report.violations);
  std::printf("worst margin:   %.6g\n", report.worst_margin);
  std::printf(report.violations == 0
                  ? "no sampled violation of the monotonicity condition\n"
                  : "monotonicity condition FAILS on sampled pairs\n");
}

void cmd_moments(const ModelOpts& opts, ExperimentConfig cfg, double p_exp,
                 const std::string& out_path) {
  opts.fill(cfg);
  const auto rows = moment_diagnostic(cfg, p_exp);
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  out << "delta,sup_moment,blowups\n";
  char buf[96];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%ld\n", row.delta,
                  row.sup_moment, row.blowups);
    out << buf;
  }
}

void cmd_dump_noise(std::uint64_t seed, std::uint64_t sample_index, long n_fine,
                    int delta_exp, long dim, const std::string& out_path) {
  const BrownianGrid grid = generate_brownian_grid(
      seed, sample_index, n_fine, std::ldexp(1.0, -delta_exp), dim);
  std::ofstream file;
  std::ostream& out = open_output(file, out_path, /*binary=*/true);
  write_grid(grid, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated Euler-Maruyama solver for stochastic functional "
               "differential equations with super-linear coefficients"};
  app.require_subcommand(1);

  // --- simulate ---
  auto* sim = app.add_subcommand("simulate", "simulate one path and write CSV");
  ModelOpts sim_model;
  sim_model.attach(sim);
  int sim_exp = 7;
  double sim_t = 10.0, sim_varrho = 1.0 / 3.0, sim_hscale = 1.0;
  std::uint64_t sim_seed = 42, sim_index = 0;
  bool sim_no_trunc = false;
  std::string sim_out;
  sim->add_option("--delta-exp", sim_exp, "step size exponent e, Delta = 2^-e")
      ->required();
  sim->add_option("--T", sim_t, "time horizon")->default_val(10.0);
  sim->add_option("--seed", sim_seed, "base seed")->default_val(42);
  sim->add_option("--sample-index", sim_index, "sample stream index")
      ->default_val(0);
  sim->add_flag("--no-truncate", sim_no_trunc,
                "disable the projection (classical EM)");
  sim->add_option("--varrho", sim_varrho, "truncation exponent in (0, 1/2)");
  sim->add_option("--h-scale", sim_hscale, "scale K of H(R) = K R^r");
  sim->add_option("--out", sim_out, "output CSV path (default stdout)");

  // --- run ---
  auto* run = app.add_subcommand(
      "run", "coupled Monte Carlo convergence experiment and slope fit");
  ModelOpts run_model;
  run_model.attach(run);
  ExperimentConfig run_cfg;
  std::string run_norm = "segment-sup", run_out;
  bool run_no_trunc = false;
  run->add_option("--T", run_cfg.horizon_t, "time horizon")->default_val(10.0);
  run->add_option("--ref-exp", run_cfg.ref_exp,
                  "reference step exponent (Delta_ref = 2^-e)")
      ->default_val(12);
  run->add_option("--step-exps", run_cfg.step_exps,
                  "comma-separated coarse step exponents")
      ->delimiter(',');
  run->add_option("--samples", run_cfg.samples, "Monte Carlo samples")
      ->default_val(200);
  run->add_option("--seed", run_cfg.base_seed, "base seed")->default_val(42);
  run->add_option("--varrho", run_cfg.varrho, "truncation exponent in (0, 1/2)");
  run->add_option("--h-scale", run_cfg.h_scale, "scale K of H(R) = K R^r");
  run->add_option("--error-norm", run_norm, "segment-sup or terminal-point")
      ->default_val("segment-sup");
  run->add_option("--workers", run_cfg.workers, "worker threads")->default_val(1);
  run->add_flag("--no-truncate", run_no_trunc,
                "classical EM comparison (blow-ups counted, not fatal)");
  run->add_option("--out", run_out, "report CSV path (default stdout)");

  // --- verify-assumptions ---
  auto* verify = app.add_subcommand(
      "verify-assumptions",
      "sample segment pairs and test the one-sided monotonicity condition");
  ModelOpts verify_model;
  verify_model.attach(verify);
  AssumptionConstants constants;
  long verify_count = 10000, verify_intervals = 8;
  double verify_bound = 5.0;
  bool verify_adversarial = false;
  std::uint64_t verify_seed = 42;
  verify->add_option("--q", constants.q, "moment exponent q > 3");
  verify->add_option("--alpha0", constants.alpha0, "alpha0");
  verify->add_option("--alpha1", constants.alpha1, "alpha1 (> alpha2)");
  verify->add_option("--alpha2", constants.alpha2, "alpha2");
  verify->add_option("--c1", constants.c1, "polynomial growth constant");
  verify->add_option("--c2", constants.c2, "initial-data Holder constant");
  verify->add_option("--count", verify_count, "number of sampled pairs")
      ->default_val(10000);
  verify->add_option("--bound", verify_bound, "segment norm bound")
      ->default_val(5.0);
  verify->add_option("--intervals", verify_intervals,
                     "node intervals of sampled segments")
      ->default_val(8);
  verify->add_flag("--adversarial", verify_adversarial,
                   "opposed-endpoint sampling instead of uniform");
  verify->add_option("--seed", verify_seed, "sampler seed")->default_val(42);

  // --- moments ---
  auto* moments = app.add_subcommand(
      "moments", "empirical moment boundedness across the step ladder");
  ModelOpts mom_model;
  mom_model.attach(moments);
  ExperimentConfig mom_cfg;
  double mom_p = 4.0;
  bool mom_no_trunc = false;
  std::string mom_out;
  moments->add_option("--p-exp", mom_p, "moment exponent p (>= 2, <= 6)")
      ->default_val(4.0);
  moments->add_option("--T", mom_cfg.horizon_t, "time horizon")->default_val(10.0);
  moments->add_option("--step-exps", mom_cfg.step_exps,
                      "comma-separated step exponents")
      ->delimiter(',');
  moments->add_option("--samples", mom_cfg.samples, "Monte Carlo samples")
      ->default_val(500);
  moments->add_option("--seed", mom_cfg.base_seed, "base seed")->default_val(42);
  moments->add_option("--workers", mom_cfg.workers, "worker threads")
      ->default_val(1);
  moments->add_flag("--no-truncate", mom_no_trunc,
                    "classical EM (blow-ups counted per step size)");
  moments->add_option("--out", mom_out, "output CSV path (default stdout)");

  // --- dump-noise ---
  auto* dump = app.add_subcommand("dump-noise",
                                  "write one Brownian grid as a binary dump");
  std::uint64_t dump_seed = 42, dump_index = 0;
  long dump_n = 1024, dump_dim = 1;
  int dump_exp = 7;
  std::string dump_out;
  dump->add_option("--seed", dump_seed, "base seed")->default_val(42);
  dump->add_option("--sample-index", dump_index, "sample stream index")
      ->default_val(0);
  dump->add_option("--n-fine", dump_n, "number of increments")->default_val(1024);
  dump->add_option("--delta-exp", dump_exp, "step exponent, Delta = 2^-e")
      ->default_val(7);
  dump->add_option("--dim-noise", dump_dim, "noise dimension")->default_val(1);
  dump->add_option("--out", dump_out, "output file")->required();

  try {
    app.parse(argc, argv);
    if (sim->parsed()) {
      cmd_simulate(sim_model, sim_exp, sim_t, sim_seed, sim_index,
                   sim_no_trunc, sim_varrho, sim_hscale, sim_out);
    } else if (run->parsed()) {
      run_cfg.truncate = !run_no_trunc;
      cmd_run(run_model, run_cfg, run_norm, run_out);
    } else if (verify->parsed()) {
      cmd_verify(verify_model, constants, verify_count, verify_bound,
                 verify_intervals, verify_adversarial, verify_seed);
    } else if (moments->parsed()) {
      mom_cfg.truncate = !mom_no_trunc;
      mom_cfg.ref_exp = 32;  // unused by the diagnostic; satisfies validation
      cmd_moments(mom_model, mom_cfg, mom_p, mom_out);
    } else if (dump->parsed()) {
      cmd_dump_noise(dump_seed, dump_index, dump_n, dump_exp, dump_dim,
                     dump_out);
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const BlowUpError& e) {
    std::cerr << "blow-up failure: " << e.what() << "\n";
    return 3;
  } catch (const CouplingError& e) {
    std::cerr << "coupling failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
