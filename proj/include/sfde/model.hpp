#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "sfde/noise.hpp"
#include "sfde/segment.hpp"

namespace sfde {

/// Problem definition for dX(t) = f(X_t) dt + g(X_t) dB(t) on segments over
/// [-tau, 0]. Drift and diffusion are opaque callables; the declared growth
/// exponents are trusted and only checked through sampling.
struct SfdeModel {
  Index dim_state = 1;
  Index dim_noise = 1;
  Real tau = 1.0;
  std::function<Vec(const Segment&)> drift;       // f: C_tau -> R^{n1}
  std::function<Mat(const Segment&)> diffusion;   // g: C_tau -> R^{n1 x n2}
  std::function<Vec(Real)> initial;               // xi on [-tau, 0]
  Real initial_holder_sq = 0.0;   // c2: |xi(t1)-xi(t2)|^2 <= c2 |t1-t2|
  Real growth_exponent_r = 0.0;   // polynomial growth exponent r
  Real khasminskii_exponent_rhat = 0.0;  // exponent r-hat
  std::string id;

  void validate() const {
    if (dim_state < 1 || dim_noise < 1)
      throw ConfigError("SfdeModel: dimensions must be positive");
    if (tau <= 0.0) throw ConfigError("SfdeModel: tau must be positive");
    if (growth_exponent_r < 0.0 || khasminskii_exponent_rhat < 0.0)
      throw ConfigError("SfdeModel: growth exponents must be nonnegative");
    if (!drift || !diffusion || !initial)
      throw ConfigError("SfdeModel: drift, diffusion and initial are required");
  }
};

/// Scalar cubic stochastic volatility model:
///   drift(psi)     = a0 + a1 psi(0) - a2 psi(0)^3
///   diffusion(psi) = integral over [-1,0] of psi(theta)^2 dtheta
/// with tau = 1, xi = 0.05 and r = rhat = 2.
SfdeModel make_cubic_volatility_model(Real a0, Real a1, Real a2);

/// Scalar globally Lipschitz control model:
///   drift(psi)     = lambda psi(0) + mu psi(-tau)
///   diffusion(psi) = sigma0 + sigma1 psi(-tau)
/// with tau = 1, xi = 1 and r = rhat = 0. Classical EM has strong order 1/2.
SfdeModel make_linear_delay_model(Real lambda, Real mu, Real sigma0, Real sigma1);

/// Returns a copy of the model with a constant initial function.
SfdeModel with_constant_initial(SfdeModel model, Real value);

/// Constants entering the one-sided monotonicity inequality. The working
/// moment exponent p = q - 0.01 is exposed as an accessor.
struct AssumptionConstants {
  Real q = 27.0;        // > 3
  Real alpha0 = 20.0;
  Real alpha1 = 53.0;   // > alpha2
  Real alpha2 = 52.0;
  Real c1 = 1.0;
  Real c2 = 0.0;

  Real p() const { return q - 0.01; }

  void validate() const {
    if (q <= 3.0) throw ConfigError("AssumptionConstants: q must exceed 3");
    if (alpha0 <= 0.0 || alpha1 <= 0.0 || alpha2 <= 0.0)
      throw ConfigError("AssumptionConstants: alphas must be positive");
    if (alpha1 <= alpha2)
      throw ConfigError("AssumptionConstants: alpha1 must exceed alpha2");
    if (c1 <= 0.0) throw ConfigError("AssumptionConstants: c1 must be positive");
    if (c2 < 0.0) throw ConfigError("AssumptionConstants: c2 must be nonnegative");
  }
};

/// Draws pairs of piecewise-linear segments for the sampling-based
/// inequality checker. Uniform mode fills all nodes i.i.d. uniform on
/// [-bound, bound]; identical mode returns psi = phi. The adversarial
/// opposed-endpoints mode produces pairs whose endpoint values are (nearly)
/// opposite and of large magnitude, the regime where an undersized
/// dissipativity coefficient fails first.
class SegmentPairSampler {
 public:
  enum class Mode { kUniform, kIdentical, kOpposedEndpoints };

  SegmentPairSampler(Real tau, Index dim, Index intervals, Real bound,
                     Mode mode, std::uint64_t seed);

  std::pair<Segment, Segment> next();

  Real bound() const { return bound_; }

 private:
  Real tau_;
  Index dim_;
  Index intervals_;
  Real bound_;
  Mode mode_;
  rng::Xoshiro256pp gen_;
};

/// Outcome of a sampled inequality check. Violations are data, not errors.
struct ViolationReport {
  long checked = 0;
  long violations = 0;
  Real worst_margin = 0.0;  // max over pairs of LHS - RHS (negative = satisfied)
};

/// Evaluates LHS - RHS of the one-sided monotonicity inequality
///   2 <psi(0)-phi(0), f(psi)-f(phi)> + (q-1) |g(psi)-g(phi)|^2
///     <= alpha0 ( |dpsi(0)|^2 + (1/tau) int |dpsi|^2 )
///        - alpha1 |dpsi(0)|^2 (|psi(0)|^rhat + |phi(0)|^rhat)
///        + (alpha2/tau) int |dpsi(theta)|^2 (|psi(theta)|^rhat + |phi(theta)|^rhat)
/// at `count` sampled segment pairs. Theta integrals use composite 4-point
/// Gauss-Legendre on 16 sub-intervals per node interval (64 points per node
/// interval), exact for the piecewise-polynomial scalar integrands.
/// A pair counts as a violation when LHS - RHS > 1e-9 * scale with
/// scale = max(1, |LHS|, |RHS|).
ViolationReport check_khasminskii_inequality(const SfdeModel& model,
                                             const AssumptionConstants& constants,
                                             SegmentPairSampler& sampler,
                                             long count);

}  // namespace sfde
