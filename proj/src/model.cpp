#include "sfde/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sfde {

SfdeModel make_cubic_volatility_model(Real a0, Real a1, Real a2) {
  if (a0 <= 0.0 || a1 <= 0.0 || a2 <= 0.0)
    throw ConfigError("cubic-vol: a0, a1, a2 must be positive");
  SfdeModel m;
  m.dim_state = 1;
  m.dim_noise = 1;
  m.tau = 1.0;
  m.drift = [a0, a1, a2](const Segment& psi) {
    const Real s = psi.at_zero()(0);
    Vec out(1);
    out(0) = a0 + a1 * s - a2 * s * s * s;
    return out;
  };
  m.diffusion = [](const Segment& psi) {
    Mat out(1, 1);
    out(0, 0) = psi.integral_power(2)(0);
    return out;
  };
  m.initial = [](Real) { return Vec::Constant(1, 0.05); };
  m.initial_holder_sq = 0.0;
  m.growth_exponent_r = 2.0;
  m.khasminskii_exponent_rhat = 2.0;
  m.id = "cubic-vol";
  return m;
}

SfdeModel make_linear_delay_model(Real lambda, Real mu, Real sigma0, Real sigma1) {
  if (!std::isfinite(lambda) || !std::isfinite(mu) || !std::isfinite(sigma0) ||
      !std::isfinite(sigma1))
    throw ConfigError("linear-delay: parameters must be finite");
  SfdeModel m;
  m.dim_state = 1;
  m.dim_noise = 1;
  m.tau = 1.0;
  m.drift = [lambda, mu](const Segment& psi) {
    Vec out(1);
    out(0) = lambda * psi.at_zero()(0) + mu * psi.node(0)(0);
    return out;
  };
  m.diffusion = [sigma0, sigma1](const Segment& psi) {
    Mat out(1, 1);
    out(0, 0) = sigma0 + sigma1 * psi.node(0)(0);
    return out;
  };
  m.initial = [](Real) { return Vec::Constant(1, 1.0); };
  m.initial_holder_sq = 0.0;
  m.growth_exponent_r = 0.0;
  m.khasminskii_exponent_rhat = 0.0;
  m.id = "linear-delay";
  return m;
}

SfdeModel with_constant_initial(SfdeModel model, Real value) {
  if (!std::isfinite(value))
    throw ConfigError("with_constant_initial: value must be finite");
  const Index dim = model.dim_state;
  model.initial = [value, dim](Real) { return Vec::Constant(dim, value); };
  model.initial_holder_sq = 0.0;
  return model;
}

SegmentPairSampler::SegmentPairSampler(Real tau, Index dim, Index intervals,
                                       Real bound, Mode mode, std::uint64_t seed)
    : tau_(tau),
      dim_(dim),
      intervals_(intervals),
      bound_(bound),
      mode_(mode),
      gen_(rng::stream_key(seed, 0x5e9)) {
  if (tau <= 0.0 || dim < 1 || intervals < 1 || bound <= 0.0)
    throw ConfigError("SegmentPairSampler: invalid parameters");
}

std::pair<Segment, Segment> SegmentPairSampler::next() {
  auto uniform = [this](Real lo, Real hi) {
    return lo + (hi - lo) * gen_.uniform01();
  };

  const Real delta = tau_ / static_cast<Real>(intervals_);
  Mat a(dim_, intervals_ + 1), b(dim_, intervals_ + 1);
  switch (mode_) {
    case Mode::kUniform:
      for (Index j = 0; j <= intervals_; ++j)
        for (Index d = 0; d < dim_; ++d) {
          a(d, j) = uniform(-bound_, bound_);
          b(d, j) = uniform(-bound_, bound_);
        }
      break;
    case Mode::kIdentical:
      for (Index j = 0; j <= intervals_; ++j)
        for (Index d = 0; d < dim_; ++d) {
          a(d, j) = uniform(-bound_, bound_);
          b(d, j) = a(d, j);
        }
      break;
    case Mode::kOpposedEndpoints: {
      // Matching small interiors, near-opposite endpoints of large magnitude.
      for (Index j = 0; j < intervals_; ++j)
        for (Index d = 0; d < dim_; ++d) {
          const Real v = uniform(-0.1 * bound_, 0.1 * bound_);
          a(d, j) = v;
          b(d, j) = v;
        }
      for (Index d = 0; d < dim_; ++d) {
        const Real sign = uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        const Real v = sign * uniform(0.9 * bound_, bound_);
        a(d, intervals_) = v;
        b(d, intervals_) = -v;
      }
      break;
    }
  }
  return {Segment(std::move(a), delta), Segment(std::move(b), delta)};
}

namespace {

// Composite 4-point Gauss-Legendre over 16 equal sub-intervals of [0,1]:
// 64 evaluation points per node interval, exact for polynomials up to
// degree 7 on each sub-interval.
struct ThetaQuadrature {
  static constexpr int kSub = 16;
  static constexpr int kPts = 4 * kSub;
  Real x[kPts];
  Real w[kPts];

  ThetaQuadrature() {
    const Real gx[4] = {0.5 - 0.43056815579702629, 0.5 - 0.16999052179242813,
                        0.5 + 0.16999052179242813, 0.5 + 0.43056815579702629};
    const Real gw[4] = {0.17392742256872693, 0.32607257743127305,
                        0.32607257743127305, 0.17392742256872693};
    for (int s = 0; s < kSub; ++s)
      for (int j = 0; j < 4; ++j) {
        x[4 * s + j] = (static_cast<Real>(s) + gx[j]) / kSub;
        w[4 * s + j] = gw[j] / kSub;
      }
  }
};

const ThetaQuadrature& theta_quadrature() {
  static const ThetaQuadrature q;
  return q;
}

}  // namespace

ViolationReport check_khasminskii_inequality(const SfdeModel& model,
                                             const AssumptionConstants& constants,
                                             SegmentPairSampler& sampler,
                                             long count) {
  model.validate();
  constants.validate();
  if (count < 1) throw ConfigError("check_khasminskii_inequality: count must be >= 1");

  const Real q = constants.q;
  const Real rhat = model.khasminskii_exponent_rhat;
  const auto& quad = theta_quadrature();

  ViolationReport report;
  report.checked = count;
  report.worst_margin = -std::numeric_limits<Real>::infinity();

  for (long n = 0; n < count; ++n) {
    auto [psi, phi] = sampler.next();
    const Real tau = psi.tau();

    const Vec d0 = psi.at_zero() - phi.at_zero();
    const Vec fd = model.drift(psi) - model.drift(phi);
    const Mat gd = model.diffusion(psi) - model.diffusion(phi);
    const Real lhs = 2.0 * d0.dot(fd) + (q - 1.0) * gd.squaredNorm();

    // (1/tau) integrals of |dpsi|^2 and |dpsi|^2 (|psi|^rhat + |phi|^rhat).
    Real int_sq = 0.0;
    Real int_sq_weighted = 0.0;
    const Index m = psi.intervals();
    const Real h = psi.delta();
    for (Index i = 0; i < m; ++i) {
      for (int p = 0; p < ThetaQuadrature::kPts; ++p) {
        const Real xl = 1.0 - quad.x[p];
        const Real xr = quad.x[p];
        const Vec va = xl * psi.node(i) + xr * psi.node(i + 1);
        const Vec vb = xl * phi.node(i) + xr * phi.node(i + 1);
        const Real dsq = (va - vb).squaredNorm();
        const Real weight =
            std::pow(va.norm(), rhat) + std::pow(vb.norm(), rhat);
        int_sq += quad.w[p] * h * dsq;
        int_sq_weighted += quad.w[p] * h * dsq * weight;
      }
    }
    int_sq /= tau;
    int_sq_weighted /= tau;

    const Real d0sq = d0.squaredNorm();
    const Real endpoint_weight = std::pow(psi.at_zero().norm(), rhat) +
                                 std::pow(phi.at_zero().norm(), rhat);
    const Real rhs = constants.alpha0 * (d0sq + int_sq) -
                     constants.alpha1 * d0sq * endpoint_weight +
                     constants.alpha2 * int_sq_weighted;

    const Real margin = lhs - rhs;
    const Real scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    if (margin > 1e-9 * scale) ++report.violations;
    if (margin > report.worst_margin) report.worst_margin = margin;
  }
  return report;
}

}  // namespace sfde
