#include "sfde/truncation.hpp"

#include <algorithm>
#include <cmath>

namespace sfde {

namespace {

// ||xi|| estimated on a dense theta grid; exact for constant initials and
// within O(c2 tau / n) of the sup for Holder-continuous ones.
Real initial_sup_norm(const SfdeModel& model, int samples = 1024) {
  Real sup = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const Real theta = -model.tau + model.tau * static_cast<Real>(i) / samples;
    sup = std::max(sup, model.initial(theta).norm());
  }
  return sup;
}

}  // namespace

TruncationPolicy make_policy(const SfdeModel& model, Real h_scale, Real varrho) {
  model.validate();
  if (h_scale <= 0.0) throw ConfigError("make_policy: h_scale must be positive");
  if (!(varrho > 0.0 && varrho < 0.5))
    throw ConfigError("make_policy: varrho must lie in (0, 1/2)");

  TruncationPolicy policy;
  policy.h_scale = h_scale;
  policy.r_exp = model.growth_exponent_r;
  policy.varrho = varrho;

  // c4 = H(||xi||) v H(1) v |f(0)| v |g(0)|, with 0 the zero segment.
  const Index m0 = 64;
  const Segment zero = Segment::zero(model.dim_state, model.tau / m0, m0);
  const Real f0 = model.drift(zero).norm();
  const Real g0 = model.diffusion(zero).norm();
  policy.c4 = std::max({policy.h(initial_sup_norm(model)), policy.h(1.0), f0, g0});

  policy.validate();
  return policy;
}

Real radius(const TruncationPolicy& policy, Real delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw DomainError("radius: delta must lie in (0, 1]");
  if (!policy.truncation_active())
    return std::numeric_limits<Real>::infinity();
  return std::pow(policy.c4 * std::pow(delta, -policy.varrho) / policy.h_scale,
                  1.0 / policy.r_exp);
}

}  // namespace sfde
