#pragma once

#include <limits>

#include "sfde/model.hpp"

namespace sfde {

/// Parameters of the dominating function H(R) = K R^r, the constant c4 and
/// the exponent varrho that together set the truncation radius
/// R(delta) = H^{-1}(c4 delta^{-varrho}). A policy with r = 0 degenerates to
/// the identity mapping (R = infinity), which lets globally Lipschitz models
/// run through the same code path untruncated.
struct TruncationPolicy {
  Real h_scale = 1.0;   // K
  Real r_exp = 0.0;     // r
  Real c4 = 1.0;
  Real varrho = 1.0 / 3.0;  // in (0, 1/2)

  bool truncation_active() const { return r_exp > 0.0; }

  Real h(Real x) const { return h_scale * std::pow(x, r_exp); }

  void validate() const {
    if (h_scale <= 0.0) throw ConfigError("TruncationPolicy: h_scale must be positive");
    if (r_exp < 0.0) throw ConfigError("TruncationPolicy: r exponent must be nonnegative");
    if (!(varrho > 0.0 && varrho < 0.5))
      throw ConfigError("TruncationPolicy: varrho must lie in (0, 1/2)");
    if (c4 <= 0.0) throw ConfigError("TruncationPolicy: c4 must be positive");
  }
};

/// Builds the policy for a model: c4 = max(H(||xi||), H(1), |f(0)|, |g(0)|)
/// with ||xi|| estimated on a dense grid (exact for constant initials).
/// varrho defaults to 1/3, the choice under which the truncated scheme
/// attains its proven segment rate for r > 0.
TruncationPolicy make_policy(const SfdeModel& model, Real h_scale = 1.0,
                             Real varrho = 1.0 / 3.0);

/// R(delta) = (c4 delta^{-varrho} / K)^{1/r} for r > 0, infinity for r = 0.
/// Requires delta in (0, 1].
Real radius(const TruncationPolicy& policy, Real delta);

/// Radial projection into the closed ball of the given radius:
/// x when |x| <= R, else R x/|x|; 0 maps to 0. Ties |x| = R return x
/// unchanged. radius may be infinity (identity). Rescales until the
/// computed norm is within the ball, so the mapping is exactly idempotent
/// and the returned norm never exceeds R.
inline Vec pi_delta(Vec x, Real radius) {
  Real n = x.norm();
  while (n > radius && n > 0.0) {
    x *= radius / n;
    n = x.norm();
  }
  return x;
}

}  // namespace sfde
