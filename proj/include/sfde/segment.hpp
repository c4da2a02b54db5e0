#pragma once

#include <cmath>
#include <cstring>
#include <utility>

#include "sfde/errors.hpp"
#include "sfde/types.hpp"

namespace sfde {

/// A continuous-path snapshot on [-tau, 0]: m+1 equidistant node values with
/// linear interpolation between them. Node i holds the value at
/// theta = (i - m) * delta, so node m sits at theta = 0 and node 0 at
/// theta = -tau (tau = m * delta). Immutable after construction.
class Segment {
 public:
  /// nodes: dim x (m+1) matrix, one column per node. Requires m >= 1,
  /// delta > 0 and all-finite entries.
  Segment(Mat nodes, Real delta) : nodes_(std::move(nodes)), delta_(delta) {
    if (delta_ <= 0.0) throw ConfigError("Segment: node spacing must be positive");
    if (nodes_.cols() < 2) throw ConfigError("Segment: need at least two nodes (m >= 1)");
    if (nodes_.rows() < 1) throw ConfigError("Segment: dimension must be positive");
    if (!nodes_.allFinite()) throw DomainError("Segment: node values must be finite");
  }

  /// Segment holding the same value at every node.
  static Segment constant(const Vec& value, Real delta, Index m) {
    if (m < 1) throw ConfigError("Segment::constant: m must be >= 1");
    Mat nodes(value.size(), m + 1);
    nodes.colwise() = value;
    return Segment(std::move(nodes), delta);
  }

  /// Scalar convenience for dim = 1.
  static Segment constant(Real value, Real delta, Index m) {
    return constant(Vec::Constant(1, value), delta, m);
  }

  /// All-zero segment of the given dimension.
  static Segment zero(Index dim, Real delta, Index m) {
    return constant(Vec::Zero(dim), delta, m);
  }

  Index dim() const { return nodes_.rows(); }
  Index intervals() const { return nodes_.cols() - 1; }  // m
  Real delta() const { return delta_; }
  Real tau() const { return delta_ * static_cast<Real>(intervals()); }

  const Mat& nodes() const { return nodes_; }
  /// Node i as a column view, i in [0, m].
  Mat::ConstColXpr node(Index i) const { return nodes_.col(i); }
  /// Value at theta = 0.
  Mat::ConstColXpr at_zero() const { return nodes_.col(intervals()); }

  /// Linear interpolation at theta in [-tau, 0]. Values within
  /// 1e-12 * tau outside the interval are clamped; anything beyond is a
  /// domain error. At a node the node value is returned exactly.
  Vec eval(Real theta) const {
    const Real t = tau();
    const Real tol = 1e-12 * t;
    if (theta < -t - tol || theta > tol)
      throw DomainError("Segment::eval: theta outside [-tau, 0]");
    theta = std::min(std::max(theta, -t), 0.0);

    Real u = (theta + t) / delta_;
    // Snap values that are a hair off a node so node evaluations stay exact.
    const Real u_round = std::round(u);
    if (std::abs(u - u_round) <= 1e-9) u = u_round;

    const Index m = intervals();
    Index i = static_cast<Index>(std::floor(u));
    if (i >= m) i = m - 1;
    if (i < 0) i = 0;
    const Real w = u - static_cast<Real>(i);
    return (1.0 - w) * nodes_.col(i) + w * nodes_.col(i + 1);
  }

  /// Sup norm over theta: by piecewise linearity this is the max of the
  /// Euclidean node norms.
  Real sup_norm() const { return nodes_.colwise().norm().maxCoeff(); }

  /// Exact integral over [-tau, 0] of psi(theta)^power, componentwise.
  /// The integrand is a polynomial of degree <= power on each node interval,
  /// so Gauss-Legendre with ceil((power+1)/2) points per interval is exact.
  /// Powers 2..4 are restricted to scalar segments.
  Vec integral_power(int power) const {
    if (power < 1 || power > 4)
      throw ConfigError("Segment::integral_power: power must be in {1,2,3,4}");
    if (power > 1 && dim() != 1)
      throw ConfigError("Segment::integral_power: powers > 1 require dim == 1");

    const Index m = intervals();
    Vec out(dim());
    for (Index d = 0; d < dim(); ++d) {
      const auto a = nodes_.row(d).segment(0, m).array();  // left endpoints
      const auto b = nodes_.row(d).segment(1, m).array();  // right endpoints
      Real s = 0.0;
      switch (power) {
        case 1:
          // midpoint rule, exact for linear integrands
          s = 0.5 * (a + b).sum();
          break;
        case 2: {
          // 2-point Gauss-Legendre on [0,1], exact to degree 3
          constexpr Real x1 = 0.5 - 0.28867513459481287;  // 1/(2*sqrt(3))
          constexpr Real x2 = 0.5 + 0.28867513459481287;
          s = 0.5 * ((a * (1.0 - x1) + b * x1).square().sum() +
                     (a * (1.0 - x2) + b * x2).square().sum());
          break;
        }
        case 3: {
          constexpr Real x1 = 0.5 - 0.28867513459481287;
          constexpr Real x2 = 0.5 + 0.28867513459481287;
          s = 0.5 * ((a * (1.0 - x1) + b * x1).cube().sum() +
                     (a * (1.0 - x2) + b * x2).cube().sum());
          break;
        }
        case 4: {
          // 3-point Gauss-Legendre on [0,1], exact to degree 5
          constexpr Real xg = 0.3872983346207417;  // sqrt(3/5)/2
          constexpr Real w0 = 4.0 / 9.0;           // 8/18
          constexpr Real w1 = 5.0 / 18.0;
          const auto mid = 0.5 * (a + b);
          s = w0 * mid.square().square().sum() +
              w1 * ((a * (0.5 + xg) + b * (0.5 - xg)).square().square().sum() +
                    (a * (0.5 - xg) + b * (0.5 + xg)).square().square().sum());
          break;
        }
      }
      out(d) = s * delta_;
    }
    return out;
  }

  /// The segment one grid step later: nodes 1..m of this segment followed by
  /// new_node.
  Segment shifted(const Vec& new_node) const& {
    Segment copy(*this);
    return std::move(copy).shifted(new_node);
  }

  /// Rvalue overload reusing the buffer (no allocation).
  Segment shifted(const Vec& new_node) && {
    if (new_node.size() != dim())
      throw ConfigError("Segment::shifted: node dimension mismatch");
    if (!new_node.allFinite())
      throw DomainError("Segment::shifted: node values must be finite");
    const Index m = intervals();
    // Column-major storage: dropping node 0 is a memmove by one column.
    std::memmove(nodes_.data(), nodes_.data() + dim(),
                 sizeof(Real) * static_cast<size_t>(dim() * m));
    nodes_.col(m) = new_node;
    return std::move(*this);
  }

 private:
  Mat nodes_;  // dim x (m+1), column-major; column i = node i
  Real delta_;
};

/// A sampled function of time starting at -tau: strictly increasing times and
/// one value column per time. Plumbing type for full simulated paths.
struct GridFunction {
  Vec times;   // length n, times[0] = -tau
  Mat values;  // dim x n

  void validate() const {
    if (times.size() != values.cols())
      throw ConfigError("GridFunction: times/values length mismatch");
    if (times.size() < 1) throw ConfigError("GridFunction: empty");
    for (Index i = 1; i < times.size(); ++i)
      if (times(i) <= times(i - 1))
        throw ConfigError("GridFunction: times must be strictly increasing");
    if (!values.allFinite())
      throw DomainError("GridFunction: values must be finite");
  }
};

}  // namespace sfde
