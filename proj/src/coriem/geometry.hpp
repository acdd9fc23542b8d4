#pragma once

// Gyrovector calculus on the kappa-stereographic model.
//
// One set of formulas covers the Poincare ball (kappa < 0), Euclidean space
// (kappa = 0) and the stereographically projected sphere (kappa > 0). For
// |kappa| < kEpsKappa every operation switches to its analytic flat limit, so
// kappa = 0 results are exact rather than limits of 0/0 expressions.
//
// Manifold-producing operations keep their output on the manifold: for
// kappa < 0 the result is pulled back inside the radius
// (1 - kEpsDomain) / sqrt(-kappa), and for kappa > 0 the arc fed to tan() is
// clamped to pi/2 - kEpsDomain.

#include <span>
#include <Eigen/Dense>

namespace coriem::geo {

inline constexpr double kEpsKappa = 1e-7;
inline constexpr double kEpsDomain = 1e-5;
inline constexpr double kEpsDen = 1e-15;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sectional curvature of a constant-curvature space.
class Curvature {
 public:
  Curvature() = default;
  explicit Curvature(double value);

  double value() const noexcept { return value_; }
  bool flat() const noexcept;
  /// -1, 0 or +1; 0 whenever flat().
  int sign() const noexcept;
  double sqrt_abs() const noexcept;

  friend bool operator==(const Curvature&, const Curvature&) = default;

 private:
  double value_ = 0.0;
};

struct ManifoldPoint {
  Vector coords;
  Curvature kappa;

  Eigen::Index dim() const noexcept { return coords.size(); }
  static ManifoldPoint origin(Eigen::Index dim, Curvature kappa);
};

struct TangentVector {
  Vector coords;
  ManifoldPoint base;
};

/// tanh for kappa < 0, identity when flat, tan for kappa > 0.
/// Throws DomainError when kappa > 0 and |z| >= pi/2.
double tan_kappa(double z, Curvature kappa);
/// Inverse of tan_kappa on its range. Throws DomainError when kappa < 0 and
/// |z| >= 1.
double arctan_kappa(double z, Curvature kappa);

bool in_domain(const Vector& x, Curvature kappa) noexcept;
/// Validating constructor; throws DomainError when -kappa |x|^2 >= 1.
ManifoldPoint make_point(Vector coords, Curvature kappa);
/// Pulls a point back inside the safe radius (no-op for kappa >= 0).
ManifoldPoint project(ManifoldPoint x);

double conformal_factor(const ManifoldPoint& x);

ManifoldPoint mobius_neg(const ManifoldPoint& x);
ManifoldPoint mobius_add(const ManifoldPoint& x, const ManifoldPoint& y);
ManifoldPoint mobius_scale(double r, const ManifoldPoint& x);
ManifoldPoint mobius_matvec(const Matrix& m, const ManifoldPoint& x);

ManifoldPoint exp_map(const TangentVector& v);
TangentVector log_map(const ManifoldPoint& x, const ManifoldPoint& y);
/// exp and log based at the origin (the common reference point).
ManifoldPoint exp0(const Vector& v, Curvature kappa);
Vector log0(const ManifoldPoint& x);

double distance(const ManifoldPoint& x, const ManifoldPoint& y);

/// exp0 at kappa2 of log0 at the point's own curvature.
ManifoldPoint map_between(const ManifoldPoint& x, Curvature kappa2);

/// Weighted gyromidpoint. Weights must be non-negative and not all zero.
ManifoldPoint gyromidpoint(std::span<const ManifoldPoint> points,
                           std::span<const double> weights);
/// Uniform-weight overload.
ManifoldPoint gyromidpoint(std::span<const ManifoldPoint> points);

/// Midpoint of the geodesic segment from x to y.
ManifoldPoint geodesic_midpoint(const ManifoldPoint& x, const ManifoldPoint& y);

}  // namespace coriem::geo
