#include "coriem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "coriem/error.hpp"

namespace coriem::geo {
namespace {

constexpr double kMaxArc = std::numbers::pi / 2.0 - kEpsDomain;

// Largest representable value strictly below one; atanh argument ceiling.
const double kBelowOne = std::nextafter(1.0, 0.0);

void require_same_space(const ManifoldPoint& x, const ManifoldPoint& y,
                        const char* op) {
  if (x.kappa != y.kappa) {
    std::ostringstream os;
    os << op << ": curvature mismatch (" << x.kappa.value() << " vs "
       << y.kappa.value() << ")";
    throw CurvatureMismatch(os.str());
  }
  if (x.dim() != y.dim()) {
    std::ostringstream os;
    os << op << ": dimension mismatch (" << x.dim() << " vs " << y.dim() << ")";
    throw DimensionMismatch(os.str());
  }
}

void require_domain(const ManifoldPoint& x, const char* op) {
  if (!in_domain(x.coords, x.kappa)) {
    throw DomainError(std::string(op) + ": point outside the manifold domain");
  }
}

// tan_kappa with the kappa > 0 arc clamped instead of rejected.
double tan_clamped(double z, Curvature kappa) {
  if (kappa.sign() > 0) {
    return std::tan(std::clamp(z, -kMaxArc, kMaxArc));
  }
  return tan_kappa(z, kappa);
}

// arctan_kappa with the kappa < 0 argument clamped below one.
double arctan_clamped(double z, Curvature kappa) {
  if (kappa.sign() < 0) {
    return std::atanh(std::clamp(z, -kBelowOne, kBelowOne));
  }
  return arctan_kappa(z, kappa);
}

}  // namespace

Curvature::Curvature(double value) : value_(value) {
  if (!std::isfinite(value)) {
    throw UsageError("curvature must be finite");
  }
}

bool Curvature::flat() const noexcept { return std::abs(value_) < kEpsKappa; }

int Curvature::sign() const noexcept {
  if (flat()) return 0;
  return value_ < 0.0 ? -1 : 1;
}

double Curvature::sqrt_abs() const noexcept { return std::sqrt(std::abs(value_)); }

ManifoldPoint ManifoldPoint::origin(Eigen::Index dim, Curvature kappa) {
  return ManifoldPoint{Vector::Zero(dim), kappa};
}

double tan_kappa(double z, Curvature kappa) {
  switch (kappa.sign()) {
    case -1:
      return std::tanh(z);
    case 0:
      return z;
    default:
      if (std::abs(z) >= std::numbers::pi / 2.0) {
        throw DomainError("tan_kappa: |z| >= pi/2 for positive curvature");
      }
      return std::tan(z);
  }
}

double arctan_kappa(double z, Curvature kappa) {
  switch (kappa.sign()) {
    case -1:
      if (std::abs(z) >= 1.0) {
        throw DomainError("arctan_kappa: |z| >= 1 for negative curvature");
      }
      return std::atanh(z);
    case 0:
      return z;
    default:
      return std::atan(z);
  }
}

bool in_domain(const Vector& x, Curvature kappa) noexcept {
  if (!x.allFinite()) return false;
  if (kappa.sign() >= 0) return true;
  return -kappa.value() * x.squaredNorm() < 1.0;
}

ManifoldPoint make_point(Vector coords, Curvature kappa) {
  ManifoldPoint p{std::move(coords), kappa};
  require_domain(p, "make_point");
  return p;
}

ManifoldPoint project(ManifoldPoint x) {
  if (x.kappa.sign() < 0) {
    const double max_norm = (1.0 - kEpsDomain) / x.kappa.sqrt_abs();
    const double n = x.coords.norm();
    if (n > max_norm) x.coords *= max_norm / n;
  }
  return x;
}

double conformal_factor(const ManifoldPoint& x) {
  if (x.kappa.flat()) return 2.0;
  return 2.0 / (1.0 + x.kappa.value() * x.coords.squaredNorm());
}

ManifoldPoint mobius_neg(const ManifoldPoint& x) { return ManifoldPoint{-x.coords, x.kappa}; }

ManifoldPoint mobius_add(const ManifoldPoint& x, const ManifoldPoint& y) {
  require_same_space(x, y, "mobius_add");
  require_domain(x, "mobius_add");
  require_domain(y, "mobius_add");
  if (x.kappa.flat()) return ManifoldPoint{x.coords + y.coords, x.kappa};

  const double k = x.kappa.value();
  const double xy = x.coords.dot(y.coords);
  const double x2 = x.coords.squaredNorm();
  const double y2 = y.coords.squaredNorm();
  const double den = 1.0 - 2.0 * k * xy + k * k * x2 * y2;
  if (den < kEpsDen) {
    throw DomainError("mobius_add: denominator vanishes (antipodal configuration)");
  }
  Vector num = (1.0 - 2.0 * k * xy - k * y2) * x.coords + (1.0 + k * x2) * y.coords;
  return project(ManifoldPoint{num / den, x.kappa});
}

// Scaling without the input domain check; the gyromidpoint feeds it an
// intermediate vector that sits on the boundary of the safe radius.
static ManifoldPoint scale_unchecked(double r, const ManifoldPoint& x) {
  const double n = x.coords.norm();
  if (n == 0.0) return x;
  if (x.kappa.flat()) return ManifoldPoint{r * x.coords, x.kappa};

  const double s = x.kappa.sqrt_abs();
  const double arc = r * arctan_clamped(s * n, x.kappa);
  return project(ManifoldPoint{(tan_clamped(arc, x.kappa) / (s * n)) * x.coords, x.kappa});
}

ManifoldPoint mobius_scale(double r, const ManifoldPoint& x) {
  require_domain(x, "mobius_scale");
  return scale_unchecked(r, x);
}

ManifoldPoint mobius_matvec(const Matrix& m, const ManifoldPoint& x) {
  if (m.cols() != x.dim()) {
    std::ostringstream os;
    os << "mobius_matvec: matrix has " << m.cols() << " columns but point has dimension "
       << x.dim();
    throw DimensionMismatch(os.str());
  }
  require_domain(x, "mobius_matvec");
  Vector mx = m * x.coords;
  if (x.kappa.flat()) return ManifoldPoint{std::move(mx), x.kappa};

  const double xn = x.coords.norm();
  const double mxn = mx.norm();
  if (xn == 0.0 || mxn == 0.0) return ManifoldPoint::origin(m.rows(), x.kappa);

  const double s = x.kappa.sqrt_abs();
  const double arc = (mxn / xn) * arctan_clamped(s * xn, x.kappa);
  return project(ManifoldPoint{(tan_clamped(arc, x.kappa) / (s * mxn)) * mx, x.kappa});
}

ManifoldPoint exp_map(const TangentVector& v) {
  const ManifoldPoint& x = v.base;
  if (v.coords.size() != x.dim()) {
    throw DimensionMismatch("exp_map: tangent vector and base point differ in dimension");
  }
  require_domain(x, "exp_map");
  const double vn = v.coords.norm();
  if (vn == 0.0) return x;
  if (x.kappa.flat()) return ManifoldPoint{x.coords + v.coords, x.kappa};

  const double s = x.kappa.sqrt_abs();
  const double arc = s * conformal_factor(x) * vn / 2.0;
  ManifoldPoint step{(tan_clamped(arc, x.kappa) / (s * vn)) * v.coords, x.kappa};
  return mobius_add(x, project(std::move(step)));
}

TangentVector log_map(const ManifoldPoint& x, const ManifoldPoint& y) {
  require_same_space(x, y, "log_map");
  ManifoldPoint w = mobius_add(mobius_neg(x), y);
  const double wn = w.coords.norm();
  if (wn == 0.0) return TangentVector{Vector::Zero(x.dim()), x};
  if (x.kappa.flat()) return TangentVector{std::move(w.coords), x};

  const double s = x.kappa.sqrt_abs();
  const double scale = 2.0 / (conformal_factor(x) * s) * arctan_clamped(s * wn, x.kappa) / wn;
  return TangentVector{scale * w.coords, x};
}

ManifoldPoint exp0(const Vector& v, Curvature kappa) {
  return exp_map(TangentVector{v, ManifoldPoint::origin(v.size(), kappa)});
}

Vector log0(const ManifoldPoint& x) {
  return log_map(ManifoldPoint::origin(x.dim(), x.kappa), x).coords;
}

double distance(const ManifoldPoint& x, const ManifoldPoint& y) {
  require_same_space(x, y, "distance");
  if (x.kappa.flat()) return 2.0 * (y.coords - x.coords).norm();
  const ManifoldPoint w = mobius_add(mobius_neg(x), y);
  const double s = x.kappa.sqrt_abs();
  return 2.0 / s * arctan_clamped(s * w.coords.norm(), x.kappa);
}

ManifoldPoint map_between(const ManifoldPoint& x, Curvature kappa2) {
  if (x.kappa == kappa2) return x;
  return exp0(log0(x), kappa2);
}

ManifoldPoint gyromidpoint(std::span<const ManifoldPoint> points,
                           std::span<const double> weights) {
  if (points.empty()) throw UsageError("gyromidpoint: empty point set");
  if (weights.size() != points.size()) {
    throw DimensionMismatch("gyromidpoint: weight count differs from point count");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw UsageError("gyromidpoint: weights must be finite and non-negative");
    }
    total += w;
  }
  if (total == 0.0) throw UsageError("gyromidpoint: all weights are zero");

  const ManifoldPoint& first = points.front();
  for (const auto& p : points) {
    require_same_space(first, p, "gyromidpoint");
    require_domain(p, "gyromidpoint");
  }

  Vector acc = Vector::Zero(first.dim());
  if (first.kappa.flat()) {
    for (std::size_t k = 0; k < points.size(); ++k) acc += weights[k] * points[k].coords;
    return ManifoldPoint{acc / total, first.kappa};
  }

  double den = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double lambda = conformal_factor(points[k]);
    acc += (weights[k] * lambda) * points[k].coords;
    den += weights[k] * (lambda - 1.0);
  }
  if (std::abs(den) < 1e-12) {
    throw DomainError("gyromidpoint: points are spread too widely for a midpoint");
  }
  return scale_unchecked(0.5, ManifoldPoint{acc / den, first.kappa});
}

ManifoldPoint gyromidpoint(std::span<const ManifoldPoint> points) {
  std::vector<double> ones(points.size(), 1.0);
  return gyromidpoint(points, ones);
}

ManifoldPoint geodesic_midpoint(const ManifoldPoint& x, const ManifoldPoint& y) {
  TangentVector v = log_map(x, y);
  v.coords *= 0.5;
  return exp_map(v);
}

}  // namespace coriem::geo
