#include "coriem/tape_manifold.hpp"

#include <cmath>
#include <numbers>

#include "coriem/error.hpp"

namespace coriem::ad {
namespace {

constexpr double kTinyNorm = 1e-15;
constexpr double kMaxArc = std::numbers::pi / 2.0 - geo::kEpsDomain;
const double kBelowOne = std::nextafter(1.0, 0.0);

Var safe_norm(Var x) { return clamp_min(norm(x), kTinyNorm); }

// Scaling without the trailing projection of the input.
Var scale_raw(double r, Var x, Curvature kappa) {
  if (kappa.flat()) return r * x;
  const double s = kappa.sqrt_abs();
  Var n = safe_norm(x);
  Var arc = r * arctan_kappa(s * n, kappa);
  return project(x * (tan_kappa(arc, kappa) / (s * n)), kappa);
}

}  // namespace

Var tan_kappa(Var z, Curvature kappa) {
  switch (kappa.sign()) {
    case -1:
      return tanh(z);
    case 0:
      return z;
    default:
      return tan(clamp_max(clamp_min(z, -kMaxArc), kMaxArc));
  }
}

Var arctan_kappa(Var z, Curvature kappa) {
  switch (kappa.sign()) {
    case -1:
      return atanh(clamp_max(clamp_min(z, -kBelowOne), kBelowOne));
    case 0:
      return z;
    default:
      return atan(z);
  }
}

Var project(Var x, Curvature kappa) {
  if (kappa.sign() >= 0) return x;
  return ball_project(x, (1.0 - geo::kEpsDomain) / kappa.sqrt_abs());
}

Var conformal_factor(Var x, Curvature kappa) {
  Tape& tape = *x.tape();
  if (kappa.flat()) return tape.constant(2.0);
  return tape.constant(2.0) / affine(sumsq(x), kappa.value(), 1.0);
}

Var mobius_add(Var x, Var y, Curvature kappa) {
  if (x.size() != y.size()) throw DimensionMismatch("mobius_add: dimension mismatch");
  if (kappa.flat()) return x + y;
  const double k = kappa.value();
  Var xy = dot(x, y);
  Var x2 = sumsq(x);
  Var y2 = sumsq(y);
  Var lin = affine(xy, -2.0 * k, 1.0);
  Var cx = lin - k * y2;
  Var cy = affine(x2, k, 1.0);
  Var den = clamp_min(lin + (k * k) * (x2 * y2), geo::kEpsDen);
  return project((x * cx + y * cy) / den, kappa);
}

Var mobius_scale(double r, Var x, Curvature kappa) { return scale_raw(r, x, kappa); }

Var mobius_matvec(Var m, std::uint32_t rows, Var x, Curvature kappa) {
  Var mx = matvec(m, x, rows);
  if (kappa.flat()) return mx;
  const double s = kappa.sqrt_abs();
  Var xn = safe_norm(x);
  Var mxn = safe_norm(mx);
  Var arc = (mxn / xn) * arctan_kappa(s * xn, kappa);
  return project(mx * (tan_kappa(arc, kappa) / (s * mxn)), kappa);
}

Var exp_map(Var x, Var v, Curvature kappa) {
  if (kappa.flat()) return x + v;
  const double s = kappa.sqrt_abs();
  Var vn = safe_norm(v);
  Var arc = (0.5 * s) * (conformal_factor(x, kappa) * vn);
  Var step = project(v * (tan_kappa(arc, kappa) / (s * vn)), kappa);
  return mobius_add(x, step, kappa);
}

Var log_map(Var x, Var y, Curvature kappa) {
  Var w = mobius_add(-x, y, kappa);
  if (kappa.flat()) return w;
  const double s = kappa.sqrt_abs();
  Var wn = safe_norm(w);
  Var coef = (2.0 / s) * (arctan_kappa(s * wn, kappa) / (conformal_factor(x, kappa) * wn));
  return w * coef;
}

Var exp0(Var v, Curvature kappa) {
  if (kappa.flat()) return v;
  const double s = kappa.sqrt_abs();
  Var vn = safe_norm(v);
  return project(v * (tan_kappa(s * vn, kappa) / (s * vn)), kappa);
}

Var log0(Var x, Curvature kappa) {
  if (kappa.flat()) return x;
  const double s = kappa.sqrt_abs();
  Var n = safe_norm(x);
  return x * (arctan_kappa(s * n, kappa) / (s * n));
}

Var distance(Var x, Var y, Curvature kappa) {
  if (kappa.flat()) return 2.0 * norm(y - x);
  const double s = kappa.sqrt_abs();
  Var w = mobius_add(-x, y, kappa);
  return (2.0 / s) * arctan_kappa(s * norm(w), kappa);
}

Var map_between(Var x, Curvature from, Curvature to) {
  if (from == to) return x;
  return exp0(log0(x, from), to);
}

Var gyromidpoint(std::span<const Var> points, std::span<const Var> weights, Curvature kappa) {
  if (points.empty()) throw UsageError("gyromidpoint: empty point set");
  if (!weights.empty() && weights.size() != points.size()) {
    throw DimensionMismatch("gyromidpoint: weight count differs from point count");
  }
  const bool uniform = weights.empty();

  if (kappa.flat()) {
    Var acc = uniform ? points[0] : points[0] * weights[0];
    for (std::size_t k = 1; k < points.size(); ++k) {
      acc = acc + (uniform ? points[k] : points[k] * weights[k]);
    }
    if (uniform) return acc / static_cast<double>(points.size());
    Var total = weights[0];
    for (std::size_t k = 1; k < weights.size(); ++k) total = total + weights[k];
    return acc / total;
  }

  Var num;
  Var den;
  for (std::size_t k = 0; k < points.size(); ++k) {
    Var lambda = conformal_factor(points[k], kappa);
    Var coef = uniform ? lambda : weights[k] * lambda;
    Var excess = uniform ? lambda - 1.0 : weights[k] * (lambda - 1.0);
    Var term = points[k] * coef;
    num = k == 0 ? term : num + term;
    den = k == 0 ? excess : den + excess;
  }
  den = den.value() >= 0.0 ? clamp_min(den, 1e-12) : clamp_max(den, -1e-12);
  return scale_raw(0.5, num / den, kappa);
}

}  // namespace coriem::ad
