#include <cmath>
#include <numbers>

#include "coriem/error.hpp"
#include "coriem/geometry.hpp"
#include "doctest.h"
#include "geo_properties.hpp"

using namespace coriem;
using namespace coriem::geo;

namespace {

ManifoldPoint pt(std::initializer_list<double> xs, double k) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return ManifoldPoint{v, Curvature(k)};
}

}  // namespace

TEST_CASE("curvature rejects non-finite values and snaps tiny values to flat") {
  CHECK_THROWS_AS(Curvature{NAN}, UsageError);
  CHECK_THROWS_AS(Curvature{INFINITY}, UsageError);
  CHECK(Curvature(5e-8).flat());
  CHECK(Curvature(5e-8).sign() == 0);
  CHECK(Curvature(-2e-7).sign() == -1);
  CHECK(Curvature(4.0).sqrt_abs() == doctest::Approx(2.0));
}

TEST_CASE("tan_kappa branches") {
  for (double k : {-1.0, 0.0, 1.0}) CHECK(tan_kappa(0.0, Curvature(k)) == 0.0);
  CHECK(tan_kappa(0.5, Curvature(-1)) == doctest::Approx(0.46212).epsilon(1e-5));
  CHECK(tan_kappa(0.5, Curvature(0)) == 0.5);
  CHECK(tan_kappa(0.5, Curvature(1)) == doctest::Approx(std::tan(0.5)));
  CHECK_THROWS_AS(tan_kappa(std::numbers::pi / 2, Curvature(1)), DomainError);
  CHECK_THROWS_AS(arctan_kappa(1.0, Curvature(-1)), DomainError);
  for (double k : {-1.0, 0.0, 1.0}) {
    CHECK(arctan_kappa(tan_kappa(0.7, Curvature(k)), Curvature(k)) == doctest::Approx(0.7));
  }
}

TEST_CASE("mobius_add scalar oracle") {
  auto r = mobius_add(pt({0.3, 0.0}, -1), pt({0.4, 0.0}, -1));
  CHECK(r.coords[0] == doctest::Approx((0.3 + 0.4) / (1 + 0.3 * 0.4)).epsilon(1e-12));
  CHECK(r.coords[0] == doctest::Approx(0.625));
  CHECK(r.coords[1] == 0.0);
  auto f = mobius_add(pt({0.3, -2.0}, 0), pt({0.4, 1.0}, 0));
  CHECK(f.coords[0] == 0.3 + 0.4);
  CHECK(f.coords[1] == -1.0);
}

TEST_CASE("mobius_add errors") {
  CHECK_THROWS_AS(mobius_add(pt({0.1, 0.0}, -1), pt({0.1, 0.0}, 1)), CurvatureMismatch);
  CHECK_THROWS_AS(mobius_add(pt({0.1, 0.0}, -1), pt({0.1}, -1)), DimensionMismatch);
  CHECK_THROWS_AS(make_point(Vector::Constant(2, 1.0), Curvature(-1)), DomainError);
}

TEST_CASE("mobius_scale") {
  auto x = pt({0.5, 0.0}, -1);
  CHECK((mobius_scale(1.0, x).coords - x.coords).norm() < 1e-12);
  CHECK(mobius_scale(3.0, pt({0.0, 0.0}, -1)).coords.norm() == 0.0);
  auto y = mobius_scale(2.0, x);
  CHECK(y.coords[0] == doctest::Approx(std::tanh(2.0 * std::atanh(0.5))));
  CHECK(y.coords[0] == doctest::Approx(0.8));
}

TEST_CASE("mobius_matvec") {
  auto x = pt({0.2, -0.3, 0.1}, -1);
  CHECK((mobius_matvec(Matrix::Identity(3, 3), x).coords - x.coords).norm() < 1e-12);
  Matrix m(2, 3);
  m << 1, 2, 3, -1, 0, 4;
  auto flat = mobius_matvec(m, pt({0.2, -0.3, 0.1}, 0));
  CHECK((flat.coords - m * Vector(x.coords)).norm() == 0.0);
  auto o = mobius_matvec(m, pt({0.0, 0.0, 0.0}, -1));
  CHECK(o.dim() == 2);
  CHECK(o.coords.norm() == 0.0);
  auto r = mobius_matvec(m, x);
  Vector dir = m * x.coords;
  CHECK((r.coords.normalized() - dir.normalized()).norm() < 1e-12);
  CHECK_THROWS_AS(mobius_matvec(Matrix::Identity(2, 2), x), DimensionMismatch);
}

TEST_CASE("exp and log maps") {
  auto x = pt({0.1, 0.2}, -1);
  CHECK((exp_map({Vector::Zero(2), x}).coords - x.coords).norm() < 1e-15);
  Vector v(2);
  v << 0.5, 0.0;
  CHECK((exp0(v, Curvature(0)).coords - v).norm() == 0.0);
  auto e = exp0(v, Curvature(-1));
  CHECK(e.coords[0] == doctest::Approx(0.46212).epsilon(1e-5));
  CHECK(e.coords[0] == doctest::Approx(std::tanh(0.5)));
  CHECK((log0(e) - v).norm() < 1e-12);
}

TEST_CASE("distance") {
  auto x = pt({0.1, 0.2}, -1);
  CHECK(distance(x, x) < 1e-12);
  CHECK(distance(pt({0, 0}, -1), pt({0.5, 0}, -1)) == doctest::Approx(2 * std::atanh(0.5)));
  CHECK(distance(pt({0, 0}, -1), pt({0.5, 0}, -1)) == doctest::Approx(1.09861).epsilon(1e-5));
  CHECK(distance(pt({1, 2}, 0), pt({4, 6}, 0)) == 10.0);
  CHECK_THROWS_AS(distance(pt({0, 0}, -1), pt({0, 0}, 1)), CurvatureMismatch);
}

TEST_CASE("conformal factor") {
  CHECK(conformal_factor(pt({0, 0}, -1)) == 2.0);
  CHECK(conformal_factor(pt({0, 0}, 1)) == 2.0);
  CHECK(conformal_factor(pt({3, 4}, 0)) == 2.0);
  CHECK(conformal_factor(pt({0.3, 0.4}, -1)) == doctest::Approx(2.0 / 0.75));
}

TEST_CASE("map_between") {
  auto x = pt({0.5, 0.0}, -1);
  CHECK(map_between(x, Curvature(-1)).coords == x.coords);
  CHECK(map_between(pt({0, 0}, -1), Curvature(1)).coords.norm() == 0.0);
  auto f = map_between(x, Curvature(0));
  CHECK(f.coords[0] == doctest::Approx(std::atanh(0.5)));
  CHECK(f.coords[0] == doctest::Approx(0.54931).epsilon(1e-5));
  CHECK(f.kappa == Curvature(0));
}

TEST_CASE("gyromidpoint") {
  auto x = pt({0.5}, -1);
  const ManifoldPoint one[] = {x};
  const double w1[] = {1.0};
  // Scalar oracle: half-scaling of lambda/(lambda-1) * x.
  const double lam = 2.0 / (1.0 - 0.25);
  const double inner = lam / (lam - 1.0) * 0.5;
  const double expect = std::tanh(0.5 * std::atanh(inner));
  CHECK(gyromidpoint(one, w1).coords[0] == doctest::Approx(expect));
  CHECK(gyromidpoint(one, w1).coords[0] == doctest::Approx(0.5));

  const ManifoldPoint sym[] = {pt({0.3, -0.2}, 1), pt({-0.3, 0.2}, 1)};
  CHECK(gyromidpoint(sym).coords.norm() < 1e-12);

  const ManifoldPoint flat[] = {pt({1, 2}, 0), pt({3, -2}, 0)};
  auto m = gyromidpoint(flat);
  CHECK(m.coords[0] == doctest::Approx(2.0));
  CHECK(m.coords[1] == doctest::Approx(0.0));

  CHECK_THROWS_AS(gyromidpoint(std::span<const ManifoldPoint>{}), UsageError);
  const double zeros[] = {0.0, 0.0};
  CHECK_THROWS_AS(gyromidpoint(flat, zeros), UsageError);
}

TEST_CASE("geodesic midpoint is equidistant") {
  for (double k : {-1.0, 0.0, 1.0}) {
    auto a = pt({0.3, -0.1}, k);
    auto b = pt({-0.2, 0.4}, k);
    auto m = geodesic_midpoint(a, b);
    CHECK(distance(a, m) == doctest::Approx(distance(m, b)).epsilon(1e-9));
    CHECK(distance(a, m) == doctest::Approx(0.5 * distance(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("gyrovector properties hold on random draws") {
  for (double k : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    for (const auto& r : testing::run_geometry_properties(k, 200, 17)) {
      INFO("kappa=" << k << " property=" << r.name << " worst=" << r.worst);
      CHECK(r.passed());
    }
  }
}
