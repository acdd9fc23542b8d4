#include <cmath>
#include <random>

#include "coriem/error.hpp"
#include "coriem/geometry.hpp"
#include "coriem/tape.hpp"
#include "coriem/tape_manifold.hpp"
#include "doctest.h"
#include "grad_properties.hpp"

using namespace coriem;
using namespace coriem::ad;

TEST_CASE("add and tanh partials") {
  ParameterSet p;
  p.add("a", 1, 1, {0.3});
  p.add("b", 1, 1, {-1.2});
  Tape t;
  Var s = t.param(p, 0) + t.param(p, 1);
  CHECK(s.value() == doctest::Approx(-0.9));
  auto g = t.backward(s, p);
  CHECK(g[0][0] == 1.0);
  CHECK(g[1][0] == 1.0);

  Tape t2;
  Var y = tanh(t2.param(p, 0));
  auto g2 = t2.backward(y, p);
  CHECK(g2[0][0] == doctest::Approx(1.0 - std::tanh(0.3) * std::tanh(0.3)));
  CHECK(g2[1][0] == 0.0);
}

TEST_CASE("single parameter and squared norm") {
  ParameterSet p;
  p.add("x", 3, 1, {1.0, -2.0, 0.5});
  Tape t;
  auto g = t.backward(sumsq(t.param(p, 0)), p);
  CHECK(g[0][0] == 2.0);
  CHECK(g[0][1] == -4.0);
  CHECK(g[0][2] == 1.0);

  ParameterSet q;
  q.add("s", 1, 1, {4.0});
  Tape t2;
  CHECK(t2.backward(t2.param(q, 0), q)[0][0] == 1.0);
}

TEST_CASE("param leaves are shared per index") {
  ParameterSet p;
  p.add("x", 2, 1, {1.0, 2.0});
  Tape t;
  Var a = t.param(p, 0);
  Var b = t.param(p, 0);
  CHECK(a.id() == b.id());
  auto g = t.backward(sum(a * b), p);
  CHECK(g[0][0] == 2.0);
  CHECK(g[0][1] == 4.0);
}

TEST_CASE("record validation") {
  Tape t;
  const double v3[] = {1, 2, 3};
  const double v2[] = {1, 2};
  Var a = t.constant(v3);
  Var b = t.constant(v2);
  CHECK_THROWS_AS(a + b, UsageError);
  const Var one[] = {a};
  CHECK_THROWS_AS(t.record(Op::Leaf, one), UsageError);
  CHECK_THROWS_AS(t.record(Op::Add, one), UsageError);
  CHECK_THROWS_AS(t.record(Op::Count_, one), UsageError);
  ParameterSet p;
  p.add("x", 3, 1, {1, 2, 3});
  CHECK_THROWS_AS(t.backward(a, p), UsageError);
  CHECK_THROWS_AS(matvec(a, a, 2), UsageError);
}

TEST_CASE("broadcasting a scalar operand") {
  ParameterSet p;
  p.add("x", 3, 1, {1.0, 2.0, 3.0});
  p.add("s", 1, 1, {2.0});
  Tape t;
  Var y = sum(t.param(p, 0) * t.param(p, 1));
  CHECK(y.value() == 12.0);
  auto g = t.backward(y, p);
  CHECK(g[1][0] == 6.0);
  CHECK(g[0][2] == 2.0);
}

TEST_CASE("unreachable parameters receive zero gradient") {
  ParameterSet p;
  p.add("used", 2, 1, {0.5, 0.1});
  p.add("unused", 2, 2, {1, 2, 3, 4});
  Tape t;
  t.param(p, 1);
  auto g = t.backward(norm(t.param(p, 0)), p);
  for (double v : g[1]) CHECK(v == 0.0);
}

TEST_CASE("grad_check on linear and constant functions") {
  ParameterSet p;
  p.add("x", 4, 1, {0.1, -0.4, 2.0, 3.0});
  const std::vector<double> w = {1.5, -2.0, 0.25, 4.0};
  auto lin = grad_check(
      [&](Tape& t, const ParameterSet& ps) { return dot(t.param(ps, 0), t.constant(w)) + 3.0; }, p);
  CHECK(lin.passed);
  CHECK(lin.max_rel_error < 1e-9);

  auto cst = grad_check([](Tape& t, const ParameterSet&) { return t.constant(5.0); }, p);
  CHECK(cst.passed);
  for (const auto& e : cst.entries) {
    CHECK(e.analytic == 0.0);
    CHECK(e.numeric == 0.0);
  }
}

TEST_CASE("grad_check detects a wrong derivative") {
  ParameterSet p;
  p.add("x", 1, 1, {0.7});
  // x * const(x): the constant copy hides half of the derivative.
  auto rep = grad_check(
      [](Tape& t, const ParameterSet& ps) {
        Var x = t.param(ps, 0);
        return x * t.constant(x.value());
      },
      p);
  CHECK_FALSE(rep.passed);
}

TEST_CASE("tape manifold forward values match the geometry module") {
  std::mt19937_64 rng(3);
  for (double kv : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    const geo::Curvature k(kv);
    for (int trial = 0; trial < 20; ++trial) {
      geo::Vector xv = testing::random_interior(rng, 3, kv);
      geo::Vector yv = testing::random_interior(rng, 3, kv);
      geo::ManifoldPoint x{xv, k};
      geo::ManifoldPoint y{yv, k};
      Tape t;
      Var tx = t.constant(std::vector<double>(xv.data(), xv.data() + 3));
      Var ty = t.constant(std::vector<double>(yv.data(), yv.data() + 3));
      auto close = [](Var v, const geo::Vector& e) {
        double err = 0.0;
        for (int i = 0; i < e.size(); ++i) err = std::max(err, std::abs(v.value(i) - e[i]));
        return err;
      };
      CHECK(close(mobius_add(tx, ty, k), geo::mobius_add(x, y).coords) < 1e-12);
      CHECK(close(mobius_scale(0.7, tx, k), geo::mobius_scale(0.7, x).coords) < 1e-12);
      CHECK(close(exp0(tx, k), geo::exp0(xv, k).coords) < 1e-12);
      CHECK(close(log0(tx, k), geo::log0(x)) < 1e-12);
      CHECK(close(log_map(tx, ty, k), geo::log_map(x, y).coords) < 1e-12);
      CHECK(close(exp_map(tx, ty * 0.3, k), geo::exp_map({yv * 0.3, x}).coords) < 1e-12);
      CHECK(std::abs(distance(tx, ty, k).value() - geo::distance(x, y)) < 1e-12);
      CHECK(close(map_between(tx, k, geo::Curvature(-0.5)),
                  geo::map_between(x, geo::Curvature(-0.5)).coords) < 1e-12);
      const Var pts[] = {tx, ty};
      const geo::ManifoldPoint gp[] = {x, y};
      CHECK(close(gyromidpoint(pts, {}, k), geo::gyromidpoint(gp).coords) < 1e-12);
      geo::Matrix m = geo::Matrix::Identity(3, 3) * 0.8;
      m(0, 2) = 0.3;
      std::vector<double> mrow = {0.8, 0, 0.3, 0, 0.8, 0, 0, 0, 0.8};
      CHECK(close(mobius_matvec(t.constant(mrow), 3, tx, k), geo::mobius_matvec(m, x).coords) < 1e-12);
    }
  }
}

TEST_CASE("primitive gradients match finite differences") {
  auto results = testing::run_grad_cases(testing::primitive_grad_cases(), 20, 11);
  for (const auto& r : results) {
    INFO(r.name << " worst=" << r.worst);
    CHECK(r.passed());
  }
}
