#include <cmath>
#include <numbers>
#include <random>

#include "coriem/contrast.hpp"
#include "coriem/error.hpp"
#include "doctest.h"

using namespace coriem;
using namespace coriem::contrast;

namespace {

std::vector<double> random_sims(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> s(n);
  for (auto& x : s) x = u(rng);
  return s;
}

geo::ManifoldPoint point(std::vector<double> v, double kappa) {
  return geo::make_point(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())),
                         geo::Curvature(kappa));
}

}  // namespace

TEST_CASE("similarity") {
  const auto x = point({0.1, 0.2}, -1.0);
  const auto y = point({-0.3, 0.4}, -1.0);
  const auto z = point({-0.6, 0.7}, -1.0);
  const std::vector<double> t1{0.5, 0.5}, t2{0.2, 0.6};
  CHECK(similarity(x, x, t1, t2) == doctest::Approx(0.5 * 0.4).epsilon(1e-15));
  CHECK(similarity(x, y, t1, std::vector<double>{1.0, -1.0}) == 0.0);
  CHECK(similarity(x, y, t1, t2) > similarity(x, z, t1, t2));
  CHECK(similarity(x, y, t1, t2) <= 0.5 * 0.4);
  CHECK_THROWS_AS(similarity(x, point({0.1, 0.2}, 1.0), t1, t2), CurvatureMismatch);
  CHECK_THROWS_AS(similarity(x, y, t1, std::vector<double>{1.0}), DimensionMismatch);
}

TEST_CASE("reweigh") {
  CHECK(reweigh(std::vector<double>{0.3, -1.0, 2.0}, 0.0, Sign::Positive) == std::vector<double>{1, 1, 1});
  const auto w = reweigh(std::vector<double>{0.9, 0.1}, 2.0, Sign::Positive);
  CHECK(w[1] > w[0]);
  const auto v = reweigh(std::vector<double>{0.9, 0.1}, 2.0, Sign::Negative);
  CHECK(v[0] > v[1]);
  CHECK_THROWS_AS(reweigh(std::vector<double>{}, 1.0, Sign::Positive), UsageError);
  CHECK_THROWS_AS(reweigh(std::vector<double>{1.0}, -1.0, Sign::Positive), UsageError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> eta(0.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_sims(rng, 1 + trial % 20);
    const double e = eta(rng);
    for (auto sign : {Sign::Positive, Sign::Negative}) {
      double sum = 0;
      for (double x : reweigh(s, e, sign)) sum += x;
      CHECK(std::abs(sum - static_cast<double>(s.size())) < 1e-12);
    }
    ad::Tape tape;
    const auto tw = reweigh(tape.constant(s), e, Sign::Negative).to_vector();
    const auto vw = reweigh(s, e, Sign::Negative);
    for (std::size_t k = 0; k < s.size(); ++k) CHECK(tw[k] == doctest::Approx(vw[k]).epsilon(1e-13));
  }
}

TEST_CASE("reweighed loss") {
  CHECK(reweighed_loss(std::vector<double>{0.0}, std::vector<double>{0.0}, 0.0) ==
        doctest::Approx(2 * std::numbers::ln2).epsilon(1e-15));
  CHECK(reweighed_loss(std::vector<double>{60.0}, std::vector<double>{-60.0}, 2.0) < 1e-25);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const auto pos = random_sims(rng, 1 + trial % 7);
    const auto neg = random_sims(rng, trial % 17);
    const double a = reweighed_loss(pos, neg, 0.0);
    CHECK(std::abs(a - info_nce(pos, neg)) < 1e-12);
    const double b = reweighed_loss(pos, neg, 2.0);
    CHECK(b >= 0.0);
    ad::Tape tape;
    std::vector<ad::Var> pv, nv;
    for (double s : pos) pv.push_back(tape.constant(s));
    for (double s : neg) nv.push_back(tape.constant(s));
    CHECK(reweighed_loss(tape, pv, nv, 2.0).value() == doctest::Approx(b).epsilon(1e-13));
  }
}

TEST_CASE("negative sampling excludes the anchor") {
  std::mt19937_64 rng(3);
  const auto plan = sample_negatives(5, 16, rng);
  REQUIRE(plan.size() == 5);
  std::vector<int> hits(5, 0);
  for (std::size_t a = 0; a < 5; ++a) {
    CHECK(plan[a].size() == 16);
    for (auto j : plan[a]) {
      CHECK(j != a);
      CHECK(j < 5);
      ++hits[j];
    }
  }
  for (int h : hits) CHECK(h > 0);
  CHECK(sample_negatives(1, 16, rng)[0].empty());
  CHECK(sample_negatives(0, 16, rng).empty());
}

TEST_CASE("overall loss composition") {
  ad::Tape tape;
  const auto z = tape.constant(0.0);
  CHECK(overall_loss(z, z, z, z, z, 1.0, 10.0).total.value() == 0.0);
  const auto parts = overall_loss(tape.constant(1.0), tape.constant(2.0), tape.constant(3.0), tape.constant(4.0),
                                  tape.constant(5.0), 0.5, 0.0);
  CHECK(parts.total.value() == 1 + 2 + 0.5 * 7);
  CHECK(parts.user.value() == 3.0);
  CHECK(parts.item.value() == 7.0);
  CHECK(parts.curv.value() == 5.0);
}

TEST_CASE("mean event gap") {
  const std::vector<data::InteractionEvent> ev{{0, 0, 1.0, {}}, {0, 0, 1.0, {}}, {0, 0, 4.0, {}}};
  CHECK(mean_event_gap(ev) == 1.5);
  CHECK(mean_event_gap(std::span(ev).first(2)) == 1.0);
  CHECK(mean_event_gap({}) == 1.0);
}

namespace {

struct Fixture {
  model::ModelShape shape;
  model::Network net;
  ad::ParameterSet params;
  model::EmbeddingTable table;
  std::vector<data::InteractionEvent> batch;

  Fixture()
      : shape(make_shape()),
        net(shape),
        params(net.init_params(4)),
        table(model::advance_interval(model::init_table(4, 3, 4, -1.0, 5), geo::Curvature(-1.0),
                                      geo::Curvature(-0.5))) {
    table.user_time = {0.5, NAN, 0.25, NAN};
    table.item_time = {NAN, 0.75, 0.5};
    batch = {{0, 1, 1.0, {}}, {1, 1, 1.5, {}}, {0, 2, 2.0, {}}, {3, 0, 2.5, {}}};
  }
  static model::ModelShape make_shape() {
    model::ModelShape s;
    s.dim = 4;
    s.ricci_width = 4;
    return s;
  }
};

double expected_loss(const Fixture& f, const model::IntervalForward& fwd, const ViewPair& v,
                     const std::vector<std::vector<std::uint32_t>>& neg, double eta, bool cocon, bool learned,
                     double tau) {
  const auto& own = v.users;
  const auto& other = v.items;
  auto pt = [](ad::Var x, geo::Curvature k) {
    const auto vals = x.to_vector();
    return geo::ManifoldPoint{Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())),
                              k};
  };
  auto sim = [&](const geo::ManifoldPoint& a, double ta, const geo::ManifoldPoint& b, double tb) {
    if (learned) return similarity(a, b, f.net.time_encode_value(f.params, ta), f.net.time_encode_value(f.params, tb));
    return std::exp(-std::abs(ta - tb) / tau) / (1.0 + std::exp(geo::distance(a, b)));
  };
  double total = 0;
  for (std::size_t a = 0; a < own.alpha.size(); ++a) {
    const auto anchor = pt(own.alpha[a], own.kappa);
    std::vector<double> pos{sim(anchor, own.alpha_time[a], pt(own.beta[a], own.kappa), own.beta_time[a])};
    if (cocon) {
      for (auto l : fwd.user_links[a]) {
        const auto img = geo::map_between(pt(other.beta[l], other.kappa), own.kappa);
        pos.push_back(sim(anchor, own.alpha_time[a], img, other.beta_time[l]));
      }
    }
    std::vector<double> ng;
    for (auto j : neg[a]) ng.push_back(sim(anchor, own.alpha_time[a], pt(own.beta[j], own.kappa), own.beta_time[j]));
    total += eta == 0.0 ? info_nce(pos, ng) : reweighed_loss(pos, ng, eta);
  }
  return total / static_cast<double>(own.alpha.size());
}

}  // namespace

TEST_CASE("views") {
  Fixture f;
  ad::Tape tape;
  const auto fwd = model::forward_interval(tape, f.params, f.net, f.batch, f.table);
  SUBCASE("warm-up copies alpha") {
    const auto v = make_views(tape, f.params, f.net, fwd, f.table, 0.9, true, {});
    for (std::size_t a = 0; a < v.users.alpha.size(); ++a) {
      CHECK(v.users.alpha[a].to_vector() == v.users.beta[a].to_vector());
      CHECK(v.users.alpha_time[a] == v.users.beta_time[a]);
    }
  }
  SUBCASE("beta view reads the previous table") {
    const auto v = make_views(tape, f.params, f.net, fwd, f.table, 0.9, false, {});
    REQUIRE(fwd.active_users == std::vector<std::uint32_t>{0, 1, 3});
    const auto b1 = v.users.beta[1].to_vector();
    CHECK(std::equal(b1.begin(), b1.end(), f.table.user(1).begin()));
    CHECK(v.users.beta_time == std::vector<double>{0.5, 0.9, 0.9});
    CHECK(v.users.alpha_time == std::vector<double>{2.0, 1.5, 2.5});
    CHECK(v.items.beta_time == std::vector<double>{0.9, 0.75, 0.5});
    CHECK(v.users.alpha_code.size() == 3);
    CHECK(make_views(tape, f.params, f.net, fwd, f.table, 0.9, false, {false, 1.0}).users.alpha_code.empty());
  }
}

TEST_CASE("co-contrast loss matches a pointwise evaluation") {
  Fixture f;
  std::mt19937_64 rng(6);
  for (double eta : {0.0, 2.0}) {
    for (bool cocon : {true, false}) {
      for (bool learned : {true, false}) {
        ad::Tape tape;
        const auto fwd = model::forward_interval(tape, f.params, f.net, f.batch, f.table);
        const KernelOptions kernel{learned, 0.7};
        const auto v = make_views(tape, f.params, f.net, fwd, f.table, 0.9, false, kernel);
        const auto neg = sample_negatives(v.users.alpha.size(), 4, rng);
        const ContrastOptions opt{eta, cocon, kernel};
        const double got = co_contrast_loss(tape, v.users, v.items, fwd.user_links, neg, true, opt).value();
        const double want = expected_loss(f, fwd, v, neg, eta, cocon, learned, 0.7);
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
        CHECK(got > 0.0);
      }
    }
  }
}

TEST_CASE("co-contrast swaps roles for the beta anchor direction") {
  Fixture f;
  ad::Tape tape;
  const auto fwd = model::forward_interval(tape, f.params, f.net, f.batch, f.table);
  auto v = make_views(tape, f.params, f.net, fwd, f.table, 0.9, false, {});
  std::mt19937_64 rng(7);
  const auto neg = sample_negatives(v.items.alpha.size(), 3, rng);
  const ContrastOptions opt{2.0, true, {}};
  const double ba = co_contrast_loss(tape, v.items, v.users, fwd.item_links, neg, false, opt).value();
  std::swap(v.items.alpha, v.items.beta);
  std::swap(v.items.alpha_time, v.items.beta_time);
  std::swap(v.items.alpha_code, v.items.beta_code);
  std::swap(v.users.alpha, v.users.beta);
  std::swap(v.users.alpha_time, v.users.beta_time);
  std::swap(v.users.alpha_code, v.users.beta_code);
  const double ab = co_contrast_loss(tape, v.items, v.users, fwd.item_links, neg, true, opt).value();
  CHECK(ab == ba);
}
