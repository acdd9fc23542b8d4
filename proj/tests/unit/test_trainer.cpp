#include <cmath>
#include <sstream>

#include "coriem/error.hpp"
#include "coriem/trainer.hpp"
#include "doctest.h"
#include "grad_properties.hpp"

using namespace coriem;

namespace {

data::Dataset small_data(std::uint64_t seed) {
  data::SynthOptions o;
  o.n_users = 12;
  o.n_items = 10;
  o.n_clusters = 3;
  o.n_events = 400;
  o.seed = seed;
  return data::synth_generate(o);
}

RunConfig small_config() {
  RunConfig c;
  c.dim = 8;
  c.intervals = 5;
  c.epochs = 2;
  c.ricci_width = 8;
  c.ricci_max_edges = 16;
  c.negatives = 4;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("zero epochs leave the initialization untouched") {
  auto c = small_config();
  c.epochs = 0;
  const auto ds = small_data(1);
  const auto r = train::train(ds, c);
  CHECK(r.log.empty());
  CHECK(r.final_table.users == r.initial.users);
  CHECK(r.final_table.items == r.initial.items);
  const auto fresh = model::Network(r.shape).init_params(c.seed);
  for (std::size_t i = 0; i < fresh.size(); ++i) CHECK(fresh[i].data == r.params[i].data);
  CHECK(r.initial.kappa_u == geo::Curvature(c.kappa_init));
}

TEST_CASE("training is deterministic") {
  const auto ds = small_data(2);
  const auto c = small_config();
  const auto a = train::train(ds, c);
  const auto b = train::train(ds, c);
  REQUIRE(a.log.size() == 10);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) {
    auto x = a.log[k], y = b.log[k];
    x.wall_ms = y.wall_ms = 0;
    CHECK(train::format_row(x) == train::format_row(y));
  }
  for (std::size_t i = 0; i < a.params.size(); ++i) CHECK(a.params[i].data == b.params[i].data);
  CHECK(a.final_table.users == b.final_table.users);
  CHECK(a.params.all_finite());
  CHECK(a.curvature.size() == 5);

  auto other = c;
  other.seed = 4;
  CHECK(train::train(ds, other).log[0].loss != a.log[0].loss);
}

TEST_CASE("curvature modes") {
  const auto ds = small_data(5);
  auto c = small_config();
  c.epochs = 1;
  SUBCASE("zero") {
    c.curvature = CurvatureMode::Zero;
    for (const auto& row : train::train(ds, c).log) {
      CHECK(row.kappa_u == 0.0);
      CHECK(row.kappa_i == 0.0);
    }
  }
  SUBCASE("static") {
    c.curvature = CurvatureMode::Static;
    const auto whole = train::static_curvature(data::chrono_split(ds).train(ds), c);
    for (const auto& row : train::train(ds, c).log) {
      CHECK(row.kappa_u == std::clamp(whole.user.kappa_o, -c.kappa_max, c.kappa_max));
      CHECK(row.kappa_i == std::clamp(whole.item.kappa_o, -c.kappa_max, c.kappa_max));
    }
  }
  SUBCASE("evolve starts at the initial curvature and follows the estimator") {
    const auto r = train::train(ds, c);
    CHECK(r.log[0].kappa_u == c.kappa_init);
    for (std::size_t n = 1; n < r.curvature.size(); ++n) {
      CHECK(r.curvature[n].kappa_u == std::clamp(r.curvature[n - 1].kappa_e_u, -c.kappa_max, c.kappa_max));
    }
  }
}

TEST_CASE("next_kappa clamps and rejects non-finite estimates") {
  RunConfig c;
  c.kappa_max = 2.0;
  CHECK(train::next_kappa(c, 5.0, 0.0) == 2.0);
  CHECK(train::next_kappa(c, -0.3, 0.0) == -0.3);
  CHECK_THROWS_AS(train::next_kappa(c, NAN, 0.0), RuntimeError);
  c.curvature = CurvatureMode::Zero;
  CHECK(train::next_kappa(c, NAN, 0.0) == 0.0);
}

TEST_CASE("training log format") {
  train::LogRow row{1, 2, 0.5, 0.25, 0.125, 1.0, -1.0, 0.5, 0.1, -0.2, 12.5};
  std::ostringstream out;
  const train::LogRow rows[] = {row};
  train::write_log(out, rows);
  const auto text = out.str();
  CHECK(text.starts_with(train::log_header() + "\n"));
  CHECK(text.find("1,2,0.5,0.25,0.125,1,-1,0.5,0.10000000000000001,-0.20000000000000001,12.500\n") != std::string::npos);
}

TEST_CASE("empty training segment") {
  data::Dataset ds;
  CHECK_THROWS_AS(train::train(ds, small_config()), DataError);
}

TEST_CASE("full interval objective gradients") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto c = coriem::testing::interval_loss_case(seed);
    ad::GradCheckOptions opt;
    opt.max_coords_per_tensor = 6;
    const auto report = ad::grad_check(c.loss, c.params, opt);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-3);
  }
}
