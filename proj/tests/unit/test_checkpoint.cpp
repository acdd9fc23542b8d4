#include <cmath>
#include <filesystem>

#include "coriem/checkpoint.hpp"
#include "coriem/error.hpp"
#include "coriem/eval.hpp"
#include "doctest.h"

using namespace coriem;

namespace {

struct Fixture {
  data::Dataset ds;
  RunConfig config;
  ckpt::Checkpoint ck;

  Fixture() {
    data::SynthOptions o;
    o.n_users = 9;
    o.n_items = 7;
    o.n_clusters = 2;
    o.n_events = 250;
    o.seed = 6;
    ds = data::synth_generate(o);
    config.dim = 6;
    config.intervals = 4;
    config.epochs = 1;
    config.ricci_width = 6;
    config.negatives = 3;
    config.data = "events.csv";
    config.out_dir = "somewhere";
    ck = {config, train::train(ds, config)};
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
  CHECK(ckpt::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(ckpt::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(ckpt::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("checkpoint round trip") {
  const auto& f = fixture();
  const auto text = ckpt::serialize(f.ck);
  CHECK(text.find("events.csv") == std::string::npos);
  CHECK(text.find("somewhere") == std::string::npos);
  const auto back = ckpt::deserialize(text);
  CHECK(ckpt::serialize(back) == text);
  CHECK(ckpt::digest(back) == ckpt::digest(f.ck));
  CHECK(ckpt::digest(f.ck).size() == 16);
  CHECK(back.model.n_users == f.ds.n_users);
  CHECK(back.model.final_table.users == f.ck.model.final_table.users);
  for (std::size_t i = 0; i < back.model.params.size(); ++i) {
    CHECK(back.model.params[i].data == f.ck.model.params[i].data);
  }
  const auto& ut = f.ck.model.initial.user_time;
  const auto& bt = back.model.initial.user_time;
  REQUIRE(ut.size() == bt.size());
  for (std::size_t i = 0; i < ut.size(); ++i) CHECK((std::isnan(ut[i]) ? std::isnan(bt[i]) : ut[i] == bt[i]));

  const std::vector<int> ks{1, 5};
  const auto a = eval::evaluate(f.ck.model, f.ds, f.config, eval::Target::Test, ks);
  const auto b = eval::evaluate(back.model, f.ds, back.config, eval::Target::Test, ks);
  CHECK(a.ranks() == b.ranks());

  const auto path = std::filesystem::temp_directory_path() / "coriem_ckpt_test.json";
  ckpt::save(path, f.ck);
  CHECK(ckpt::digest(ckpt::load(path)) == ckpt::digest(f.ck));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(ckpt::load(path), DataError);
}

TEST_CASE("digest tracks content") {
  auto c = fixture().ck;
  const auto d0 = ckpt::digest(c);
  c.model.params[0].data[0] += 1e-12;
  CHECK(ckpt::digest(c) != d0);
}

TEST_CASE("malformed checkpoints") {
  const auto text = ckpt::serialize(fixture().ck);
  CHECK_THROWS_AS(ckpt::deserialize("{"), DataError);
  CHECK_THROWS_AS(ckpt::deserialize("[]"), DataError);
  auto swap = [&](const std::string& from, const std::string& to) {
    auto t = text;
    const auto pos = t.find(from);
    REQUIRE(pos != std::string::npos);
    t.replace(pos, from.size(), to);
    return t;
  };
  CHECK_THROWS_AS(ckpt::deserialize(swap("\"version\": 1", "\"version\": 2")), DataError);
  CHECK_THROWS_AS(ckpt::deserialize(swap("coriem-checkpoint", "other")), DataError);
  CHECK_THROWS_AS(ckpt::deserialize(text.substr(0, text.size() / 2)), DataError);
}

TEST_CASE("compatibility checks") {
  const auto& f = fixture();
  CHECK_NOTHROW(ckpt::check_compatible(f.ck, f.ds, f.config));
  auto other = f.config;
  other.dim = 12;
  try {
    ckpt::check_compatible(f.ck, f.ds, other);
    FAIL("accepted a different dim");
  } catch (const DimensionMismatch& e) {
    const std::string msg = e.what();
    CHECK(msg.find("6") != std::string::npos);
    CHECK(msg.find("12") != std::string::npos);
  }
  other = f.config;
  other.fusion = FusionMode::Early;
  CHECK_THROWS_AS(ckpt::check_compatible(f.ck, f.ds, other), DimensionMismatch);
  auto bigger = f.ds;
  bigger.n_items += 1;
  CHECK_THROWS_AS(ckpt::check_compatible(f.ck, bigger, f.config), DataError);
}
