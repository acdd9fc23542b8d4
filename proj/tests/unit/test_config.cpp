#include <cstdio>
#include <filesystem>
#include <fstream>

#include "coriem/config.hpp"
#include "coriem/error.hpp"
#include "doctest.h"

using coriem::RunConfig;
using coriem::UsageError;

TEST_CASE("every key round-trips through get and set") {
  RunConfig a;
  for (const auto& k : RunConfig::keys()) {
    RunConfig b;
    b.set(k.name, a.get(k.name));
    CHECK(b.get(k.name) == a.get(k.name));
    CHECK(RunConfig::find_key(k.name) != nullptr);
  }
  CHECK(RunConfig::find_key("nope") == nullptr);
}

TEST_CASE("typed parsing and ranges") {
  RunConfig c;
  c.set("dim", "16");
  CHECK(c.dim == 16);
  c.set("lr", "0.01");
  CHECK(c.lr == 0.01);
  c.set("no-kernel", "true");
  CHECK(c.no_kernel);
  c.set("curvature", "static");
  CHECK(c.curvature == coriem::CurvatureMode::Static);
  c.set("seed", "18446744073709551615");
  CHECK(c.seed == 18446744073709551615ULL);
  CHECK_THROWS_AS(c.set("dim", "0"), UsageError);
  CHECK_THROWS_AS(c.set("dim", "4.5"), UsageError);
  CHECK_THROWS_AS(c.set("lr", "0"), UsageError);
  CHECK_THROWS_AS(c.set("lr", "nan"), UsageError);
  CHECK_THROWS_AS(c.set("alpha", "1.5"), UsageError);
  CHECK_THROWS_AS(c.set("fusion", "middle"), UsageError);
  CHECK_THROWS_AS(c.set("seed", "-1"), UsageError);
  CHECK_THROWS_AS(c.set("k", "1,,3"), UsageError);
  CHECK_THROWS_AS(c.set("bogus", "1"), UsageError);
  try {
    c.set("dropout", "1");
    FAIL("accepted dropout 1");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("dropout") != std::string::npos);
  }
}

TEST_CASE("recall cutoffs") {
  RunConfig c;
  CHECK(c.recall_ks() == std::vector<int>{1, 5, 10, 20});
  c.set("k", "10");
  CHECK(c.recall_ks() == std::vector<int>{10});
}

TEST_CASE("json application") {
  RunConfig c;
  c.apply_json(R"({"dim": 32, "fusion": "early", "no-cocon": true, "eta": 0.5, "k": "3,7"})");
  CHECK(c.dim == 32);
  CHECK(c.fusion == coriem::FusionMode::Early);
  CHECK(c.no_cocon);
  CHECK(c.eta == 0.5);
  CHECK(c.recall_ks() == std::vector<int>{3, 7});
  CHECK_THROWS_AS(c.apply_json(R"({"dims": 3})"), UsageError);
  CHECK_THROWS_AS(c.apply_json("[1,2]"), UsageError);
  CHECK_THROWS_AS(c.apply_json("{"), UsageError);
  CHECK_THROWS_AS(c.apply_json(R"({"dim": [1]})"), UsageError);

  RunConfig d;
  d.apply_json(c.to_json());
  for (const auto& k : RunConfig::keys()) CHECK(d.get(k.name) == c.get(k.name));

  const auto path = std::filesystem::temp_directory_path() / "coriem_config_test.json";
  std::ofstream(path) << R"({"epochs": 3})";
  RunConfig e;
  e.apply_json_file(path.string());
  CHECK(e.epochs == 3);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(e.apply_json_file(path.string()), UsageError);
}

TEST_CASE("cross-field validation") {
  RunConfig c;
  c.encoder = coriem::EncoderMode::Fourier;
  c.dim = 7;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c.dim = 8;
  CHECK_NOTHROW(c.validate());
}
