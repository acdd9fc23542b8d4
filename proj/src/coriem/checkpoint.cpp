#include "coriem/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "coriem/error.hpp"
#include "json.hpp"

namespace coriem::ckpt {
namespace {

using Json = nlohmann::ordered_json;

const char* const kPathKeys[] = {"data", "out-dir", "checkpoint"};

Json times_to_json(const std::vector<double>& t) {
  Json a = Json::array();
  for (double x : t) a.push_back(std::isnan(x) ? Json(nullptr) : Json(x));
  return a;
}

std::vector<double> times_from_json(const Json& a) {
  std::vector<double> t;
  for (const auto& x : a) t.push_back(x.is_null() ? NAN : x.get<double>());
  return t;
}

Json table_to_json(const model::EmbeddingTable& t) {
  Json j;
  j["kappa_u"] = t.kappa_u.value();
  j["kappa_i"] = t.kappa_i.value();
  j["users"] = t.users;
  j["items"] = t.items;
  j["user_time"] = times_to_json(t.user_time);
  j["item_time"] = times_to_json(t.item_time);
  return j;
}

model::EmbeddingTable table_from_json(const Json& j, int dim, std::uint32_t n_users, std::uint32_t n_items) {
  model::EmbeddingTable t;
  t.dim = dim;
  t.kappa_u = geo::Curvature(j.at("kappa_u").get<double>());
  t.kappa_i = geo::Curvature(j.at("kappa_i").get<double>());
  t.users = j.at("users").get<std::vector<double>>();
  t.items = j.at("items").get<std::vector<double>>();
  t.user_time = times_from_json(j.at("user_time"));
  t.item_time = times_from_json(j.at("item_time"));
  if (t.user_time.size() != n_users || t.item_time.size() != n_items ||
      t.users.size() != static_cast<std::size_t>(n_users) * dim ||
      t.items.size() != static_cast<std::size_t>(n_items) * dim) {
    throw DataError("checkpoint embedding table does not match its declared sizes");
  }
  return t;
}

}  // namespace

std::string serialize(const Checkpoint& c) {
  const auto& m = c.model;
  Json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  Json cfg = Json::parse(c.config.to_json());
  for (const char* k : kPathKeys) cfg.erase(k);
  j["config"] = cfg;
  j["shape"] = {{"dim", m.shape.dim},
                {"feature_dim", m.shape.feature_dim},
                {"ricci_width", m.shape.ricci_width},
                {"layers", m.shape.layers},
                {"encoder", to_string(m.shape.encoder)},
                {"fusion", to_string(m.shape.fusion)}};
  j["dataset"] = {{"n_users", m.n_users}, {"n_items", m.n_items}};
  Json params = Json::array();
  for (const auto& t : m.params.tensors()) {
    params.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"data", t.data}});
  }
  j["params"] = std::move(params);
  j["initial"] = table_to_json(m.initial);
  j["final"] = table_to_json(m.final_table);
  Json curv = Json::array();
  for (const auto& r : m.curvature) {
    curv.push_back({{"interval", r.interval},
                    {"kappa_u", r.kappa_u},
                    {"kappa_i", r.kappa_i},
                    {"kappa_e_u", r.kappa_e_u},
                    {"kappa_e_i", r.kappa_e_i},
                    {"kappa_o_u", r.kappa_o_u},
                    {"kappa_o_i", r.kappa_o_i}});
  }
  j["curvature"] = std::move(curv);
  return j.dump(1) + "\n";
}

Checkpoint deserialize(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw DataError("not a coriem checkpoint");
    if (j.at("version").get<int>() != kVersion) {
      throw DataError("unsupported checkpoint version " + std::to_string(j.at("version").get<int>()));
    }
    Checkpoint c;
    c.config.apply_json(j.at("config").dump());
    auto& m = c.model;
    const auto& s = j.at("shape");
    m.shape.dim = s.at("dim").get<int>();
    m.shape.feature_dim = s.at("feature_dim").get<int>();
    m.shape.ricci_width = s.at("ricci_width").get<int>();
    m.shape.layers = s.at("layers").get<int>();
    RunConfig probe;
    probe.set("encoder", s.at("encoder").get<std::string>());
    probe.set("fusion", s.at("fusion").get<std::string>());
    m.shape.encoder = probe.encoder;
    m.shape.fusion = probe.fusion;
    m.n_users = j.at("dataset").at("n_users").get<std::uint32_t>();
    m.n_items = j.at("dataset").at("n_items").get<std::uint32_t>();
    for (const auto& t : j.at("params")) {
      m.params.add(t.at("name").get<std::string>(), t.at("rows").get<int>(), t.at("cols").get<int>(),
                   t.at("data").get<std::vector<double>>());
    }
    model::Network(m.shape).check(m.params);
    m.initial = table_from_json(j.at("initial"), m.shape.dim, m.n_users, m.n_items);
    m.final_table = table_from_json(j.at("final"), m.shape.dim, m.n_users, m.n_items);
    for (const auto& r : j.at("curvature")) {
      m.curvature.push_back({r.at("interval").get<std::size_t>(), r.at("kappa_u").get<double>(),
                             r.at("kappa_i").get<double>(), r.at("kappa_e_u").get<double>(),
                             r.at("kappa_e_i").get<double>(), r.at("kappa_o_u").get<double>(),
                             r.at("kappa_o_i").get<double>()});
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write checkpoint " + path.string());
  out << serialize(c);
  if (!out) throw RuntimeError("failed writing checkpoint " + path.string());
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest(const Checkpoint& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize(c))));
  return buf;
}

void check_compatible(const Checkpoint& c, const data::Dataset& ds, const RunConfig& requested) {
  const auto& s = c.model.shape;
  if (requested.dim != s.dim) {
    throw DimensionMismatch("checkpoint dim " + std::to_string(s.dim) + " differs from requested dim " +
                            std::to_string(requested.dim));
  }
  if (requested.ricci_width != s.ricci_width) {
    throw DimensionMismatch("checkpoint ricci width " + std::to_string(s.ricci_width) +
                            " differs from requested width " + std::to_string(requested.ricci_width));
  }
  if (requested.layers != s.layers) {
    throw DimensionMismatch("checkpoint layer count " + std::to_string(s.layers) + " differs from requested " +
                            std::to_string(requested.layers));
  }
  if (requested.encoder != s.encoder || requested.fusion != s.fusion) {
    throw DimensionMismatch("checkpoint encoder/fusion modes differ from the requested configuration");
  }
  if (ds.feature_dim != static_cast<std::size_t>(s.feature_dim)) {
    throw DataError("dataset has " + std::to_string(ds.feature_dim) + " feature columns; checkpoint expects " +
                    std::to_string(s.feature_dim));
  }
  if (ds.n_users != c.model.n_users || ds.n_items != c.model.n_items) {
    throw DataError("dataset has " + std::to_string(ds.n_users) + " users and " + std::to_string(ds.n_items) +
                    " items; checkpoint was trained on " + std::to_string(c.model.n_users) + " and " +
                    std::to_string(c.model.n_items));
  }
}

}  // namespace coriem::ckpt
