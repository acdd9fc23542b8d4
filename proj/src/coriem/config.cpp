#include "coriem/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "coriem/error.hpp"
#include "json.hpp"

namespace coriem {
namespace {

using Kind = RunConfig::Kind;

struct Binding {
  RunConfig::Key key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void bad(std::string_view key, std::string_view value, const std::string& why) {
  throw UsageError("invalid value '" + std::string(value) + "' for " + std::string(key) + ": " + why);
}

long long parse_ll(std::string_view key, std::string_view v) {
  long long out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "expected an integer");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  std::string_view s = v;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(out)) {
    bad(key, v, "expected a finite number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, v, "expected true or false");
}

std::string real_str(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Binding int_key(std::string name, std::string help, int RunConfig::*field, long long lo, long long hi) {
  RunConfig::Key k{name, Kind::Int, std::move(help), {}};
  return {k,
          [=](RunConfig& c, std::string_view v) {
            const long long x = parse_ll(name, v);
            if (x < lo || x > hi) {
              bad(name, v, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            }
            c.*field = static_cast<int>(x);
          },
          [=](const RunConfig& c) { return std::to_string(c.*field); }};
}

enum class Bound { Closed, Open };

Binding real_key(std::string name, std::string help, double RunConfig::*field, double lo, Bound lo_b,
                 double hi, Bound hi_b) {
  RunConfig::Key k{name, Kind::Real, std::move(help), {}};
  return {k,
          [=](RunConfig& c, std::string_view v) {
            const double x = parse_real(name, v);
            const bool ok_lo = lo_b == Bound::Closed ? x >= lo : x > lo;
            const bool ok_hi = hi_b == Bound::Closed ? x <= hi : x < hi;
            if (!ok_lo || !ok_hi) {
              bad(name, v, std::string("must lie in ") + (lo_b == Bound::Closed ? "[" : "(") +
                               real_str(lo) + ", " + real_str(hi) + (hi_b == Bound::Closed ? "]" : ")"));
            }
            c.*field = x;
          },
          [=](const RunConfig& c) { return real_str(c.*field); }};
}

Binding bool_key(std::string name, std::string help, bool RunConfig::*field) {
  RunConfig::Key k{name, Kind::Bool, std::move(help), {}};
  return {k, [=](RunConfig& c, std::string_view v) { c.*field = parse_bool(name, v); },
          [=](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

Binding string_key(std::string name, std::string help, std::string RunConfig::*field) {
  RunConfig::Key k{name, Kind::String, std::move(help), {}};
  return {k, [=](RunConfig& c, std::string_view v) { c.*field = std::string(v); },
          [=](const RunConfig& c) { return c.*field; }};
}

template <typename E>
Binding choice_key(std::string name, std::string help, E RunConfig::*field,
                   std::vector<std::pair<std::string, E>> options) {
  RunConfig::Key k{name, Kind::Choice, std::move(help), {}};
  for (const auto& o : options) k.choices.push_back(o.first);
  return {k,
          [=](RunConfig& c, std::string_view v) {
            for (const auto& [label, value] : options) {
              if (label == v) {
                c.*field = value;
                return;
              }
            }
            std::string all;
            for (const auto& o : options) all += (all.empty() ? "" : "|") + o.first;
            bad(name, v, "expected one of " + all);
          },
          [=](const RunConfig& c) {
            for (const auto& [label, value] : options) {
              if (value == c.*field) return label;
            }
            return std::string();
          }};
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    constexpr double inf = INFINITY;
    constexpr long long big = 1LL << 30;
    std::vector<Binding> b;
    b.push_back(string_key("data", "event-log file", &RunConfig::data));
    b.push_back(int_key("dim", "embedding dimension", &RunConfig::dim, 1, 4096));
    b.push_back(int_key("intervals", "number of training intervals", &RunConfig::intervals, 1, big));
    b.push_back(real_key("lr", "learning rate", &RunConfig::lr, 0.0, Bound::Open, inf, Bound::Open));
    b.push_back(int_key("epochs", "training epochs", &RunConfig::epochs, 0, big));
    b.push_back(real_key("eta", "hard-sample reweighing strength", &RunConfig::eta, 0.0, Bound::Closed, inf,
                         Bound::Open));
    b.push_back(real_key("w1", "item contrast weight", &RunConfig::w1, 0.0, Bound::Closed, inf, Bound::Open));
    b.push_back(real_key("w2", "curvature loss weight", &RunConfig::w2, 0.0, Bound::Closed, inf, Bound::Open));
    b.push_back(real_key("alpha", "lazy random-walk mass kept at a node", &RunConfig::alpha, 0.0,
                         Bound::Closed, 1.0, Bound::Closed));
    b.push_back(int_key("cooccur-k", "shared counterparts needed to link two entities", &RunConfig::cooccur_k,
                        1, big));
    b.push_back(real_key("sample-ratio", "fraction of entities sampled into curvature subgraphs",
                         &RunConfig::sample_ratio, 0.0, Bound::Open, 1.0, Bound::Closed));
    b.push_back(int_key("layers", "stacked aggregation layers", &RunConfig::layers, 1, 64));
    b.push_back(choice_key<FusionMode>("fusion", "interaction pooling order", &RunConfig::fusion,
                                       {{"late", FusionMode::Late}, {"early", FusionMode::Early}}));
    b.push_back(choice_key<EncoderMode>("encoder", "time encoder", &RunConfig::encoder,
                                        {{"cosine", EncoderMode::Cosine}, {"fourier", EncoderMode::Fourier}}));
    b.push_back(choice_key<CurvatureMode>(
        "curvature", "curvature schedule", &RunConfig::curvature,
        {{"evolve", CurvatureMode::Evolve}, {"static", CurvatureMode::Static}, {"zero", CurvatureMode::Zero}}));
    b.push_back(bool_key("no-reweigh", "disable hard-sample reweighing", &RunConfig::no_reweigh));
    b.push_back(bool_key("no-cocon", "drop counterpart-space positives", &RunConfig::no_cocon));
    b.push_back(bool_key("no-kernel", "replace the time kernel with exponential decay", &RunConfig::no_kernel));
    b.push_back(int_key("negatives", "negative samples per anchor", &RunConfig::negatives, 0, big));
    b.push_back({{"seed", Kind::Int, "random seed", {}},
                 [](RunConfig& c, std::string_view v) {
                   std::uint64_t x = 0;
                   auto r = std::from_chars(v.data(), v.data() + v.size(), x);
                   if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) {
                     bad("seed", v, "expected a non-negative integer");
                   }
                   c.seed = x;
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    b.push_back(string_key("out-dir", "output directory (default: $CORIEM_OUT_DIR or ./coriem_out)",
                           &RunConfig::out_dir));
    b.push_back(real_key("dropout", "dropout rate on aggregated interactions", &RunConfig::dropout, 0.0,
                         Bound::Closed, 1.0, Bound::Open));
    b.push_back(int_key("ricci-width", "curvature estimator input width", &RunConfig::ricci_width, 1, 4096));
    b.push_back(int_key("ricci-max-edges", "edges sampled per curvature subgraph", &RunConfig::ricci_max_edges,
                        1, big));
    b.push_back(int_key("curvature-iterations", "triangle samples per node for observed curvature",
                        &RunConfig::curvature_iterations, 1, big));
    b.push_back(real_key("kappa-init", "curvature before the first estimate", &RunConfig::kappa_init, -inf,
                         Bound::Open, inf, Bound::Open));
    b.push_back(real_key("kappa-max", "bound on |curvature| used for geometry", &RunConfig::kappa_max, 0.0,
                         Bound::Open, inf, Bound::Open));
    b.push_back(string_key("k", "comma-separated Recall@k cutoffs", &RunConfig::recall_k));
    b.push_back(string_key("checkpoint", "checkpoint file (evaluate)", &RunConfig::checkpoint));
    return b;
  }();
  return table;
}

const Binding& binding(std::string_view name) {
  for (const auto& b : bindings()) {
    if (b.key.name == name) return b;
  }
  throw UsageError("unknown configuration key '" + std::string(name) + "'");
}

}  // namespace

const std::vector<RunConfig::Key>& RunConfig::keys() {
  static const std::vector<Key> k = [] {
    std::vector<Key> out;
    for (const auto& b : bindings()) out.push_back(b.key);
    return out;
  }();
  return k;
}

const RunConfig::Key* RunConfig::find_key(std::string_view name) {
  for (const auto& k : keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto& b = binding(key);
  if (key == "k") {
    RunConfig probe = *this;
    b.set(probe, value);
    probe.recall_ks();
  }
  b.set(*this, value);
}

std::string RunConfig::get(std::string_view key) const { return binding(key).get(*this); }

void RunConfig::apply_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must contain a JSON object");
  for (const auto& [key, value] : j.items()) {
    std::string s;
    if (value.is_string()) {
      s = value.get<std::string>();
    } else if (value.is_boolean()) {
      s = value.get<bool>() ? "true" : "false";
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      s = value.dump();
    } else if (value.is_number_float()) {
      s = real_str(value.get<double>());
    } else if (value.is_array() && key == "k") {
      for (const auto& v : value) s += (s.empty() ? "" : ",") + v.dump();
    } else {
      throw UsageError("config key '" + key + "' has an unsupported value type");
    }
    set(key, s);
  }
}

void RunConfig::apply_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_json(buf.str());
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& b : bindings()) {
    const std::string v = b.get(*this);
    switch (b.key.kind) {
      case Kind::Int:
        j[b.key.name] = b.key.name == "seed" ? nlohmann::ordered_json(seed)
                                             : nlohmann::ordered_json(std::stoll(v));
        break;
      case Kind::Real:
        j[b.key.name] = std::stod(v);
        break;
      case Kind::Bool:
        j[b.key.name] = v == "true";
        break;
      default:
        j[b.key.name] = v;
    }
  }
  return j.dump(2);
}

std::vector<int> RunConfig::recall_ks() const {
  std::vector<int> out;
  std::string_view rest = recall_k;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto tok = rest.substr(0, comma);
    const long long k = parse_ll("k", tok);
    if (k < 1 || k > (1LL << 30)) bad("k", recall_k, "cutoffs must be positive");
    out.push_back(static_cast<int>(k));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
    if (rest.empty()) bad("k", recall_k, "trailing comma");
  }
  if (out.empty()) bad("k", recall_k, "at least one cutoff is required");
  return out;
}

void RunConfig::validate() const {
  if (encoder == EncoderMode::Fourier && dim % 2 != 0) {
    throw UsageError("the fourier encoder needs an even dim (got " + std::to_string(dim) + ")");
  }
  recall_ks();
}

const char* to_string(FusionMode m) { return m == FusionMode::Late ? "late" : "early"; }
const char* to_string(EncoderMode m) { return m == EncoderMode::Cosine ? "cosine" : "fourier"; }
const char* to_string(CurvatureMode m) {
  switch (m) {
    case CurvatureMode::Evolve:
      return "evolve";
    case CurvatureMode::Static:
      return "static";
    default:
      return "zero";
  }
}

}  // namespace coriem
