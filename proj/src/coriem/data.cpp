#include "coriem/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "coriem/error.hpp"
#include "coriem/log.hpp"

namespace coriem::data {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, long long& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Numeric order when every id is an integer, lexicographic otherwise.
std::vector<std::string> ordered_ids(const std::map<std::string, std::uint32_t>& seen) {
  std::vector<std::string> ids;
  ids.reserve(seen.size());
  bool numeric = true;
  for (const auto& [id, _] : seen) {
    long long v;
    numeric = numeric && parse_int(id, v);
    ids.push_back(id);
  }
  if (numeric) {
    std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
      long long x = 0;
      long long y = 0;
      parse_int(a, x);
      parse_int(b, y);
      return x < y;
    });
  }
  return ids;
}

struct RawRow {
  std::string user;
  std::string item;
  double t;
  std::vector<double> features;
};

}  // namespace

Dataset parse_string(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw DataError(source + ":" + std::to_string(lineno) + ": " + msg);
  };

  bool has_label = false;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split_commas(line);
    if (cols.size() < 3) fail("header needs at least user_id,item_id,timestamp");
    if (cols.size() >= 4) {
      std::string name(cols[3]);
      std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
      has_label = name == "state_label";
    }
    have_header = true;
    break;
  }
  if (!have_header) throw DataError(source + ": no events");

  std::vector<RawRow> rows;
  long long width = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split_commas(line);
    const std::size_t fixed = has_label ? 4 : 3;
    if (cols.size() < fixed) fail("expected at least " + std::to_string(fixed) + " columns");
    RawRow row;
    row.user = std::string(cols[0]);
    row.item = std::string(cols[1]);
    if (row.user.empty() || row.item.empty()) fail("empty id");
    if (!parse_double(cols[2], row.t)) fail("bad timestamp '" + std::string(cols[2]) + "'");
    if (row.t < 0.0) fail("negative timestamp");
    const long long k = static_cast<long long>(cols.size() - fixed);
    if (width < 0) width = k;
    if (k != width) {
      fail("feature-width mismatch: expected " + std::to_string(width) + " features, found " +
           std::to_string(k));
    }
    row.features.resize(static_cast<std::size_t>(k));
    for (std::size_t f = 0; f < row.features.size(); ++f) {
      if (!parse_double(cols[fixed + f], row.features[f])) {
        fail("bad feature value '" + std::string(cols[fixed + f]) + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(source + ": no events");

  if (!std::is_sorted(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) { return a.t < b.t; })) {
    warn(source + ": timestamps are not monotone; events sorted by timestamp");
    std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) { return a.t < b.t; });
  }

  std::map<std::string, std::uint32_t> users;
  std::map<std::string, std::uint32_t> items;
  for (const auto& r : rows) {
    users.emplace(r.user, 0);
    items.emplace(r.item, 0);
  }
  Dataset ds;
  ds.user_ids = ordered_ids(users);
  ds.item_ids = ordered_ids(items);
  for (std::uint32_t i = 0; i < ds.user_ids.size(); ++i) users[ds.user_ids[i]] = i;
  for (std::uint32_t i = 0; i < ds.item_ids.size(); ++i) items[ds.item_ids[i]] = i;
  ds.n_users = static_cast<std::uint32_t>(ds.user_ids.size());
  ds.n_items = static_cast<std::uint32_t>(ds.item_ids.size());
  ds.feature_dim = static_cast<std::size_t>(width);
  ds.events.reserve(rows.size());
  for (auto& r : rows) {
    ds.events.push_back({users.at(r.user), items.at(r.item), r.t, std::move(r.features)});
  }
  return ds;
}

Dataset parse(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path.string());
}

std::string to_string(const Dataset& ds) {
  std::string out = "user_id,item_id,timestamp,state_label";
  for (std::size_t f = 0; f < ds.feature_dim; ++f) out += ",f" + std::to_string(f + 1);
  out += '\n';
  for (const auto& e : ds.events) {
    out += ds.user_ids.empty() ? std::to_string(e.user) : ds.user_ids.at(e.user);
    out += ',';
    out += ds.item_ids.empty() ? std::to_string(e.item) : ds.item_ids.at(e.item);
    out += ',';
    out += fmt(e.t);
    out += ",0";
    for (double f : e.features) {
      out += ',';
      out += fmt(f);
    }
    out += '\n';
  }
  return out;
}

void write(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << to_string(ds);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void validate(const Dataset& ds) {
  double prev = 0.0;
  for (std::size_t k = 0; k < ds.events.size(); ++k) {
    const auto& e = ds.events[k];
    const std::string at = "event " + std::to_string(k) + ": ";
    if (e.user >= ds.n_users) throw DataError(at + "user id out of range");
    if (e.item >= ds.n_items) throw DataError(at + "item id out of range");
    if (!(e.t >= 0.0) || !std::isfinite(e.t)) throw DataError(at + "invalid timestamp");
    if (k > 0 && e.t < prev) throw DataError(at + "timestamps out of order");
    if (e.features.size() != ds.feature_dim) throw DataError(at + "feature-width mismatch");
    prev = e.t;
  }
}

std::span<const InteractionEvent> Split::train(const Dataset& ds) const {
  return std::span(ds.events).subspan(0, train_end);
}
std::span<const InteractionEvent> Split::valid(const Dataset& ds) const {
  return std::span(ds.events).subspan(train_end, valid_end - train_end);
}
std::span<const InteractionEvent> Split::test(const Dataset& ds) const {
  return std::span(ds.events).subspan(valid_end, total - valid_end);
}

Split chrono_split(const Dataset& ds, SplitFractions fr) {
  const std::size_t n = ds.events.size();
  if (n < 3) throw DataError("dataset has " + std::to_string(n) + " events; a split needs at least 3");
  for (double f : {fr.train, fr.valid, fr.test}) {
    if (!(f >= 0.0) || f > 1.0) throw UsageError("split fractions must lie in [0, 1]");
  }
  if (std::abs(fr.train + fr.valid + fr.test - 1.0) > 1e-9) {
    throw UsageError("split fractions must sum to 1");
  }
  // The 1e-9 guards against 0.29 * 100 = 28.999999999999996.
  const auto count = [n](double f) {
    return std::min(n, static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9)));
  };
  Split s;
  s.total = n;
  s.train_end = count(fr.train);
  s.valid_end = fr.test == 0.0 ? n : std::min(n, s.train_end + count(fr.valid));
  return s;
}

namespace {

std::vector<IntervalBatch> from_bounds(std::span<const InteractionEvent> events,
                                       const std::vector<std::size_t>& bounds) {
  std::vector<IntervalBatch> out;
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    IntervalBatch b;
    b.index = k;
    b.begin = bounds[k];
    b.end = bounds[k + 1];
    b.t_start = events[b.begin].t;
    b.t_end = b.end < events.size() ? events[b.end].t
                                    : std::nextafter(events.back().t, INFINITY);
    out.push_back(b);
  }
  return out;
}

}  // namespace

std::vector<IntervalBatch> interval_partition(std::span<const InteractionEvent> events,
                                              std::size_t n_intervals) {
  if (n_intervals == 0) throw UsageError("interval count must be at least 1");
  if (events.empty()) return {};
  if (n_intervals > events.size()) {
    warn("requested " + std::to_string(n_intervals) + " intervals for " +
         std::to_string(events.size()) + " events; using one event per interval");
    n_intervals = events.size();
  }
  const std::size_t per = events.size() / n_intervals;
  std::vector<std::size_t> bounds;
  for (std::size_t k = 0; k < n_intervals; ++k) bounds.push_back(k * per);
  bounds.push_back(events.size());
  return from_bounds(events, bounds);
}

std::vector<IntervalBatch> fixed_batches(std::span<const InteractionEvent> events,
                                         std::size_t batch_size) {
  if (batch_size == 0) throw UsageError("batch size must be at least 1");
  std::vector<std::size_t> bounds;
  for (std::size_t b = 0; b < events.size(); b += batch_size) bounds.push_back(b);
  bounds.push_back(events.size());
  if (events.empty()) return {};
  return from_bounds(events, bounds);
}

Dataset synth_generate(const SynthOptions& o) {
  if (o.n_users == 0 || o.n_items == 0) throw UsageError("synth: user and item counts must be positive");
  if (o.n_clusters == 0 || o.n_clusters > std::min(o.n_users, o.n_items)) {
    throw UsageError("synth: cluster count must lie in [1, min(users, items)]");
  }
  if (o.n_events == 0) throw UsageError("synth: event count must be positive");
  if (!(o.noise >= 0.0 && o.noise <= 1.0)) throw UsageError("synth: noise must lie in [0, 1]");

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> any_user(0, o.n_users - 1);
  std::uniform_int_distribution<std::uint32_t> any_item(0, o.n_items - 1);
  std::normal_distribution<double> jitter(0.0, 0.1);

  Dataset ds;
  ds.n_users = o.n_users;
  ds.n_items = o.n_items;
  ds.feature_dim = o.feature_dim;
  for (std::uint32_t u = 0; u < o.n_users; ++u) ds.user_ids.push_back(std::to_string(u));
  for (std::uint32_t i = 0; i < o.n_items; ++i) ds.item_ids.push_back(std::to_string(i));

  std::vector<double> times(o.n_events);
  for (auto& t : times) t = unit(rng) * static_cast<double>(o.n_events);
  std::sort(times.begin(), times.end());

  ds.events.reserve(o.n_events);
  for (std::size_t k = 0; k < o.n_events; ++k) {
    InteractionEvent e;
    e.user = any_user(rng);
    const std::uint32_t c = synth_cluster(e.user, o.n_clusters);
    if (unit(rng) < o.noise) {
      e.item = any_item(rng);
    } else {
      // Items of cluster c are c, c + C, c + 2C, ...
      const std::uint32_t members = (o.n_items - c + o.n_clusters - 1) / o.n_clusters;
      e.item = c + o.n_clusters * std::uniform_int_distribution<std::uint32_t>(0, members - 1)(rng);
    }
    e.t = times[k];
    e.features.resize(o.feature_dim);
    const std::uint32_t ic = synth_cluster(e.item, o.n_clusters);
    for (std::size_t f = 0; f < o.feature_dim; ++f) {
      e.features[f] = jitter(rng) + (f % o.n_clusters == ic ? 1.0 : 0.0);
    }
    ds.events.push_back(std::move(e));
  }
  return ds;
}

}  // namespace coriem::data
