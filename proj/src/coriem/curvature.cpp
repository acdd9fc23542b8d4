#include "coriem/curvature.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>

#include "coriem/error.hpp"
#include "coriem/transport.hpp"

namespace coriem::curv {

SimpleGraph SimpleGraph::from_edges(std::size_t n, std::span<const std::pair<Node, Node>> edges) {
  SimpleGraph g(n);
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw UsageError("graph edge references a node out of range");
    if (a == b) throw UsageError("graph edges must not be self-loops");
    g.adj_[a].push_back(b);
    g.adj_[b].push_back(a);
  }
  for (auto& nb : g.adj_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

std::size_t SimpleGraph::edge_count() const noexcept {
  std::size_t twice = 0;
  for (const auto& nb : adj_) twice += nb.size();
  return twice / 2;
}

bool SimpleGraph::has_edge(Node a, Node b) const {
  const auto& nb = adj_.at(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

std::vector<std::pair<Node, Node>> SimpleGraph::edges() const {
  std::vector<std::pair<Node, Node>> out;
  for (Node a = 0; a < adj_.size(); ++a) {
    for (Node b : adj_[a]) {
      if (a < b) out.emplace_back(a, b);
    }
  }
  return out;
}

std::vector<int> SimpleGraph::bfs(Node src) const {
  std::vector<int> dist(adj_.size(), -1);
  std::vector<Node> queue = {src};
  dist.at(src) = 0;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const Node x = queue[q];
    for (Node y : adj_[x]) {
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
    }
  }
  return dist;
}

const char* side_name(Side side) { return side == Side::User ? "user" : "item"; }

CooccurrenceGraph build_cooccurrence_subgraph(std::span<const data::InteractionEvent> events,
                                              Side side, int k, double sample_ratio,
                                              std::uint64_t seed) {
  if (k < 1) throw UsageError("co-occurrence threshold K must be at least 1");
  if (!(sample_ratio > 0.0 && sample_ratio <= 1.0)) {
    throw UsageError("sample ratio must lie in (0, 1]");
  }
  auto self = [side](const data::InteractionEvent& e) { return side == Side::User ? e.user : e.item; };
  auto other = [side](const data::InteractionEvent& e) { return side == Side::User ? e.item : e.user; };

  std::vector<std::uint32_t> active;
  for (const auto& e : events) active.push_back(self(e));
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());

  CooccurrenceGraph out;
  if (active.empty()) return out;
  const auto take = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(sample_ratio * static_cast<double>(active.size()) - 1e-9)));
  std::mt19937_64 rng(seed);
  std::shuffle(active.begin(), active.end(), rng);
  active.resize(std::min(take, active.size()));
  std::sort(active.begin(), active.end());
  out.ids = active;

  std::map<std::uint32_t, Node> node_of;
  for (Node i = 0; i < active.size(); ++i) node_of[active[i]] = i;

  std::map<std::uint32_t, std::vector<Node>> by_counterpart;
  for (const auto& e : events) {
    auto it = node_of.find(self(e));
    if (it != node_of.end()) by_counterpart[other(e)].push_back(it->second);
  }
  std::map<std::pair<Node, Node>, int> shared;
  for (auto& [_, nodes] : by_counterpart) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      for (std::size_t b = a + 1; b < nodes.size(); ++b) ++shared[{nodes[a], nodes[b]}];
    }
  }
  std::vector<std::pair<Node, Node>> edges;
  for (const auto& [pair, count] : shared) {
    if (count >= k) edges.push_back(pair);
  }
  out.graph = SimpleGraph::from_edges(active.size(), edges);
  return out;
}

MassDistribution mass_distribution(const SimpleGraph& g, Node x, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
  MassDistribution m;
  const auto& nb = g.neighbors(x);
  if (nb.empty()) {
    m.support = {x};
    m.mass = {1.0};
    return m;
  }
  m.support.push_back(x);
  m.mass.push_back(alpha);
  const double share = (1.0 - alpha) / static_cast<double>(nb.size());
  for (Node y : nb) {
    m.support.push_back(y);
    m.mass.push_back(share);
  }
  return m;
}

double wasserstein(const SimpleGraph& g, const MassDistribution& mu, const MassDistribution& nu) {
  std::vector<double> cost;
  cost.reserve(mu.support.size() * nu.support.size());
  for (Node s : mu.support) {
    const auto dist = g.bfs(s);
    for (Node t : nu.support) {
      if (dist.at(t) < 0) throw DataError("wasserstein: supports lie in different components");
      cost.push_back(static_cast<double>(dist[t]));
    }
  }
  return ot::solve(mu.mass, nu.mass, cost).cost;
}

double ollivier_ricci_edge(const SimpleGraph& g, Node x, Node y, double alpha) {
  if (x >= g.node_count() || y >= g.node_count() || !g.has_edge(x, y)) {
    throw UsageError("ollivier_ricci_edge: (" + std::to_string(x) + ", " + std::to_string(y) +
                     ") is not an edge");
  }
  return 1.0 - wasserstein(g, mass_distribution(g, x, alpha), mass_distribution(g, y, alpha));
}

std::vector<double> ricci_values(const SimpleGraph& g, double alpha, std::size_t max_edges,
                                 std::uint64_t seed) {
  if (max_edges == 0) throw UsageError("max_edges must be at least 1");
  auto edges = g.edges();
  if (edges.size() > max_edges) {
    std::vector<std::size_t> idx(edges.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(max_edges);
    std::sort(idx.begin(), idx.end());
    std::vector<std::pair<Node, Node>> picked;
    for (std::size_t i : idx) picked.push_back(edges[i]);
    edges = std::move(picked);
  }
  std::vector<double> out;
  out.reserve(edges.size());
  for (auto [a, b] : edges) out.push_back(ollivier_ricci_edge(g, a, b, alpha));
  return out;
}

std::vector<double> pad_ricci(std::vector<double> values, std::size_t width) {
  if (width == 0) throw UsageError("ricci width must be at least 1");
  std::sort(values.begin(), values.end(), std::greater<>());
  if (values.size() > width) {
    std::vector<double> picked(width);
    const std::size_t n = values.size();
    for (std::size_t j = 0; j < width; ++j) {
      picked[j] = values[width == 1 ? 0 : j * (n - 1) / (width - 1)];
    }
    return picked;
  }
  values.resize(width, 0.0);
  return values;
}

TriangleDeviation triangle_deviation(double dam, double dbc, double dab, double dac) {
  TriangleDeviation r;
  r.gamma = dam * dam + dbc * dbc / 4.0 - (dab * dab + dac * dac) / 2.0;
  if (!(dam > 0.0)) throw DomainError("triangle_deviation: d(a, m) must be positive");
  r.normalized = r.gamma / (2.0 * dam);
  return r;
}

double observed_curvature(const SimpleGraph& g, int iterations, std::uint64_t seed) {
  if (iterations < 1) throw UsageError("observed_curvature: iterations must be at least 1");
  if (g.node_count() < 3) throw DataError("observed_curvature: graph too small");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> memo(g.node_count());
  auto dist_from = [&](Node s) -> const std::vector<int>& {
    if (memo[s].empty()) memo[s] = g.bfs(s);
    return memo[s];
  };

  double total = 0.0;
  std::size_t centers = 0;
  for (Node m = 0; m < g.node_count(); ++m) {
    const auto& nb = g.neighbors(m);
    if (nb.size() < 2) continue;
    const auto& dm = dist_from(m);
    std::vector<Node> component;
    for (Node a = 0; a < g.node_count(); ++a) {
      if (a != m && dm[a] >= 0) component.push_back(a);
    }
    double acc = 0.0;
    for (int it = 0; it < iterations; ++it) {
      std::uniform_int_distribution<std::size_t> pick_b(0, nb.size() - 1);
      const std::size_t ib = pick_b(rng);
      std::size_t ic = std::uniform_int_distribution<std::size_t>(0, nb.size() - 2)(rng);
      if (ic >= ib) ++ic;
      const Node b = nb[ib];
      const Node c = nb[ic];
      const Node a = component[std::uniform_int_distribution<std::size_t>(0, component.size() - 1)(rng)];
      const auto& da = dist_from(a);
      const double dbc = g.has_edge(b, c) ? 1.0 : 2.0;
      acc += triangle_deviation(dm[a], dbc, da[b], da[c]).normalized;
    }
    total += acc / iterations;
    ++centers;
  }
  if (centers == 0) throw DataError("observed_curvature: graph too small (no node has two neighbours)");
  return total / static_cast<double>(centers);
}

double observed_curvature(std::span<const geo::ManifoldPoint> points, int iterations,
                          std::uint64_t seed) {
  if (iterations < 1) throw UsageError("observed_curvature: iterations must be at least 1");
  const std::size_t n = points.size();
  if (n < 3) throw DataError("observed_curvature: point set too small");
  std::mt19937_64 rng(seed);
  double total = 0.0;
  std::size_t centers = 0;
  for (std::size_t b = 0; b < n; ++b) {
    double acc = 0.0;
    int used = 0;
    for (int it = 0; it < iterations; ++it) {
      std::size_t c = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
      if (c >= b) ++c;
      std::size_t a = std::uniform_int_distribution<std::size_t>(0, n - 3)(rng);
      for (std::size_t skip : {std::min(b, c), std::max(b, c)}) {
        if (a >= skip) ++a;
      }
      const auto m = geo::geodesic_midpoint(points[b], points[c]);
      const double dam = geo::distance(points[a], m);
      if (!(dam > 0.0)) continue;
      acc += triangle_deviation(dam, geo::distance(points[b], points[c]),
                                geo::distance(points[a], points[b]),
                                geo::distance(points[a], points[c]))
                 .normalized;
      ++used;
    }
    if (used == 0) continue;
    total += acc / used;
    ++centers;
  }
  if (centers == 0) throw DataError("observed_curvature: all sampled triangles were degenerate");
  return total / static_cast<double>(centers);
}

IntervalCurvature compute_interval_curvature(std::span<const data::InteractionEvent> events,
                                             Side side, const CurvatureOptions& o,
                                             std::uint64_t seed, double fallback_kappa_o) {
  IntervalCurvature out;
  const auto sub = build_cooccurrence_subgraph(events, side, o.k, o.sample_ratio, seed);
  out.nodes = sub.graph.node_count();
  out.edges = sub.graph.edge_count();
  out.ricci = pad_ricci(ricci_values(sub.graph, o.alpha, o.max_edges, seed ^ 0x5851f42d4c957f2dULL),
                        o.width);
  out.kappa_o = fallback_kappa_o;
  try {
    out.kappa_o = observed_curvature(sub.graph, o.iterations, seed ^ 0x14057b7ef767814fULL);
    out.observed = true;
  } catch (const DataError&) {
    out.observed = false;
  }
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::size_t interval, Side side) {
  return splitmix64(splitmix64(base) ^ (2 * static_cast<std::uint64_t>(interval) +
                                        (side == Side::User ? 0 : 1)));
}

std::optional<IntervalCurvature> CurvatureCache::get(const Key& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CurvatureCache::put(const Key& key, IntervalCurvature value) {
  std::unique_lock lock(mutex_);
  entries_[key] = std::move(value);
}

std::size_t CurvatureCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::filesystem::path CurvatureCache::file_name(const std::filesystem::path& dir, const Key& key) {
  return dir / ("curv_" + std::to_string(key.seed) + "_" + std::to_string(key.interval) + "_" +
                side_name(key.side) + ".txt");
}

std::string CurvatureCache::serialize(const Key& key, const IntervalCurvature& v) {
  std::string s = "coriem-curvature v1\n";
  s += "interval " + std::to_string(key.interval) + "\n";
  s += std::string("side ") + side_name(key.side) + "\n";
  s += "seed " + std::to_string(key.seed) + "\n";
  s += std::string("observed ") + (v.observed ? "1" : "0") + "\n";
  s += "nodes " + std::to_string(v.nodes) + "\n";
  s += "edges " + std::to_string(v.edges) + "\n";
  s += "kappa_o " + fmt(v.kappa_o) + "\n";
  s += "ricci " + std::to_string(v.ricci.size());
  for (double r : v.ricci) s += " " + fmt(r);
  s += "\n";
  return s;
}

std::pair<CurvatureCache::Key, IntervalCurvature> CurvatureCache::deserialize(const std::string& text) {
  std::istringstream in(text);
  auto fail = [](const std::string& what) -> void { throw DataError("curvature cache: " + what); };
  std::string line;
  if (!std::getline(in, line) || line != "coriem-curvature v1") fail("unknown format header");
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  std::size_t p = 0;
  auto word = [&](const char* expect) {
    if (p >= tok.size() || tok[p] != expect) fail(std::string("expected '") + expect + "'");
    ++p;
  };
  auto num = [&]() -> double {
    double v = 0.0;
    if (p >= tok.size()) fail("truncated file");
    const auto& s = tok[p++];
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail("bad number '" + s + "'");
    return v;
  };
  auto count = [&]() -> std::uint64_t {
    std::uint64_t v = 0;
    if (p >= tok.size()) fail("truncated file");
    const auto& s = tok[p++];
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail("bad integer '" + s + "'");
    return v;
  };
  Key key{};
  IntervalCurvature v;
  word("interval");
  key.interval = count();
  word("side");
  if (p >= tok.size()) fail("truncated file");
  if (tok[p] == "user") {
    key.side = Side::User;
  } else if (tok[p] == "item") {
    key.side = Side::Item;
  } else {
    fail("bad side '" + tok[p] + "'");
  }
  ++p;
  word("seed");
  key.seed = count();
  word("observed");
  v.observed = count() != 0;
  word("nodes");
  v.nodes = count();
  word("edges");
  v.edges = count();
  word("kappa_o");
  v.kappa_o = num();
  word("ricci");
  const auto n = count();
  for (std::uint64_t i = 0; i < n; ++i) v.ricci.push_back(num());
  if (p != tok.size()) fail("trailing data");
  return {key, v};
}

void CurvatureCache::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::shared_lock lock(mutex_);
  for (const auto& [key, value] : entries_) {
    const auto path = file_name(dir, key);
    std::ofstream out(path, std::ios::binary);
    out << serialize(key, value);
    if (!out) throw DataError("cannot write curvature cache '" + path.string() + "'");
  }
}

void CurvatureCache::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) return;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("curv_", 0) == 0 && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      auto [key, value] = deserialize(buf.str());
      put(key, std::move(value));
    } catch (const DataError& e) {
      throw DataError(f.string() + ": " + e.what());
    }
  }
}

}  // namespace coriem::curv
