#pragma once

// Graph curvature: co-occurrence subgraphs, Ollivier-Ricci edge curvature
// under the hop metric, and observed sectional curvature from sampled
// triangles.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <utility>
#include <vector>

#include "coriem/data.hpp"
#include "coriem/geometry.hpp"

namespace coriem::curv {

using Node = std::uint32_t;

/// Undirected simple graph with sorted adjacency lists.
class SimpleGraph {
 public:
  SimpleGraph() = default;
  explicit SimpleGraph(std::size_t n) : adj_(n) {}

  /// Self-loops are rejected, duplicates collapse.
  static SimpleGraph from_edges(std::size_t n, std::span<const std::pair<Node, Node>> edges);

  std::size_t node_count() const noexcept { return adj_.size(); }
  std::size_t edge_count() const noexcept;
  std::size_t degree(Node x) const { return adj_.at(x).size(); }
  const std::vector<Node>& neighbors(Node x) const { return adj_.at(x); }
  bool has_edge(Node a, Node b) const;
  /// Edges with a < b in lexicographic order.
  std::vector<std::pair<Node, Node>> edges() const;

  /// Hop distances from `src`; -1 marks unreachable nodes.
  std::vector<int> bfs(Node src) const;

 private:
  std::vector<std::vector<Node>> adj_;
};

enum class Side { User, Item };
const char* side_name(Side side);

/// Entities of one side linked when they share at least `k` counterparts in
/// `events`. Nodes are the sampled entities (a `sample_ratio` fraction of
/// the side's active entities, at least 1, chosen deterministically from
/// `seed`), renumbered densely; `ids` maps node -> entity id.
struct CooccurrenceGraph {
  SimpleGraph graph;
  std::vector<std::uint32_t> ids;
};

CooccurrenceGraph build_cooccurrence_subgraph(std::span<const data::InteractionEvent> events,
                                              Side side, int k, double sample_ratio,
                                              std::uint64_t seed);

struct MassDistribution {
  std::vector<Node> support;
  std::vector<double> mass;
};

/// Lazy random-walk measure: alpha at x, (1 - alpha)/deg(x) on each
/// neighbour. An isolated node keeps unit mass on itself.
MassDistribution mass_distribution(const SimpleGraph& g, Node x, double alpha);

/// Exact 1-Wasserstein distance under the hop metric. Throws DataError when
/// the supports are not connected.
double wasserstein(const SimpleGraph& g, const MassDistribution& mu, const MassDistribution& nu);

/// 1 - W(m_x, m_y) for an edge (x, y). Throws UsageError for a non-edge.
double ollivier_ricci_edge(const SimpleGraph& g, Node x, Node y, double alpha);

/// Curvatures of up to `max_edges` edges sampled uniformly without
/// replacement (all edges when there are fewer), in edge order.
std::vector<double> ricci_values(const SimpleGraph& g, double alpha, std::size_t max_edges,
                                 std::uint64_t seed);

/// Fixed-width CurvNN input: values sorted in descending order, then
/// truncated by evenly strided subsampling or zero-padded at the end.
std::vector<double> pad_ricci(std::vector<double> values, std::size_t width);

struct TriangleDeviation {
  double gamma = 0.0;
  double normalized = 0.0;
};

/// Parallelogram-law deviation of triangle abc with m the midpoint of bc.
/// Throws DomainError when dam = 0 (normalized form undefined).
TriangleDeviation triangle_deviation(double dam, double dbc, double dab, double dac);

/// Graph mode: for every node m with at least two neighbours, average the
/// normalized deviation over `iterations` draws of distinct neighbours b, c
/// and a node a != m from m's component. Throws DataError when no node
/// qualifies or the graph has fewer than 3 nodes.
double observed_curvature(const SimpleGraph& g, int iterations, std::uint64_t seed);

/// Point-set mode: each point in turn acts as b, with c and a drawn from the
/// remaining points and m the geodesic midpoint of bc. Needs at least 3
/// points.
double observed_curvature(std::span<const geo::ManifoldPoint> points, int iterations,
                          std::uint64_t seed);

inline double curvature_loss(double kappa_e, double kappa_o) {
  const double d = kappa_e - kappa_o;
  return d * d;
}

struct CurvatureOptions {
  int k = 1;
  double sample_ratio = 0.2;
  double alpha = 0.5;
  std::size_t max_edges = 64;
  std::size_t width = 64;
  int iterations = 10;
};

/// Curvature summary of one side of one interval.
struct IntervalCurvature {
  std::vector<double> ricci;  // padded to the configured width
  double kappa_o = 0.0;
  /// False when the subgraph was too small for observed curvature; kappa_o then
  /// holds the fallback value supplied by the caller.
  bool observed = false;
  std::size_t nodes = 0;
  std::size_t edges = 0;
};

IntervalCurvature compute_interval_curvature(std::span<const data::InteractionEvent> events,
                                             Side side, const CurvatureOptions& options,
                                             std::uint64_t seed, double fallback_kappa_o);

/// Deterministic per-(interval, side) seed.
std::uint64_t derive_seed(std::uint64_t base, std::size_t interval, Side side);

/// Thread-safe in-memory cache with optional text-file persistence.
///
/// File layout (one file per key, name "curv_<seed>_<interval>_<side>.txt"):
///   coriem-curvature v1
///   interval <n>
///   side <user|item>
///   seed <u64>
///   observed <0|1>
///   nodes <n>
///   edges <n>
///   kappa_o <%.17g>
///   ricci <width> <v1> ... <vwidth>
class CurvatureCache {
 public:
  struct Key {
    std::size_t interval;
    Side side;
    std::uint64_t seed;
    auto operator<=>(const Key&) const = default;
  };

  std::optional<IntervalCurvature> get(const Key& key) const;
  void put(const Key& key, IntervalCurvature value);
  std::size_t size() const;

  static std::filesystem::path file_name(const std::filesystem::path& dir, const Key& key);
  void save(const std::filesystem::path& dir) const;
  /// Loads every cache file in `dir`; throws DataError on malformed files.
  void load(const std::filesystem::path& dir);

  static std::string serialize(const Key& key, const IntervalCurvature& value);
  static std::pair<Key, IntervalCurvature> deserialize(const std::string& text);

 private:
  mutable std::shared_mutex mutex_;
  std::map<Key, IntervalCurvature> entries_;
};

}  // namespace coriem::curv
