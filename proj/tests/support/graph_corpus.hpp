#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coriem/curvature.hpp"
#include "coriem/geometry.hpp"
#include "geo_properties.hpp"

namespace coriem::testing {

struct NamedGraph {
  std::string name;
  curv::SimpleGraph graph;
};

curv::SimpleGraph complete_graph(std::uint32_t n);
curv::SimpleGraph path_graph(std::uint32_t n);
curv::SimpleGraph cycle_graph(std::uint32_t n);
curv::SimpleGraph grid_graph(std::uint32_t rows, std::uint32_t cols);
curv::SimpleGraph binary_tree(int depth);

/// Connected graphs with at most 12 nodes.
std::vector<NamedGraph> small_graph_corpus();

struct OracleComparison {
  std::size_t edges = 0;
  double worst = 0.0;
};

/// Ollivier-Ricci of every edge vs. the LP oracle.
OracleComparison compare_with_lp(const curv::SimpleGraph& g, double alpha);

/// Hemisphere of the unit sphere in stereographic coordinates (kappa = 1).
std::vector<geo::ManifoldPoint> sphere_points(std::size_t n, std::uint64_t seed);
/// side x side lattice in the flat plane.
std::vector<geo::ManifoldPoint> grid_points(int side);

}  // namespace coriem::testing
