#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "coriem/geometry.hpp"

namespace coriem::testing {

/// Worst-case deviation observed for one geometric property.
struct PropertyResult {
  std::string name;
  double worst = 0.0;
  double tolerance = 0.0;
  std::size_t cases = 0;
  std::size_t failures = 0;

  bool passed() const { return failures == 0; }
};

/// Runs every gyrovector identity over `cases` random draws at curvature `kappa`.
std::vector<PropertyResult> run_geometry_properties(double kappa, std::size_t cases,
                                                    std::uint64_t seed, int dim = 4);

/// Random point comfortably inside the domain for `kappa`.
/// Random point whose curvature-scaled norm is at most `frac`.
geo::Vector random_interior(std::mt19937_64& rng, int dim, double kappa, double frac = 0.7);

}  // namespace coriem::testing
