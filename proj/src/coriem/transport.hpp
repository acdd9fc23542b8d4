#pragma once

// Exact balanced optimal transport between small discrete distributions,
// solved with the transportation simplex (northwest-corner start, MODI
// pricing, Bland's rule against cycling).

#include <span>
#include <vector>

namespace coriem::ot {

struct TransportResult {
  double cost = 0.0;
  std::vector<double> plan;  // row-major supply.size() x demand.size()
  int pivots = 0;
};

/// `cost` is row-major supply.size() x demand.size(). Masses must be
/// non-negative with equal totals (within 1e-9 relative); throws UsageError
/// otherwise.
TransportResult solve(std::span<const double> supply, std::span<const double> demand,
                      std::span<const double> cost);

}  // namespace coriem::ot
