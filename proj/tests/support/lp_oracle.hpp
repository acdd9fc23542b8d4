#pragma once

#include <vector>

namespace coriem::testing {

/// min c.x subject to A x = b, x >= 0, via a dense two-phase tableau simplex
/// with Bland's rule. A is row-major rows x c.size(); b must be >= 0.
/// Returns the optimal objective; throws std::runtime_error if infeasible.
double lp_minimize(const std::vector<double>& c, const std::vector<double>& a,
                   const std::vector<double>& b);

/// Transport cost as a plain LP over the m*n flow variables.
double lp_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                    const std::vector<double>& cost);

}  // namespace coriem::testing
