#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "coriem/tape.hpp"
#include "geo_properties.hpp"

namespace coriem::testing {

/// Builds a parameter set and scalar loss for one random draw.
struct GradCase {
  ad::ParameterSet params;
  ad::LossFn loss;
};

using GradCaseFactory = std::function<GradCase(std::mt19937_64&)>;

struct NamedGradCase {
  std::string name;
  GradCaseFactory make;
};

/// Every differentiable primitive with a random interior-point generator.
std::vector<NamedGradCase> primitive_grad_cases();

/// Worst relative error per primitive over `points` random draws.
std::vector<PropertyResult> run_grad_cases(const std::vector<NamedGradCase>& cases,
                                           std::size_t points, std::uint64_t seed,
                                           double tol = 1e-3);

/// Full one-interval objective on a 5-user, 5-item batch with dropout and
/// negatives drawn from a fixed stream on every evaluation.
GradCase interval_loss_case(std::uint64_t seed);

}  // namespace coriem::testing
