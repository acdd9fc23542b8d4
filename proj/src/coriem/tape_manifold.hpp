#pragma once

// Differentiable counterparts of the geometry module, composed from tape
// primitives. Forward values agree with coriem::geo to rounding; where the
// geometry module throws on a singular configuration these versions clamp, so
// a training step never aborts on a single degenerate entity.
//
// Curvature is a constant here: the spaces an embedding lives in are fixed
// for the duration of one tape.

#include <cstdint>
#include <span>

#include "coriem/geometry.hpp"
#include "coriem/tape.hpp"

namespace coriem::ad {

using geo::Curvature;

Var tan_kappa(Var z, Curvature kappa);
Var arctan_kappa(Var z, Curvature kappa);

Var project(Var x, Curvature kappa);
Var conformal_factor(Var x, Curvature kappa);

Var mobius_add(Var x, Var y, Curvature kappa);
Var mobius_scale(double r, Var x, Curvature kappa);
Var mobius_matvec(Var m, std::uint32_t rows, Var x, Curvature kappa);

Var exp_map(Var x, Var v, Curvature kappa);
Var log_map(Var x, Var y, Curvature kappa);
Var exp0(Var v, Curvature kappa);
Var log0(Var x, Curvature kappa);

Var distance(Var x, Var y, Curvature kappa);
Var map_between(Var x, Curvature from, Curvature to);

/// Weighted gyromidpoint; `weights` holds scalar nodes, or is empty for
/// uniform weights.
Var gyromidpoint(std::span<const Var> points, std::span<const Var> weights, Curvature kappa);

}  // namespace coriem::ad
