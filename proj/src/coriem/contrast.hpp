#pragma once

// Temporal views and the reweighed co-contrastive objective.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "coriem/geometry.hpp"
#include "coriem/model.hpp"
#include "coriem/tape.hpp"

namespace coriem::contrast {

enum class Sign { Positive, Negative };

/// (tx . ty) * sigmoid(-d(x, y)). Throws CurvatureMismatch or DimensionMismatch.
double similarity(const geo::ManifoldPoint& x, const geo::ManifoldPoint& y, std::span<const double> tx,
                  std::span<const double> ty);

/// w_k = exp(-+eta s_k) / mean_j exp(-+eta s_j); minus for positives. Sums to
/// the sample count. Throws UsageError on empty input or negative eta.
std::vector<double> reweigh(std::span<const double> sims, double eta, Sign sign);
ad::Var reweigh(ad::Var sims, double eta, Sign sign);

/// Per-anchor reweighed loss
///   -[sum_k w+_k log sigmoid(s+_k) + sum_j w-_j log sigmoid(-s-_j)].
/// Either side may be empty.
double reweighed_loss(std::span<const double> pos, std::span<const double> neg, double eta);
ad::Var reweighed_loss(ad::Tape& tape, std::span<const ad::Var> pos, std::span<const ad::Var> neg, double eta);

/// Unweighted binary cross-entropy contrast over the same samples:
///   -[sum_k log(1 / (1 + e^{-s+_k})) + sum_j log(1 / (1 + e^{s-_j}))].
double info_nce(std::span<const double> pos, std::span<const double> neg);

/// One side's entities active in an interval, in both views.
struct ViewSide {
  geo::Curvature kappa;
  std::vector<ad::Var> alpha;
  std::vector<ad::Var> beta;
  std::vector<double> alpha_time;
  std::vector<double> beta_time;
  /// Time encodings matching the times above; empty when the decay kernel is used.
  std::vector<ad::Var> alpha_code;
  std::vector<ad::Var> beta_code;
};

struct ViewPair {
  ViewSide users;
  ViewSide items;
};

struct KernelOptions {
  bool learned = true;  // false: exp(-|t1 - t2| / tau)
  double tau = 1.0;
};

/// Builds both views for one interval. `previous` holds every entity at the
/// current curvatures before this interval's update; with `warm_up` the beta
/// view is a detached copy of the alpha view.
ViewPair make_views(ad::Tape& tape, const ad::ParameterSet& p, const model::Network& net,
                    const model::IntervalForward& fwd, const model::EmbeddingTable& previous, double t_start,
                    bool warm_up, const KernelOptions& kernel);

/// Per anchor, positions of `count` same-side negatives drawn uniformly with
/// replacement from the other active entities. No negatives when n < 2.
std::vector<std::vector<std::uint32_t>> sample_negatives(std::size_t n, int count, std::mt19937_64& rng);

struct ContrastOptions {
  double eta = 2.0;
  bool co_contrast = true;
  KernelOptions kernel;
};

/// Mean over anchors of the per-anchor reweighed loss. With `alpha_anchor`
/// the anchors come from the alpha view and every sample from the beta view;
/// otherwise the roles swap. Positives: the anchor's own entity plus, with
/// co-contrast, the images of its counterparts (`links`, with multiplicity)
/// mapped into the anchor's space.
ad::Var co_contrast_loss(ad::Tape& tape, const ViewSide& own, const ViewSide& other,
                         const std::vector<std::vector<std::uint32_t>>& links,
                         const std::vector<std::vector<std::uint32_t>>& negatives, bool alpha_anchor,
                         const ContrastOptions& options);

struct LossParts {
  ad::Var total;
  ad::Var user;   // J^U(a,b) + J^U(b,a)
  ad::Var item;   // J^I(a,b) + J^I(b,a)
  ad::Var curv;   // user-side plus item-side curvature loss
};

/// (JU_ab + JU_ba) + w1 (JI_ab + JI_ba) + w2 Jc.
LossParts overall_loss(ad::Var ju_ab, ad::Var ju_ba, ad::Var ji_ab, ad::Var ji_ba, ad::Var jc, double w1,
                       double w2);

/// Mean gap between consecutive events; 1 when that is zero or undefined.
double mean_event_gap(std::span<const data::InteractionEvent> events);

}  // namespace coriem::contrast
