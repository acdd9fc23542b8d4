#pragma once

// Co-evolving message passing over a user manifold and an item manifold.
//
// Parameters live in one ParameterSet and are addressed by name, so a
// checkpoint or a perturbed copy (gradient checks) can be bound to the same
// Network description.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "coriem/config.hpp"
#include "coriem/curvature.hpp"
#include "coriem/data.hpp"
#include "coriem/geometry.hpp"
#include "coriem/params.hpp"
#include "coriem/tape.hpp"

namespace coriem::model {

enum class Activation { Tanh, Identity };
using curv::Side;

struct ModelShape {
  int dim = 64;
  int feature_dim = 0;
  int ricci_width = 64;
  int layers = 1;
  EncoderMode encoder = EncoderMode::Cosine;
  FusionMode fusion = FusionMode::Late;
  Activation interaction_activation = Activation::Tanh;
  Activation curvnn_activation = Activation::Tanh;

  /// Number of learnable frequencies: dim (cosine) or dim / 2 (fourier).
  int frequencies() const { return encoder == EncoderMode::Cosine ? dim : dim / 2; }
  /// Width of the concatenated [features : time encoding] input.
  int interaction_input() const { return feature_dim + dim; }
};

struct CurvNNIndex {
  std::size_t w1, b1, w2, b2, w8;
};

/// Parameter layout:
///   M1..M6   dim x dim       aggregation matrices (users: 1-3, items: 4-6)
///   W7       dim x (feature_dim + dim)
///   W_fuse   dim x dim, b_fuse dim    one-layer fusion perceptron
///   omega, theta                      time encoder
///   curv_{u,i}_{w1,b1,w2,b2,w8}       curvature estimators (R = ricci_width)
class Network {
 public:
  explicit Network(ModelShape shape);

  const ModelShape& shape() const noexcept { return shape_; }

  /// Fresh parameters. Hidden-state matrices start at half the identity, the
  /// interaction matrices (M2, M5) at N(0, 0.01/dim), the cross-space
  /// matrices (M3, M6) at N(0, 0.04/dim), W7 and the fusion layer with
  /// Xavier-uniform weights, frequencies on a geometric schedule from 1 down
  /// to 1e-9, and the curvature estimators with Xavier weights.
  ad::ParameterSet init_params(std::uint64_t seed) const;
  /// Throws DataError when `params` lacks a tensor or a shape differs.
  void check(const ad::ParameterSet& params) const;

  std::size_t m(int k) const { return m_[k - 1]; }
  std::size_t w7() const { return w7_; }
  std::size_t w_fuse() const { return w_fuse_; }
  std::size_t b_fuse() const { return b_fuse_; }
  std::size_t omega() const { return omega_; }
  std::size_t theta() const { return theta_; }
  const CurvNNIndex& curvnn(Side side) const { return side == Side::User ? curv_u_ : curv_i_; }

  // Differentiable pieces.
  ad::Var time_encode(ad::Tape& tape, const ad::ParameterSet& p, double t) const;
  ad::Var integrate(ad::Tape& tape, const ad::ParameterSet& p, const data::InteractionEvent& e) const;
  ad::Var fusion_mlp(ad::Tape& tape, const ad::ParameterSet& p, ad::Var e) const;
  /// Mean pooling and the fusion perceptron in the configured order. Empty
  /// input yields the zero vector.
  ad::Var aggregate_interactions(ad::Tape& tape, const ad::ParameterSet& p,
                                 std::span<const ad::Var> events) const;
  ad::Var estimate_curvature(ad::Tape& tape, const ad::ParameterSet& p, Side side,
                             std::span<const double> ricci) const;

  // Plain evaluations.
  std::vector<double> time_encode_value(const ad::ParameterSet& p, double t) const;
  double estimate_curvature_value(const ad::ParameterSet& p, Side side, std::span<const double> ricci) const;

 private:
  ModelShape shape_;
  std::size_t m_[6];
  std::size_t w7_, w_fuse_, b_fuse_, omega_, theta_;
  CurvNNIndex curv_u_, curv_i_;
};

/// Row-major per-entity coordinates, all at one curvature per side, plus the
/// last interaction time of each entity (NaN before its first interaction).
struct EmbeddingTable {
  int dim = 0;
  geo::Curvature kappa_u{-1.0};
  geo::Curvature kappa_i{-1.0};
  std::vector<double> users;
  std::vector<double> items;
  std::vector<double> user_time;
  std::vector<double> item_time;

  std::size_t n_users() const { return user_time.size(); }
  std::size_t n_items() const { return item_time.size(); }
  std::span<double> user(std::size_t j) { return {users.data() + j * dim, static_cast<std::size_t>(dim)}; }
  std::span<double> item(std::size_t k) { return {items.data() + k * dim, static_cast<std::size_t>(dim)}; }
  std::span<const double> user(std::size_t j) const {
    return {users.data() + j * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const double> item(std::size_t k) const {
    return {items.data() + k * dim, static_cast<std::size_t>(dim)};
  }
  geo::ManifoldPoint user_point(std::size_t j) const;
  geo::ManifoldPoint item_point(std::size_t k) const;
};

/// exp0 of N(0, (0.5 / sqrt(dim))^2) draws at `kappa` on both sides.
EmbeddingTable init_table(std::uint32_t n_users, std::uint32_t n_items, int dim, double kappa,
                          std::uint64_t seed);

/// Transports every point to the new curvatures.
EmbeddingTable advance_interval(const EmbeddingTable& table, geo::Curvature kappa_u, geo::Curvature kappa_i);

struct DropoutSpec {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;  // null disables dropout
};

/// Output of one interval's aggregation on a tape.
struct IntervalForward {
  std::vector<std::uint32_t> active_users;  // ascending
  std::vector<std::uint32_t> active_items;
  std::vector<ad::Var> user_out;  // parallel to active_users
  std::vector<ad::Var> item_out;
  /// Per active entity: positions (into the counterpart active list) of the
  /// counterparts it interacted with, with multiplicity, in event order.
  std::vector<std::vector<std::uint32_t>> user_links;
  std::vector<std::vector<std::uint32_t>> item_links;
  std::vector<double> user_last_time;  // parallel to active_users
  std::vector<double> item_last_time;
};

/// Cross-space aggregation of one batch, applied `shape.layers` times. The
/// hidden state of every entity is its row in `hidden` (already at the
/// current curvatures); those rows enter the tape as constants.
IntervalForward forward_interval(ad::Tape& tape, const ad::ParameterSet& p, const Network& net,
                                 std::span<const data::InteractionEvent> batch, const EmbeddingTable& hidden,
                                 DropoutSpec dropout = {});

/// Copies forward outputs into `table` and records last interaction times.
void commit(const IntervalForward& fwd, EmbeddingTable& table);

/// Scores of every item for user `u` at time `t`:
/// (phi(t).phi(t)) * sigmoid(-d(map(u), i)).
std::vector<double> predict_scores(const Network& net, const ad::ParameterSet& p, const EmbeddingTable& table,
                                   std::uint32_t u, double t);

}  // namespace coriem::model
