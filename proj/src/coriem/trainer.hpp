#pragma once

// Self-supervised training over chronological interval batches.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "coriem/config.hpp"
#include "coriem/contrast.hpp"
#include "coriem/curvature.hpp"
#include "coriem/data.hpp"
#include "coriem/model.hpp"

namespace coriem::train {

model::ModelShape shape_from(const RunConfig& config, int feature_dim);
curv::CurvatureOptions curvature_options(const RunConfig& config);

/// Ricci vectors and observed curvature of both sides for one batch.
struct BatchCurvature {
  curv::IntervalCurvature user;
  curv::IntervalCurvature item;
};

/// Curvature of every batch. Batch n uses the interval index `first_index + n`
/// for seeding and caching. Sides without enough structure for observed curvature
/// inherit the previous batch's observed value (`fallback` for the first).
std::vector<BatchCurvature> batch_curvatures(std::span<const data::InteractionEvent> events,
                                             std::span<const data::IntervalBatch> batches, const RunConfig& config,
                                             std::size_t first_index, double fallback,
                                             curv::CurvatureCache* cache = nullptr);

/// Observed curvature of a whole event range, for the static curvature mode.
BatchCurvature static_curvature(std::span<const data::InteractionEvent> events, const RunConfig& config);

/// Geometry curvature of the first batch.
double first_kappa(const RunConfig& config, double static_kappa);
/// Geometry curvature of the next batch, given the current estimate.
double next_kappa(const RunConfig& config, double kappa_e, double static_kappa);

/// Per-entry record of the last epoch.
struct CurvatureRecord {
  std::size_t interval = 0;
  double kappa_u = 0.0;  // geometry curvature used for the interval
  double kappa_i = 0.0;
  double kappa_e_u = 0.0;  // estimator outputs
  double kappa_e_i = 0.0;
  double kappa_o_u = 0.0;  // observed targets
  double kappa_o_i = 0.0;
};

struct LogRow {
  int epoch = 0;
  std::size_t interval = 0;
  double loss = 0.0;
  double j_user = 0.0;
  double j_item = 0.0;
  double j_curv = 0.0;
  double kappa_u = 0.0;
  double kappa_i = 0.0;
  double kappa_o_u = 0.0;
  double kappa_o_i = 0.0;
  double wall_ms = 0.0;
};

/// CSV header and rows; wall time is the last column.
std::string log_header();
std::string format_row(const LogRow& row);
void write_log(std::ostream& out, std::span<const LogRow> rows);

struct IntervalOptions {
  contrast::ContrastOptions contrast;
  int negatives = 16;
  double w1 = 1.0;
  double w2 = 10.0;
  double dropout = 0.0;
};

IntervalOptions interval_options(const RunConfig& config, double tau);

struct IntervalLoss {
  contrast::LossParts parts;
  model::IntervalForward forward;
  ad::Var kappa_e_u;
  ad::Var kappa_e_i;
};

/// Builds the full objective of one interval on `tape`. `previous` holds every
/// entity at the interval's curvatures before the update. `rng` drives
/// dropout and negative sampling.
IntervalLoss interval_loss(ad::Tape& tape, const ad::ParameterSet& params, const model::Network& net,
                           std::span<const data::InteractionEvent> batch, const model::EmbeddingTable& previous,
                           double t_start, bool warm_up, const BatchCurvature& curvature,
                           const IntervalOptions& options, std::mt19937_64& rng);

struct TrainResult {
  model::ModelShape shape;
  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
  ad::ParameterSet params;
  model::EmbeddingTable initial;
  model::EmbeddingTable final_table;
  std::vector<CurvatureRecord> curvature;
  std::vector<LogRow> log;
};

using Progress = std::function<void(const LogRow&)>;

/// Trains on the training segment of `ds` (chronological split). Throws
/// RuntimeError when the loss or a curvature estimate stops being finite.
TrainResult train(const data::Dataset& ds, const RunConfig& config, const Progress& progress = {},
                  curv::CurvatureCache* cache = nullptr);

}  // namespace coriem::train
