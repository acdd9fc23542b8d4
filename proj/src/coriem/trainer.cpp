#include "coriem/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "coriem/error.hpp"

namespace coriem::train {
namespace {

using ad::Var;

geo::Curvature curvature_of(double k) { return geo::Curvature(k); }

}  // namespace

model::ModelShape shape_from(const RunConfig& config, int feature_dim) {
  model::ModelShape s;
  s.dim = config.dim;
  s.feature_dim = feature_dim;
  s.ricci_width = config.ricci_width;
  s.layers = config.layers;
  s.encoder = config.encoder;
  s.fusion = config.fusion;
  return s;
}

curv::CurvatureOptions curvature_options(const RunConfig& config) {
  curv::CurvatureOptions o;
  o.k = config.cooccur_k;
  o.sample_ratio = config.sample_ratio;
  o.alpha = config.alpha;
  o.max_edges = static_cast<std::size_t>(config.ricci_max_edges);
  o.width = static_cast<std::size_t>(config.ricci_width);
  o.iterations = config.curvature_iterations;
  return o;
}

std::vector<BatchCurvature> batch_curvatures(std::span<const data::InteractionEvent> events,
                                             std::span<const data::IntervalBatch> batches, const RunConfig& config,
                                             std::size_t first_index, double fallback, curv::CurvatureCache* cache) {
  const auto opts = curvature_options(config);
  std::vector<BatchCurvature> out;
  out.reserve(batches.size());
  double prev_u = fallback;
  double prev_i = fallback;
  for (std::size_t n = 0; n < batches.size(); ++n) {
    const auto slice = events.subspan(batches[n].begin, batches[n].size());
    const std::size_t index = first_index + n;
    auto one = [&](curv::Side side, double prev) {
      const curv::CurvatureCache::Key key{index, side, config.seed};
      if (cache != nullptr) {
        if (auto hit = cache->get(key)) return *hit;
      }
      auto value = curv::compute_interval_curvature(slice, side, opts, curv::derive_seed(config.seed, index, side), prev);
      if (cache != nullptr) cache->put(key, value);
      return value;
    };
    BatchCurvature bc{one(curv::Side::User, prev_u), one(curv::Side::Item, prev_i)};
    prev_u = bc.user.kappa_o;
    prev_i = bc.item.kappa_o;
    out.push_back(std::move(bc));
  }
  return out;
}

BatchCurvature static_curvature(std::span<const data::InteractionEvent> events, const RunConfig& config) {
  const auto opts = curvature_options(config);
  // Interval index past any real batch keeps the seed stream separate.
  const std::size_t index = static_cast<std::size_t>(-1);
  return {curv::compute_interval_curvature(events, curv::Side::User, opts,
                                           curv::derive_seed(config.seed, index, curv::Side::User), config.kappa_init),
          curv::compute_interval_curvature(events, curv::Side::Item, opts,
                                           curv::derive_seed(config.seed, index, curv::Side::Item), config.kappa_init)};
}

double first_kappa(const RunConfig& config, double static_kappa) {
  return config.curvature == CurvatureMode::Evolve ? config.kappa_init : next_kappa(config, 0.0, static_kappa);
}

double next_kappa(const RunConfig& config, double kappa_e, double static_kappa) {
  switch (config.curvature) {
    case CurvatureMode::Zero:
      return 0.0;
    case CurvatureMode::Static:
      return std::clamp(static_kappa, -config.kappa_max, config.kappa_max);
    case CurvatureMode::Evolve:
      break;
  }
  if (!std::isfinite(kappa_e)) throw RuntimeError("curvature estimate is not finite");
  return std::clamp(kappa_e, -config.kappa_max, config.kappa_max);
}

std::string log_header() {
  return "epoch,interval,loss,j_user,j_item,j_curv,kappa_u,kappa_i,kappa_o_u,kappa_o_i,wall_ms";
}

std::string format_row(const LogRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f", r.epoch, r.interval,
                r.loss, r.j_user, r.j_item, r.j_curv, r.kappa_u, r.kappa_i, r.kappa_o_u, r.kappa_o_i, r.wall_ms);
  return buf;
}

void write_log(std::ostream& out, std::span<const LogRow> rows) {
  out << log_header() << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
}

IntervalOptions interval_options(const RunConfig& config, double tau) {
  IntervalOptions o;
  o.contrast.eta = config.no_reweigh ? 0.0 : config.eta;
  o.contrast.co_contrast = !config.no_cocon;
  o.contrast.kernel.learned = !config.no_kernel;
  o.contrast.kernel.tau = tau;
  o.negatives = config.negatives;
  o.w1 = config.w1;
  o.w2 = config.w2;
  o.dropout = config.dropout;
  return o;
}

IntervalLoss interval_loss(ad::Tape& tape, const ad::ParameterSet& params, const model::Network& net,
                           std::span<const data::InteractionEvent> batch, const model::EmbeddingTable& previous,
                           double t_start, bool warm_up, const BatchCurvature& curvature,
                           const IntervalOptions& options, std::mt19937_64& rng) {
  IntervalLoss out;
  out.kappa_e_u = net.estimate_curvature(tape, params, curv::Side::User, curvature.user.ricci);
  out.kappa_e_i = net.estimate_curvature(tape, params, curv::Side::Item, curvature.item.ricci);
  const Var jc = ad::square(out.kappa_e_u - curvature.user.kappa_o) + ad::square(out.kappa_e_i - curvature.item.kappa_o);

  out.forward = model::forward_interval(tape, params, net, batch, previous, model::DropoutSpec{options.dropout, &rng});
  const auto views = contrast::make_views(tape, params, net, out.forward, previous, t_start, warm_up,
                                          options.contrast.kernel);
  const auto neg_u = contrast::sample_negatives(views.users.alpha.size(), options.negatives, rng);
  const auto neg_i = contrast::sample_negatives(views.items.alpha.size(), options.negatives, rng);
  const auto& c = options.contrast;
  const auto& fwd = out.forward;
  out.parts = contrast::overall_loss(
      contrast::co_contrast_loss(tape, views.users, views.items, fwd.user_links, neg_u, true, c),
      contrast::co_contrast_loss(tape, views.users, views.items, fwd.user_links, neg_u, false, c),
      contrast::co_contrast_loss(tape, views.items, views.users, fwd.item_links, neg_i, true, c),
      contrast::co_contrast_loss(tape, views.items, views.users, fwd.item_links, neg_i, false, c), jc, options.w1,
      options.w2);
  return out;
}

TrainResult train(const data::Dataset& ds, const RunConfig& config, const Progress& progress,
                  curv::CurvatureCache* cache) {
  config.validate();
  const auto events = data::chrono_split(ds).train(ds);
  if (events.empty()) throw DataError("training segment is empty");
  TrainResult result;
  result.shape = shape_from(config, ds.feature_dim);
  result.n_users = ds.n_users;
  result.n_items = ds.n_items;
  const model::Network net(result.shape);
  result.params = net.init_params(config.seed);

  const auto batches = data::interval_partition(events, static_cast<std::size_t>(config.intervals));
  const auto curvature = batch_curvatures(events, batches, config, 0, config.kappa_init, cache);
  BatchCurvature whole;
  if (config.curvature == CurvatureMode::Static) whole = static_curvature(events, config);
  const double first_kappa_u = first_kappa(config, whole.user.kappa_o);
  const double first_kappa_i = first_kappa(config, whole.item.kappa_o);
  result.initial = model::advance_interval(
      model::init_table(result.n_users, result.n_items, config.dim, first_kappa_u, config.seed),
      curvature_of(first_kappa_u), curvature_of(first_kappa_i));

  const auto options = interval_options(config, contrast::mean_event_gap(events));
  ad::Adam adam(result.params, ad::AdamOptions{config.lr});
  std::mt19937_64 rng(config.seed ^ 0xa4093822299f31d0ULL);
  result.final_table = result.initial;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    model::EmbeddingTable table = result.initial;
    double ku = first_kappa_u;
    double ki = first_kappa_i;
    result.curvature.clear();
    for (std::size_t n = 0; n < batches.size(); ++n) {
      const auto start = std::chrono::steady_clock::now();
      model::EmbeddingTable current = model::advance_interval(table, curvature_of(ku), curvature_of(ki));
      ad::Tape tape;
      const auto slice = events.subspan(batches[n].begin, batches[n].size());
      const auto loss = interval_loss(tape, result.params, net, slice, current, batches[n].t_start, n == 0,
                                      curvature[n], options, rng);
      const double value = loss.parts.total.value();
      if (!std::isfinite(value)) {
        throw RuntimeError("training diverged: loss is " + std::to_string(value) + " at epoch " +
                           std::to_string(epoch) + ", interval " + std::to_string(n));
      }
      const auto grads = tape.backward(loss.parts.total, result.params);
      adam.step(result.params, grads);
      if (!result.params.all_finite()) {
        throw RuntimeError("training diverged: non-finite parameters at epoch " + std::to_string(epoch) +
                           ", interval " + std::to_string(n));
      }
      model::commit(loss.forward, current);

      const double keu = loss.kappa_e_u.value();
      const double kei = loss.kappa_e_i.value();
      result.curvature.push_back({n, ku, ki, keu, kei, curvature[n].user.kappa_o, curvature[n].item.kappa_o});
      LogRow row{epoch,
                 n,
                 value,
                 loss.parts.user.value(),
                 loss.parts.item.value(),
                 loss.parts.curv.value(),
                 ku,
                 ki,
                 curvature[n].user.kappa_o,
                 curvature[n].item.kappa_o,
                 std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()};
      if (progress) progress(row);
      result.log.push_back(row);

      table = std::move(current);
      ku = next_kappa(config, keu, whole.user.kappa_o);
      ki = next_kappa(config, kei, whole.item.kappa_o);
    }
    result.final_table = std::move(table);
  }
  return result;
}

}  // namespace coriem::train
