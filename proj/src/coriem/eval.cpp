#include "coriem/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "coriem/error.hpp"

namespace coriem::eval {

double mrr(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw UsageError("mrr of an empty rank list");
  double acc = 0.0;
  for (auto r : ranks) {
    if (r == 0) throw UsageError("ranks start at 1");
    acc += 1.0 / static_cast<double>(r);
  }
  return acc / static_cast<double>(ranks.size());
}

double recall_at_k(std::span<const std::size_t> ranks, int k) {
  if (ranks.empty()) throw UsageError("recall of an empty rank list");
  if (k < 1) throw UsageError("recall cutoff must be at least 1");
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [&](std::size_t r) { return r <= static_cast<std::size_t>(k); });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

std::size_t rank_of(std::span<const double> scores, std::uint32_t truth) {
  if (truth >= scores.size()) throw UsageError("rank_of: item id out of range");
  const double s = scores[truth];
  std::size_t rank = 1;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (scores[k] > s || (scores[k] == s && k < truth)) ++rank;
  }
  return rank;
}

std::vector<std::size_t> RankReport::ranks() const {
  std::vector<std::size_t> r;
  r.reserve(events.size());
  for (const auto& e : events) r.push_back(e.rank);
  return r;
}

namespace {

struct Roller {
  const train::TrainResult& model;
  const RunConfig& config;
  model::Network net;
  model::EmbeddingTable table;
  double ku;
  double ki;
  double static_u = 0.0;
  double static_i = 0.0;

  Roller(const train::TrainResult& m, const RunConfig& c, const train::BatchCurvature& whole)
      : model(m), config(c), net(m.shape), table(m.initial), static_u(whole.user.kappa_o), static_i(whole.item.kappa_o) {
    ku = train::first_kappa(c, static_u);
    ki = train::first_kappa(c, static_i);
  }

  void step(std::span<const data::InteractionEvent> batch, std::size_t offset, const train::BatchCurvature& curv,
            RankReport* report) {
    model::EmbeddingTable current = model::advance_interval(table, geo::Curvature(ku), geo::Curvature(ki));
    std::vector<data::InteractionEvent> known;
    known.reserve(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto& e = batch[k];
      if (e.user >= current.n_users() || e.item >= current.n_items()) {
        if (report != nullptr) ++report->skipped;
        continue;
      }
      known.push_back(e);
      if (report != nullptr) {
        const auto scores = model::predict_scores(net, model.params, current, e.user, e.t);
        report->events.push_back({offset + k, e.user, e.item, e.t, rank_of(scores, e.item)});
      }
    }
    if (!known.empty()) {
      ad::Tape tape;
      const auto fwd = model::forward_interval(tape, model.params, net, known, current);
      model::commit(fwd, current);
    }
    table = std::move(current);
    ku = train::next_kappa(config, net.estimate_curvature_value(model.params, curv::Side::User, curv.user.ricci), static_u);
    ki = train::next_kappa(config, net.estimate_curvature_value(model.params, curv::Side::Item, curv.item.ricci), static_i);
  }
};

}  // namespace

RankReport evaluate(const train::TrainResult& trained, const data::Dataset& ds, const RunConfig& config, Target target,
                    std::span<const int> ks, curv::CurvatureCache* cache) {
  const auto split = data::chrono_split(ds);
  const auto all = std::span<const data::InteractionEvent>(ds.events);
  const auto train_events = all.subspan(0, split.train_end);
  if (train_events.empty()) throw DataError("training segment is empty");

  RankReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.n_items = trained.n_items;

  train::BatchCurvature whole;
  if (config.curvature == CurvatureMode::Static) whole = train::static_curvature(train_events, config);
  Roller roller(trained, config, whole);

  const auto train_batches = data::interval_partition(train_events, static_cast<std::size_t>(config.intervals));
  const auto train_curv = train::batch_curvatures(train_events, train_batches, config, 0, config.kappa_init, cache);
  for (std::size_t n = 0; n < train_batches.size(); ++n) {
    roller.step(train_events.subspan(train_batches[n].begin, train_batches[n].size()), train_batches[n].begin,
                train_curv[n], nullptr);
  }

  const std::size_t batch_size = std::max<std::size_t>(1, train_events.size() / train_batches.size());
  const auto later = all.subspan(split.train_end);
  const std::size_t score_begin = target == Target::Valid ? 0 : split.valid_end - split.train_end;
  const std::size_t score_end = target == Target::Valid ? split.valid_end - split.train_end : later.size();
  if (score_end <= score_begin) throw DataError(std::string(target == Target::Valid ? "validation" : "test") +
                                                " segment is empty");
  const auto rest = later.subspan(0, score_end);
  // Batches never straddle the valid/test boundary.
  std::vector<data::IntervalBatch> batches;
  for (auto [lo, hi] : {std::pair<std::size_t, std::size_t>{0, score_begin}, {score_begin, score_end}}) {
    if (hi <= lo) continue;
    for (auto b : data::fixed_batches(rest.subspan(lo, hi - lo), batch_size)) {
      b.begin += lo;
      b.end += lo;
      batches.push_back(b);
    }
  }
  const double fallback = train_curv.empty() ? config.kappa_init : train_curv.back().item.kappa_o;
  const auto later_curv = train::batch_curvatures(rest, batches, config, train_batches.size(), fallback, cache);
  for (std::size_t n = 0; n < batches.size(); ++n) {
    const bool scoring = batches[n].begin >= score_begin;
    roller.step(rest.subspan(batches[n].begin, batches[n].size()), split.train_end + batches[n].begin, later_curv[n],
                scoring ? &report : nullptr);
  }

  if (report.events.empty()) throw DataError("no evaluable events in the target segment");
  const auto ranks = report.ranks();
  report.mrr = mrr(ranks);
  for (int k : report.ks) report.recall.push_back(recall_at_k(ranks, k));
  return report;
}

void write_summary(std::ostream& out, const RankReport& report) {
  out << "metric,value\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", report.mrr);
  out << "mrr," << buf << '\n';
  for (std::size_t k = 0; k < report.ks.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.6f", report.recall[k]);
    out << "recall@" << report.ks[k] << ',' << buf << '\n';
  }
  out << "events," << report.events.size() << '\n';
  out << "skipped," << report.skipped << '\n';
}

void write_ranks(std::ostream& out, const RankReport& report) {
  out << "index,user,item,timestamp,rank\n";
  char buf[64];
  for (const auto& e : report.events) {
    std::snprintf(buf, sizeof buf, "%.17g", e.t);
    out << e.index << ',' << e.user << ',' << e.item << ',' << buf << ',' << e.rank << '\n';
  }
}

}  // namespace coriem::eval
