#include "coriem/contrast.hpp"

#include <cmath>

#include "coriem/error.hpp"
#include "coriem/tape_manifold.hpp"

namespace coriem::contrast {
namespace {

using ad::Var;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_eta(double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw UsageError("eta must be a finite non-negative number");
}

}  // namespace

double similarity(const geo::ManifoldPoint& x, const geo::ManifoldPoint& y, std::span<const double> tx,
                  std::span<const double> ty) {
  if (!(x.kappa == y.kappa)) throw CurvatureMismatch("similarity of points at different curvatures");
  if (tx.size() != ty.size()) throw DimensionMismatch("time encodings differ in width");
  double k = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) k += tx[i] * ty[i];
  return k / (1.0 + std::exp(geo::distance(x, y)));
}

std::vector<double> reweigh(std::span<const double> sims, double eta, Sign sign) {
  check_eta(eta);
  if (sims.empty()) throw UsageError("reweigh needs at least one similarity");
  const double s = sign == Sign::Positive ? -eta : eta;
  std::vector<double> w(sims.size());
  double z = 0.0;
  for (std::size_t k = 0; k < sims.size(); ++k) z += w[k] = std::exp(s * sims[k]);
  z /= static_cast<double>(sims.size());
  for (auto& x : w) x /= z;
  return w;
}

Var reweigh(Var sims, double eta, Sign sign) {
  check_eta(eta);
  const auto n = sims.values().size();
  if (n == 0) throw UsageError("reweigh needs at least one similarity");
  const Var e = ad::exp(sims * (sign == Sign::Positive ? -eta : eta));
  return e / (ad::sum(e) * (1.0 / static_cast<double>(n)));
}

double reweighed_loss(std::span<const double> pos, std::span<const double> neg, double eta) {
  double loss = 0.0;
  if (!pos.empty()) {
    const auto w = reweigh(pos, eta, Sign::Positive);
    for (std::size_t k = 0; k < pos.size(); ++k) loss += w[k] * softplus(-pos[k]);
  }
  if (!neg.empty()) {
    const auto w = reweigh(neg, eta, Sign::Negative);
    for (std::size_t k = 0; k < neg.size(); ++k) loss += w[k] * softplus(neg[k]);
  }
  return loss;
}

Var reweighed_loss(ad::Tape& tape, std::span<const Var> pos, std::span<const Var> neg, double eta) {
  Var loss = tape.constant(0.0);
  if (!pos.empty()) {
    const Var s = ad::concat(pos);
    loss = loss + ad::sum(reweigh(s, eta, Sign::Positive) * ad::softplus(-s));
  }
  if (!neg.empty()) {
    const Var s = ad::concat(neg);
    loss = loss + ad::sum(reweigh(s, eta, Sign::Negative) * ad::softplus(s));
  }
  return loss;
}

double info_nce(std::span<const double> pos, std::span<const double> neg) {
  double acc = 0.0;
  for (double s : pos) acc += std::log(1.0 / (1.0 + std::exp(-s)));
  for (double s : neg) acc += std::log(1.0 / (1.0 + std::exp(s)));
  return -acc;
}

ViewPair make_views(ad::Tape& tape, const ad::ParameterSet& p, const model::Network& net,
                    const model::IntervalForward& fwd, const model::EmbeddingTable& previous, double t_start,
                    bool warm_up, const KernelOptions& kernel) {
  auto side = [&](const std::vector<std::uint32_t>& ids, const std::vector<Var>& out,
                  const std::vector<double>& last, bool users) {
    ViewSide v;
    v.kappa = users ? previous.kappa_u : previous.kappa_i;
    v.alpha = out;
    v.alpha_time = last;
    for (std::size_t a = 0; a < ids.size(); ++a) {
      if (warm_up) {
        v.beta.push_back(tape.constant(out[a].values()));
        v.beta_time.push_back(last[a]);
      } else {
        v.beta.push_back(tape.constant(users ? previous.user(ids[a]) : previous.item(ids[a])));
        const double t = users ? previous.user_time[ids[a]] : previous.item_time[ids[a]];
        v.beta_time.push_back(std::isnan(t) ? t_start : t);
      }
    }
    if (kernel.learned) {
      for (double t : v.alpha_time) v.alpha_code.push_back(net.time_encode(tape, p, t));
      for (double t : v.beta_time) v.beta_code.push_back(net.time_encode(tape, p, t));
    }
    return v;
  };
  return {side(fwd.active_users, fwd.user_out, fwd.user_last_time, true),
          side(fwd.active_items, fwd.item_out, fwd.item_last_time, false)};
}

std::vector<std::vector<std::uint32_t>> sample_negatives(std::size_t n, int count, std::mt19937_64& rng) {
  std::vector<std::vector<std::uint32_t>> out(n);
  if (n < 2 || count <= 0) return out;
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 2));
  for (std::size_t a = 0; a < n; ++a) {
    for (int k = 0; k < count; ++k) {
      const std::uint32_t j = pick(rng);
      out[a].push_back(j >= a ? j + 1 : j);
    }
  }
  return out;
}

Var co_contrast_loss(ad::Tape& tape, const ViewSide& own, const ViewSide& other,
                     const std::vector<std::vector<std::uint32_t>>& links,
                     const std::vector<std::vector<std::uint32_t>>& negatives, bool alpha_anchor,
                     const ContrastOptions& options) {
  const std::size_t n = own.alpha.size();
  if (n == 0) return tape.constant(0.0);
  const auto& anchors = alpha_anchor ? own.alpha : own.beta;
  const auto& anchor_time = alpha_anchor ? own.alpha_time : own.beta_time;
  const auto& anchor_code = alpha_anchor ? own.alpha_code : own.beta_code;
  const auto& samples = alpha_anchor ? own.beta : own.alpha;
  const auto& sample_time = alpha_anchor ? own.beta_time : own.alpha_time;
  const auto& sample_code = alpha_anchor ? own.beta_code : own.alpha_code;
  const auto& cp = alpha_anchor ? other.beta : other.alpha;
  const auto& cp_time = alpha_anchor ? other.beta_time : other.alpha_time;
  const auto& cp_code = alpha_anchor ? other.beta_code : other.alpha_code;

  std::vector<Var> images(cp.size());
  auto image = [&](std::uint32_t l) {
    if (!images[l].valid()) images[l] = ad::map_between(cp[l], other.kappa, own.kappa);
    return images[l];
  };
  auto sim = [&](std::size_t a, Var y, double ty, const Var* code) {
    Var k = options.kernel.learned ? ad::dot(anchor_code[a], *code)
                                   : tape.constant(std::exp(-std::abs(anchor_time[a] - ty) / options.kernel.tau));
    return k * ad::sigmoid(-ad::distance(anchors[a], y, own.kappa));
  };

  Var total = tape.constant(0.0);
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<Var> pos{sim(a, samples[a], sample_time[a], options.kernel.learned ? &sample_code[a] : nullptr)};
    if (options.co_contrast) {
      for (auto l : links[a]) {
        pos.push_back(sim(a, image(l), cp_time[l], options.kernel.learned ? &cp_code[l] : nullptr));
      }
    }
    std::vector<Var> neg;
    for (auto j : negatives[a]) {
      neg.push_back(sim(a, samples[j], sample_time[j], options.kernel.learned ? &sample_code[j] : nullptr));
    }
    total = total + reweighed_loss(tape, pos, neg, options.eta);
  }
  return total * (1.0 / static_cast<double>(n));
}

LossParts overall_loss(Var ju_ab, Var ju_ba, Var ji_ab, Var ji_ba, Var jc, double w1, double w2) {
  LossParts parts;
  parts.user = ju_ab + ju_ba;
  parts.item = ji_ab + ji_ba;
  parts.curv = jc;
  parts.total = parts.user + parts.item * w1 + jc * w2;
  return parts;
}

double mean_event_gap(std::span<const data::InteractionEvent> events) {
  if (events.size() < 2) return 1.0;
  const double gap = (events.back().t - events.front().t) / static_cast<double>(events.size() - 1);
  return gap > 0.0 ? gap : 1.0;
}

}  // namespace coriem::contrast
