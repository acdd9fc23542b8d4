#include "coriem/model.hpp"

#include <cmath>

#include "coriem/error.hpp"
#include "coriem/tape_manifold.hpp"

namespace coriem::model {
namespace {

using ad::Var;

std::vector<double> xavier(std::mt19937_64& rng, int rows, int cols) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  std::vector<double> out(static_cast<std::size_t>(rows) * cols);
  for (auto& x : out) x = u(rng);
  return out;
}

std::vector<double> normal(std::mt19937_64& rng, std::size_t n, double sd) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

std::vector<double> identity(int n) {
  std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i) * n + i] = 1.0;
  return out;
}

Var activate(Var x, Activation a) { return a == Activation::Tanh ? ad::tanh(x) : x; }

double activate(double x, Activation a) { return a == Activation::Tanh ? std::tanh(x) : x; }

struct TensorSpec {
  std::string name;
  int rows;
  int cols;
};

std::vector<TensorSpec> layout(const ModelShape& s) {
  const int d = s.dim;
  const int r = s.ricci_width;
  std::vector<TensorSpec> t;
  for (int k = 1; k <= 6; ++k) t.push_back({"M" + std::to_string(k), d, d});
  t.push_back({"W7", d, s.interaction_input()});
  t.push_back({"W_fuse", d, d});
  t.push_back({"b_fuse", d, 1});
  t.push_back({"omega", s.frequencies(), 1});
  t.push_back({"theta", s.frequencies(), 1});
  for (const char* side : {"u", "i"}) {
    const std::string p = std::string("curv_") + side + "_";
    t.push_back({p + "w1", r, r});
    t.push_back({p + "b1", r, 1});
    t.push_back({p + "w2", r, r});
    t.push_back({p + "b2", r, 1});
    t.push_back({p + "w8", r, r});
  }
  return t;
}

}  // namespace

Network::Network(ModelShape shape) : shape_(shape) {
  if (shape_.dim < 1) throw UsageError("model dim must be at least 1");
  if (shape_.feature_dim < 0) throw UsageError("feature width must be non-negative");
  if (shape_.ricci_width < 1) throw UsageError("ricci width must be at least 1");
  if (shape_.layers < 1) throw UsageError("layer count must be at least 1");
  if (shape_.encoder == EncoderMode::Fourier && shape_.dim % 2 != 0) {
    throw UsageError("the fourier encoder needs an even dim");
  }
  // Indices follow layout() order.
  std::size_t i = 0;
  for (auto& m : m_) m = i++;
  w7_ = i++;
  w_fuse_ = i++;
  b_fuse_ = i++;
  omega_ = i++;
  theta_ = i++;
  curv_u_ = {i, i + 1, i + 2, i + 3, i + 4};
  i += 5;
  curv_i_ = {i, i + 1, i + 2, i + 3, i + 4};
}

ad::ParameterSet Network::init_params(std::uint64_t seed) const {
  std::mt19937_64 rng(seed ^ 0x243f6a8885a308d3ULL);
  const int d = shape_.dim;
  const int r = shape_.ricci_width;
  const int f = shape_.frequencies();
  ad::ParameterSet p;
  for (const auto& t : layout(shape_)) {
    std::vector<double> init;
    if (t.name == "M1" || t.name == "M4") {
      init = identity(d);
      for (auto& x : init) x *= 0.5;
    } else if (t.name[0] == 'M') {
      const double var = (t.name == "M2" || t.name == "M5") ? 0.01 : 0.04;
      init = normal(rng, static_cast<std::size_t>(d) * d, std::sqrt(var / d));
    } else if (t.name == "W7" || t.name == "W_fuse") {
      init = xavier(rng, t.rows, t.cols);
    } else if (t.name == "omega") {
      for (int k = 0; k < f; ++k) init.push_back(std::pow(10.0, f == 1 ? 0.0 : -9.0 * k / (f - 1)));
    } else if (t.name.starts_with("curv_") && t.cols == r) {
      init = xavier(rng, t.rows, t.cols);
    } else {
      init.assign(static_cast<std::size_t>(t.rows) * t.cols, 0.0);
    }
    p.add(t.name, t.rows, t.cols, std::move(init));
  }
  return p;
}

void Network::check(const ad::ParameterSet& params) const {
  const auto specs = layout(shape_);
  if (params.size() != specs.size()) {
    throw DataError("parameter set has " + std::to_string(params.size()) + " tensors; expected " +
                    std::to_string(specs.size()));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& t = params[i];
    if (t.name != specs[i].name || t.rows != specs[i].rows || t.cols != specs[i].cols) {
      throw DataError("parameter '" + t.name + "' (" + std::to_string(t.rows) + "x" + std::to_string(t.cols) +
                      ") does not match expected '" + specs[i].name + "' (" + std::to_string(specs[i].rows) +
                      "x" + std::to_string(specs[i].cols) + ")");
    }
  }
}

Var Network::time_encode(ad::Tape& tape, const ad::ParameterSet& p, double t) const {
  Var z = tape.param(p, omega_) * t + tape.param(p, theta_);
  if (shape_.encoder == EncoderMode::Cosine) {
    return ad::cos(z) * std::sqrt(1.0 / shape_.dim);
  }
  const Var parts[] = {ad::cos(z), ad::sin(z)};
  return ad::concat(parts) * std::sqrt(2.0 / shape_.dim);
}

std::vector<double> Network::time_encode_value(const ad::ParameterSet& p, double t) const {
  const auto& w = p[omega_].data;
  const auto& th = p[theta_].data;
  const std::size_t f = w.size();
  std::vector<double> out;
  if (shape_.encoder == EncoderMode::Cosine) {
    const double s = std::sqrt(1.0 / shape_.dim);
    for (std::size_t k = 0; k < f; ++k) out.push_back(std::cos(w[k] * t + th[k]) * s);
  } else {
    const double s = std::sqrt(2.0 / shape_.dim);
    for (std::size_t k = 0; k < f; ++k) out.push_back(std::cos(w[k] * t + th[k]) * s);
    for (std::size_t k = 0; k < f; ++k) out.push_back(std::sin(w[k] * t + th[k]) * s);
  }
  return out;
}

Var Network::integrate(ad::Tape& tape, const ad::ParameterSet& p, const data::InteractionEvent& e) const {
  if (static_cast<int>(e.features.size()) != shape_.feature_dim) {
    throw DimensionMismatch("event has " + std::to_string(e.features.size()) + " features; model expects " +
                            std::to_string(shape_.feature_dim));
  }
  Var phi = time_encode(tape, p, e.t);
  Var input = phi;
  if (shape_.feature_dim > 0) {
    const Var parts[] = {tape.constant(e.features), phi};
    input = ad::concat(parts);
  }
  return activate(ad::matvec(tape.param(p, w7_), input, shape_.dim), shape_.interaction_activation);
}

Var Network::fusion_mlp(ad::Tape& tape, const ad::ParameterSet& p, Var e) const {
  return ad::tanh(ad::matvec(tape.param(p, w_fuse_), e, shape_.dim) + tape.param(p, b_fuse_));
}

Var Network::aggregate_interactions(ad::Tape& tape, const ad::ParameterSet& p, std::span<const Var> events) const {
  if (events.empty()) return tape.constant(std::vector<double>(shape_.dim, 0.0));
  const double inv = 1.0 / static_cast<double>(events.size());
  if (shape_.fusion == FusionMode::Early) {
    Var acc = events[0];
    for (std::size_t k = 1; k < events.size(); ++k) acc = acc + events[k];
    return fusion_mlp(tape, p, acc * inv);
  }
  Var acc = fusion_mlp(tape, p, events[0]);
  for (std::size_t k = 1; k < events.size(); ++k) acc = acc + fusion_mlp(tape, p, events[k]);
  return acc * inv;
}

Var Network::estimate_curvature(ad::Tape& tape, const ad::ParameterSet& p, Side side,
                                std::span<const double> ricci) const {
  if (static_cast<int>(ricci.size()) != shape_.ricci_width) {
    throw DimensionMismatch("ricci vector has width " + std::to_string(ricci.size()) + "; expected " +
                            std::to_string(shape_.ricci_width));
  }
  const auto& c = curvnn(side);
  const auto rows = static_cast<std::uint32_t>(shape_.ricci_width);
  const Activation a = shape_.curvnn_activation;
  Var h = activate(ad::matvec(tape.param(p, c.w1), tape.constant(ricci), rows) + tape.param(p, c.b1), a);
  h = activate(ad::matvec(tape.param(p, c.w2), h, rows) + tape.param(p, c.b2), a);
  return ad::dot(h, ad::matvec(tape.param(p, c.w8), h, rows));
}

double Network::estimate_curvature_value(const ad::ParameterSet& p, Side side, std::span<const double> ricci) const {
  if (static_cast<int>(ricci.size()) != shape_.ricci_width) {
    throw DimensionMismatch("ricci vector has width " + std::to_string(ricci.size()) + "; expected " +
                            std::to_string(shape_.ricci_width));
  }
  const auto& c = curvnn(side);
  const int r = shape_.ricci_width;
  auto layer = [&](std::size_t w, std::size_t b, const std::vector<double>& x) {
    std::vector<double> y(r);
    for (int i = 0; i < r; ++i) {
      double acc = 0.0;
      for (int j = 0; j < r; ++j) acc += p[w].data[static_cast<std::size_t>(i) * r + j] * x[j];
      y[i] = activate(acc + p[b].data[i], shape_.curvnn_activation);
    }
    return y;
  };
  const auto h = layer(c.w2, c.b2, layer(c.w1, c.b1, std::vector<double>(ricci.begin(), ricci.end())));
  double k = 0.0;
  for (int i = 0; i < r; ++i) {
    double row = 0.0;
    for (int j = 0; j < r; ++j) row += p[c.w8].data[static_cast<std::size_t>(i) * r + j] * h[j];
    k += h[i] * row;
  }
  return k;
}

geo::ManifoldPoint EmbeddingTable::user_point(std::size_t j) const {
  const auto s = user(j);
  return {Eigen::Map<const geo::Vector>(s.data(), dim), kappa_u};
}

geo::ManifoldPoint EmbeddingTable::item_point(std::size_t k) const {
  const auto s = item(k);
  return {Eigen::Map<const geo::Vector>(s.data(), dim), kappa_i};
}

EmbeddingTable init_table(std::uint32_t n_users, std::uint32_t n_items, int dim, double kappa, std::uint64_t seed) {
  if (dim < 1) throw UsageError("embedding dim must be at least 1");
  EmbeddingTable t;
  t.dim = dim;
  t.kappa_u = geo::Curvature(kappa);
  t.kappa_i = geo::Curvature(kappa);
  t.user_time.assign(n_users, NAN);
  t.item_time.assign(n_items, NAN);
  std::mt19937_64 rng(seed ^ 0x13198a2e03707344ULL);
  std::normal_distribution<double> nd(0.0, 0.5 / std::sqrt(static_cast<double>(dim)));
  auto fill = [&](std::vector<double>& dst, std::size_t n) {
    dst.resize(n * dim);
    for (std::size_t e = 0; e < n; ++e) {
      geo::Vector v(dim);
      for (int c = 0; c < dim; ++c) v[c] = nd(rng);
      const auto x = geo::exp0(v, geo::Curvature(kappa));
      std::copy(x.coords.data(), x.coords.data() + dim, dst.begin() + static_cast<std::ptrdiff_t>(e * dim));
    }
  };
  fill(t.users, n_users);
  fill(t.items, n_items);
  return t;
}

EmbeddingTable advance_interval(const EmbeddingTable& table, geo::Curvature kappa_u, geo::Curvature kappa_i) {
  EmbeddingTable out = table;
  out.kappa_u = kappa_u;
  out.kappa_i = kappa_i;
  auto move = [&](std::vector<double>& dst, std::size_t n, geo::Curvature from, geo::Curvature to) {
    if (from == to) return;
    for (std::size_t e = 0; e < n; ++e) {
      double* row = dst.data() + e * table.dim;
      const geo::ManifoldPoint x{Eigen::Map<const geo::Vector>(row, table.dim), from};
      const auto y = geo::map_between(x, to);
      std::copy(y.coords.data(), y.coords.data() + table.dim, row);
    }
  };
  move(out.users, table.n_users(), table.kappa_u, kappa_u);
  move(out.items, table.n_items(), table.kappa_i, kappa_i);
  return out;
}

IntervalForward forward_interval(ad::Tape& tape, const ad::ParameterSet& p, const Network& net,
                                 std::span<const data::InteractionEvent> batch, const EmbeddingTable& hidden,
                                 DropoutSpec dropout) {
  const ModelShape& s = net.shape();
  if (hidden.dim != s.dim) {
    throw DimensionMismatch("embedding dim " + std::to_string(hidden.dim) + " differs from model dim " +
                            std::to_string(s.dim));
  }
  const geo::Curvature ku = hidden.kappa_u;
  const geo::Curvature ki = hidden.kappa_i;
  IntervalForward out;

  std::vector<int> upos(hidden.n_users(), -1);
  std::vector<int> ipos(hidden.n_items(), -1);
  for (const auto& e : batch) {
    if (e.user >= hidden.n_users() || e.item >= hidden.n_items()) {
      throw DataError("event references an entity outside the embedding table");
    }
    upos[e.user] = 0;
    ipos[e.item] = 0;
  }
  for (std::uint32_t j = 0; j < upos.size(); ++j) {
    if (upos[j] == 0) {
      upos[j] = static_cast<int>(out.active_users.size());
      out.active_users.push_back(j);
    }
  }
  for (std::uint32_t k = 0; k < ipos.size(); ++k) {
    if (ipos[k] == 0) {
      ipos[k] = static_cast<int>(out.active_items.size());
      out.active_items.push_back(k);
    }
  }
  const std::size_t nu = out.active_users.size();
  const std::size_t ni = out.active_items.size();
  out.user_links.resize(nu);
  out.item_links.resize(ni);
  out.user_last_time.assign(nu, 0.0);
  out.item_last_time.assign(ni, 0.0);
  std::vector<std::vector<Var>> user_events(nu);
  std::vector<std::vector<Var>> item_events(ni);
  for (const auto& e : batch) {
    const Var ek = net.integrate(tape, p, e);
    const auto a = static_cast<std::size_t>(upos[e.user]);
    const auto b = static_cast<std::size_t>(ipos[e.item]);
    user_events[a].push_back(ek);
    item_events[b].push_back(ek);
    out.user_links[a].push_back(static_cast<std::uint32_t>(b));
    out.item_links[b].push_back(static_cast<std::uint32_t>(a));
    out.user_last_time[a] = e.t;
    out.item_last_time[b] = e.t;
  }

  auto interaction_branch = [&](const std::vector<Var>& events, std::size_t m_index, geo::Curvature k) {
    Var pooled = net.aggregate_interactions(tape, p, events);
    if (dropout.rng != nullptr && dropout.rate > 0.0) {
      std::bernoulli_distribution keep(1.0 - dropout.rate);
      std::vector<double> mask(static_cast<std::size_t>(s.dim));
      for (auto& m : mask) m = keep(*dropout.rng) ? 1.0 / (1.0 - dropout.rate) : 0.0;
      pooled = pooled * tape.constant(mask);
    }
    return ad::mobius_matvec(tape.param(p, net.m(m_index)), s.dim, ad::exp0(pooled, k), k);
  };
  std::vector<Var> user_inter(nu);
  std::vector<Var> item_inter(ni);
  for (std::size_t a = 0; a < nu; ++a) user_inter[a] = interaction_branch(user_events[a], 2, ku);
  for (std::size_t b = 0; b < ni; ++b) item_inter[b] = interaction_branch(item_events[b], 5, ki);

  std::vector<Var> hu(nu);
  std::vector<Var> hi(ni);
  for (std::size_t a = 0; a < nu; ++a) hu[a] = tape.constant(hidden.user(out.active_users[a]));
  for (std::size_t b = 0; b < ni; ++b) hi[b] = tape.constant(hidden.item(out.active_items[b]));

  auto counterpart = [&](const std::vector<std::uint32_t>& links, const std::vector<Var>& pool,
                         geo::Curvature from, geo::Curvature to, std::size_t m_index) {
    std::vector<Var> pts;
    pts.reserve(links.size());
    for (auto l : links) pts.push_back(pool[l]);
    Var mid = ad::gyromidpoint(pts, {}, from);
    return ad::mobius_matvec(tape.param(p, net.m(m_index)), s.dim, ad::map_between(mid, from, to), to);
  };

  for (int layer = 0; layer < s.layers; ++layer) {
    std::vector<Var> next_u(nu);
    std::vector<Var> next_i(ni);
    for (std::size_t a = 0; a < nu; ++a) {
      Var own = ad::mobius_matvec(tape.param(p, net.m(1)), s.dim, hu[a], ku);
      Var left = ad::mobius_add(own, user_inter[a], ku);
      next_u[a] = ad::mobius_add(left, counterpart(out.user_links[a], hi, ki, ku, 3), ku);
    }
    for (std::size_t b = 0; b < ni; ++b) {
      Var own = ad::mobius_matvec(tape.param(p, net.m(4)), s.dim, hi[b], ki);
      Var left = ad::mobius_add(own, item_inter[b], ki);
      next_i[b] = ad::mobius_add(left, counterpart(out.item_links[b], hu, ku, ki, 6), ki);
    }
    hu = std::move(next_u);
    hi = std::move(next_i);
  }
  out.user_out = std::move(hu);
  out.item_out = std::move(hi);
  return out;
}

void commit(const IntervalForward& fwd, EmbeddingTable& table) {
  for (std::size_t a = 0; a < fwd.active_users.size(); ++a) {
    const auto v = fwd.user_out[a].values();
    std::copy(v.begin(), v.end(), table.user(fwd.active_users[a]).begin());
    table.user_time[fwd.active_users[a]] = fwd.user_last_time[a];
  }
  for (std::size_t b = 0; b < fwd.active_items.size(); ++b) {
    const auto v = fwd.item_out[b].values();
    std::copy(v.begin(), v.end(), table.item(fwd.active_items[b]).begin());
    table.item_time[fwd.active_items[b]] = fwd.item_last_time[b];
  }
}

std::vector<double> predict_scores(const Network& net, const ad::ParameterSet& p, const EmbeddingTable& table,
                                   std::uint32_t u, double t) {
  if (u >= table.n_users()) throw UsageError("predict_scores: user id out of range");
  const auto phi = net.time_encode_value(p, t);
  double kernel = 0.0;
  for (double x : phi) kernel += x * x;
  const auto image = geo::map_between(table.user_point(u), table.kappa_i);
  std::vector<double> scores(table.n_items());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double d = geo::distance(image, table.item_point(k));
    scores[k] = kernel / (1.0 + std::exp(d));
  }
  return scores;
}

}  // namespace coriem::model
