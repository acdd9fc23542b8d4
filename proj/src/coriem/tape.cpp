#include "coriem/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "coriem/error.hpp"

namespace coriem::ad {
namespace {

const char* op_name(Op op) {
  static constexpr const char* names[] = {
      "leaf", "add",  "sub",     "mul",      "div",    "affine", "dot",    "sumsq",  "sum",
      "norm", "sqrt", "exp",     "log",      "tanh",   "atanh",  "tan",    "atan",   "cos",
      "sin",  "sigmoid", "softplus", "square", "matvec", "concat", "clamp_min", "clamp_max",
      "ball_project"};
  const auto i = static_cast<std::size_t>(op);
  return i < std::size(names) ? names[i] : "unknown";
}

bool is_unary_elementwise(Op op) {
  switch (op) {
    case Op::Affine:
    case Op::Sqrt:
    case Op::Exp:
    case Op::Log:
    case Op::Tanh:
    case Op::Atanh:
    case Op::Tan:
    case Op::Atan:
    case Op::Cos:
    case Op::Sin:
    case Op::Sigmoid:
    case Op::Softplus:
    case Op::Square:
    case Op::ClampMin:
    case Op::ClampMax:
      return true;
    default:
      return false;
  }
}

bool is_binary_elementwise(Op op) {
  return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_value(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

[[noreturn]] void fail(Op op, const std::string& why) {
  throw UsageError(std::string("tape primitive '") + op_name(op) + "': " + why);
}

}  // namespace

std::size_t Var::size() const { return tape_->size_of(id_); }

double Var::value(std::size_t i) const { return tape_->values_of(id_)[i]; }

std::span<const double> Var::values() const { return tape_->values_of(id_); }

std::vector<double> Var::to_vector() const {
  auto v = values();
  return {v.begin(), v.end()};
}

std::span<const double> Tape::values_of(NodeId id) const {
  const Node& n = nodes_.at(id);
  return {values_.data() + n.offset, n.size};
}

void Tape::clear() {
  nodes_.clear();
  values_.clear();
  inputs_.clear();
  param_nodes_.clear();
}

Var Tape::push_leaf(std::span<const double> values, std::int64_t param) {
  Node n{Op::Leaf, static_cast<std::uint32_t>(values.size()),
         static_cast<std::uint32_t>(values_.size()), static_cast<std::uint32_t>(inputs_.size()),
         0, {}, param};
  const double* base = values_.data();
  if (!values.empty() && values.data() >= base && values.data() < base + values_.size()) {
    const std::vector<double> copy(values.begin(), values.end());
    values_.insert(values_.end(), copy.begin(), copy.end());
  } else {
    values_.insert(values_.end(), values.begin(), values.end());
  }
  nodes_.push_back(n);
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::constant(std::span<const double> values) {
  if (values.empty()) throw UsageError("tape constant must be non-empty");
  return push_leaf(values, -1);
}

Var Tape::constant(double value) { return push_leaf(std::span<const double>(&value, 1), -1); }

Var Tape::param(const ParameterSet& params, std::size_t index) {
  if (index >= params.size()) throw UsageError("tape param: index out of range");
  if (param_nodes_.size() < params.size()) param_nodes_.resize(params.size(), -1);
  if (param_nodes_[index] >= 0) return Var(this, static_cast<NodeId>(param_nodes_[index]));
  Var v = push_leaf(params[index].data, static_cast<std::int64_t>(index));
  param_nodes_[index] = v.id();
  return v;
}

Var Tape::record(Op op, std::span<const Var> inputs, OpAttr attr) {
  if (op == Op::Leaf || static_cast<std::size_t>(op) >= static_cast<std::size_t>(Op::Count_)) {
    fail(op, "unsupported primitive");
  }
  for (const Var& v : inputs) {
    if (v.tape() != this) fail(op, "operand belongs to a different tape");
  }
  auto sz = [&](std::size_t i) { return nodes_[inputs[i].id()].size; };

  std::uint32_t out_size = 0;
  if (is_unary_elementwise(op)) {
    if (inputs.size() != 1) fail(op, "expects one operand");
    out_size = sz(0);
  } else if (is_binary_elementwise(op)) {
    if (inputs.size() != 2) fail(op, "expects two operands");
    const auto a = sz(0), b = sz(1);
    if (a != b && a != 1 && b != 1) fail(op, "operand sizes differ and neither is scalar");
    out_size = std::max(a, b);
  } else {
    switch (op) {
      case Op::Dot:
        if (inputs.size() != 2) fail(op, "expects two operands");
        if (sz(0) != sz(1)) fail(op, "operand sizes differ");
        out_size = 1;
        break;
      case Op::SumSq:
      case Op::Sum:
      case Op::Norm:
        if (inputs.size() != 1) fail(op, "expects one operand");
        out_size = 1;
        break;
      case Op::BallProject:
        if (inputs.size() != 1) fail(op, "expects one operand");
        if (!(attr.c0 > 0.0)) fail(op, "radius must be positive");
        out_size = sz(0);
        break;
      case Op::MatVec: {
        if (inputs.size() != 2) fail(op, "expects matrix and vector");
        const auto rows = attr.aux;
        if (rows == 0 || sz(0) != rows * sz(1)) fail(op, "matrix shape does not match vector");
        out_size = rows;
        break;
      }
      case Op::Concat:
        if (inputs.empty()) fail(op, "expects at least one operand");
        for (std::size_t i = 0; i < inputs.size(); ++i) out_size += sz(i);
        break;
      default:
        fail(op, "unsupported primitive");
    }
  }

  Node n{op,
         out_size,
         static_cast<std::uint32_t>(values_.size()),
         static_cast<std::uint32_t>(inputs_.size()),
         static_cast<std::uint32_t>(inputs.size()),
         attr,
         -1};
  for (const Var& v : inputs) inputs_.push_back(v.id());
  values_.resize(values_.size() + out_size);
  forward(n, values_.data() + n.offset);
  nodes_.push_back(n);
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

void Tape::forward(const Node& n, double* out) const {
  const NodeId* in = inputs_.data() + n.in_begin;
  auto val = [&](std::size_t k) { return values_.data() + nodes_[in[k]].offset; };
  auto size = [&](std::size_t k) { return nodes_[in[k]].size; };
  const double c0 = n.attr.c0;
  const double c1 = n.attr.c1;

  if (is_binary_elementwise(n.op)) {
    const double* a = val(0);
    const double* b = val(1);
    const bool sa = size(0) == 1 && n.size != 1;
    const bool sb = size(1) == 1 && n.size != 1;
    for (std::uint32_t i = 0; i < n.size; ++i) {
      const double x = a[sa ? 0 : i];
      const double y = b[sb ? 0 : i];
      switch (n.op) {
        case Op::Add: out[i] = x + y; break;
        case Op::Sub: out[i] = x - y; break;
        case Op::Mul: out[i] = x * y; break;
        default: out[i] = x / y; break;
      }
    }
    return;
  }

  if (is_unary_elementwise(n.op)) {
    const double* a = val(0);
    for (std::uint32_t i = 0; i < n.size; ++i) {
      const double x = a[i];
      double r = 0.0;
      switch (n.op) {
        case Op::Affine: r = c0 * x + c1; break;
        case Op::Sqrt: r = std::sqrt(x); break;
        case Op::Exp: r = std::exp(x); break;
        case Op::Log: r = std::log(x); break;
        case Op::Tanh: r = std::tanh(x); break;
        case Op::Atanh: r = std::atanh(x); break;
        case Op::Tan: r = std::tan(x); break;
        case Op::Atan: r = std::atan(x); break;
        case Op::Cos: r = std::cos(x); break;
        case Op::Sin: r = std::sin(x); break;
        case Op::Sigmoid: r = sigmoid_value(x); break;
        case Op::Softplus: r = softplus_value(x); break;
        case Op::Square: r = x * x; break;
        case Op::ClampMin: r = std::max(x, c0); break;
        case Op::ClampMax: r = std::min(x, c0); break;
        default: break;
      }
      out[i] = r;
    }
    return;
  }

  switch (n.op) {
    case Op::Dot: {
      const double* a = val(0);
      const double* b = val(1);
      double s = 0.0;
      for (std::uint32_t i = 0; i < size(0); ++i) s += a[i] * b[i];
      out[0] = s;
      break;
    }
    case Op::SumSq:
    case Op::Norm: {
      const double* a = val(0);
      double s = 0.0;
      for (std::uint32_t i = 0; i < size(0); ++i) s += a[i] * a[i];
      out[0] = n.op == Op::Norm ? std::sqrt(s) : s;
      break;
    }
    case Op::Sum: {
      const double* a = val(0);
      double s = 0.0;
      for (std::uint32_t i = 0; i < size(0); ++i) s += a[i];
      out[0] = s;
      break;
    }
    case Op::BallProject: {
      const double* a = val(0);
      double s = 0.0;
      for (std::uint32_t i = 0; i < n.size; ++i) s += a[i] * a[i];
      const double nrm = std::sqrt(s);
      const double f = nrm > c0 ? c0 / nrm : 1.0;
      for (std::uint32_t i = 0; i < n.size; ++i) out[i] = f * a[i];
      break;
    }
    case Op::MatVec: {
      const double* m = val(0);
      const double* x = val(1);
      const std::uint32_t cols = size(1);
      for (std::uint32_t r = 0; r < n.size; ++r) {
        const double* row = m + static_cast<std::size_t>(r) * cols;
        double s = 0.0;
        for (std::uint32_t c = 0; c < cols; ++c) s += row[c] * x[c];
        out[r] = s;
      }
      break;
    }
    case Op::Concat: {
      std::uint32_t pos = 0;
      for (std::uint32_t k = 0; k < n.in_count; ++k) {
        const double* a = val(k);
        std::copy(a, a + size(k), out + pos);
        pos += size(k);
      }
      break;
    }
    default:
      break;
  }
}

void Tape::backprop(const Node& n, const double* g, std::vector<double>& adj) const {
  const NodeId* in = inputs_.data() + n.in_begin;
  auto val = [&](std::size_t k) { return values_.data() + nodes_[in[k]].offset; };
  auto grd = [&](std::size_t k) { return adj.data() + nodes_[in[k]].offset; };
  auto size = [&](std::size_t k) { return nodes_[in[k]].size; };
  const double* out = values_.data() + n.offset;
  const double c0 = n.attr.c0;

  if (is_binary_elementwise(n.op)) {
    const double* a = val(0);
    const double* b = val(1);
    double* ga = grd(0);
    double* gb = grd(1);
    const bool sa = size(0) == 1 && n.size != 1;
    const bool sb = size(1) == 1 && n.size != 1;
    for (std::uint32_t i = 0; i < n.size; ++i) {
      const std::uint32_t ia = sa ? 0 : i;
      const std::uint32_t ib = sb ? 0 : i;
      switch (n.op) {
        case Op::Add:
          ga[ia] += g[i];
          gb[ib] += g[i];
          break;
        case Op::Sub:
          ga[ia] += g[i];
          gb[ib] -= g[i];
          break;
        case Op::Mul:
          ga[ia] += g[i] * b[ib];
          gb[ib] += g[i] * a[ia];
          break;
        default:
          ga[ia] += g[i] / b[ib];
          gb[ib] -= g[i] * out[i] / b[ib];
          break;
      }
    }
    return;
  }

  if (is_unary_elementwise(n.op)) {
    const double* a = val(0);
    double* ga = grd(0);
    for (std::uint32_t i = 0; i < n.size; ++i) {
      const double x = a[i];
      const double y = out[i];
      double d = 0.0;
      switch (n.op) {
        case Op::Affine: d = c0; break;
        case Op::Sqrt: d = y > 0.0 ? 0.5 / y : 0.0; break;
        case Op::Exp: d = y; break;
        case Op::Log: d = 1.0 / x; break;
        case Op::Tanh: d = 1.0 - y * y; break;
        case Op::Atanh: d = 1.0 / (1.0 - x * x); break;
        case Op::Tan: d = 1.0 + y * y; break;
        case Op::Atan: d = 1.0 / (1.0 + x * x); break;
        case Op::Cos: d = -std::sin(x); break;
        case Op::Sin: d = std::cos(x); break;
        case Op::Sigmoid: d = y * (1.0 - y); break;
        case Op::Softplus: d = sigmoid_value(x); break;
        case Op::Square: d = 2.0 * x; break;
        case Op::ClampMin: d = x >= c0 ? 1.0 : 0.0; break;
        case Op::ClampMax: d = x <= c0 ? 1.0 : 0.0; break;
        default: break;
      }
      ga[i] += g[i] * d;
    }
    return;
  }

  switch (n.op) {
    case Op::Dot: {
      const double* a = val(0);
      const double* b = val(1);
      double* ga = grd(0);
      double* gb = grd(1);
      for (std::uint32_t i = 0; i < size(0); ++i) {
        ga[i] += g[0] * b[i];
        gb[i] += g[0] * a[i];
      }
      break;
    }
    case Op::SumSq: {
      const double* a = val(0);
      double* ga = grd(0);
      for (std::uint32_t i = 0; i < size(0); ++i) ga[i] += 2.0 * g[0] * a[i];
      break;
    }
    case Op::Sum: {
      double* ga = grd(0);
      for (std::uint32_t i = 0; i < size(0); ++i) ga[i] += g[0];
      break;
    }
    case Op::Norm: {
      if (out[0] > 0.0) {
        const double* a = val(0);
        double* ga = grd(0);
        for (std::uint32_t i = 0; i < size(0); ++i) ga[i] += g[0] * a[i] / out[0];
      }
      break;
    }
    case Op::BallProject: {
      const double* a = val(0);
      double* ga = grd(0);
      double s = 0.0;
      for (std::uint32_t i = 0; i < n.size; ++i) s += a[i] * a[i];
      const double nrm = std::sqrt(s);
      if (nrm <= c0) {
        for (std::uint32_t i = 0; i < n.size; ++i) ga[i] += g[i];
      } else {
        double ug = 0.0;
        for (std::uint32_t i = 0; i < n.size; ++i) ug += a[i] * g[i];
        ug /= nrm;
        const double f = c0 / nrm;
        for (std::uint32_t i = 0; i < n.size; ++i) ga[i] += f * (g[i] - a[i] / nrm * ug);
      }
      break;
    }
    case Op::MatVec: {
      const double* m = val(0);
      const double* x = val(1);
      double* gm = grd(0);
      double* gx = grd(1);
      const std::uint32_t cols = size(1);
      for (std::uint32_t r = 0; r < n.size; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        const std::size_t base = static_cast<std::size_t>(r) * cols;
        for (std::uint32_t c = 0; c < cols; ++c) {
          gm[base + c] += gr * x[c];
          gx[c] += gr * m[base + c];
        }
      }
      break;
    }
    case Op::Concat: {
      std::uint32_t pos = 0;
      for (std::uint32_t k = 0; k < n.in_count; ++k) {
        double* ga = grd(k);
        for (std::uint32_t i = 0; i < size(k); ++i) ga[i] += g[pos + i];
        pos += size(k);
      }
      break;
    }
    default:
      break;
  }
}

std::vector<double> Tape::adjoints(Var loss) const {
  if (loss.tape() != this) throw UsageError("backward: loss belongs to a different tape");
  if (nodes_.at(loss.id()).size != 1) {
    throw UsageError("backward: loss must be a scalar node");
  }
  std::vector<double> adj(values_.size(), 0.0);
  adj[nodes_[loss.id()].offset] = 1.0;
  for (NodeId id = loss.id() + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (n.op == Op::Leaf) continue;
    const double* g = adj.data() + n.offset;
    bool any = false;
    for (std::uint32_t i = 0; i < n.size && !any; ++i) any = g[i] != 0.0;
    if (any) backprop(n, g, adj);
  }
  return adj;
}

GradientMap Tape::backward(Var loss, const ParameterSet& params) const {
  const std::vector<double> adj = adjoints(loss);
  GradientMap out = GradientMap::zeros_like(params);
  for (std::size_t p = 0; p < param_nodes_.size() && p < params.size(); ++p) {
    if (param_nodes_[p] < 0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(param_nodes_[p])];
    if (n.size != params[p].size()) throw DimensionMismatch("backward: parameter resized");
    std::copy(adj.begin() + n.offset, adj.begin() + n.offset + n.size, out[p].begin());
  }
  return out;
}

// Wrappers.
namespace {
Var rec(Op op, std::initializer_list<Var> in, OpAttr attr = {}) {
  const Var& first = *in.begin();
  if (!first.valid()) throw UsageError("tape primitive applied to an empty Var");
  return first.tape()->record(op, std::span<const Var>(in.begin(), in.size()), attr);
}
}  // namespace

Var add(Var a, Var b) { return rec(Op::Add, {a, b}); }
Var sub(Var a, Var b) { return rec(Op::Sub, {a, b}); }
Var mul(Var a, Var b) { return rec(Op::Mul, {a, b}); }
Var div(Var a, Var b) { return rec(Op::Div, {a, b}); }
Var affine(Var x, double scale, double shift) { return rec(Op::Affine, {x}, {scale, shift, 0}); }
Var dot(Var a, Var b) { return rec(Op::Dot, {a, b}); }
Var sumsq(Var a) { return rec(Op::SumSq, {a}); }
Var sum(Var a) { return rec(Op::Sum, {a}); }
Var norm(Var a) { return rec(Op::Norm, {a}); }
Var sqrt(Var a) { return rec(Op::Sqrt, {a}); }
Var exp(Var a) { return rec(Op::Exp, {a}); }
Var log(Var a) { return rec(Op::Log, {a}); }
Var tanh(Var a) { return rec(Op::Tanh, {a}); }
Var atanh(Var a) { return rec(Op::Atanh, {a}); }
Var tan(Var a) { return rec(Op::Tan, {a}); }
Var atan(Var a) { return rec(Op::Atan, {a}); }
Var cos(Var a) { return rec(Op::Cos, {a}); }
Var sin(Var a) { return rec(Op::Sin, {a}); }
Var sigmoid(Var a) { return rec(Op::Sigmoid, {a}); }
Var softplus(Var a) { return rec(Op::Softplus, {a}); }
Var square(Var a) { return rec(Op::Square, {a}); }
Var matvec(Var m, Var x, std::uint32_t rows) { return rec(Op::MatVec, {m, x}, {0.0, 0.0, rows}); }
Var clamp_min(Var a, double lo) { return rec(Op::ClampMin, {a}, {lo, 0.0, 0}); }
Var clamp_max(Var a, double hi) { return rec(Op::ClampMax, {a}, {hi, 0.0, 0}); }
Var ball_project(Var a, double max_norm) { return rec(Op::BallProject, {a}, {max_norm, 0.0, 0}); }

Var concat(std::span<const Var> parts) {
  if (parts.empty() || !parts.front().valid()) throw UsageError("concat: no operands");
  return parts.front().tape()->record(Op::Concat, parts);
}

GradCheckReport grad_check(const LossFn& f, const ParameterSet& params, GradCheckOptions options) {
  GradCheckReport report;
  GradientMap analytic;
  {
    Tape tape;
    Var loss = f(tape, params);
    analytic = tape.backward(loss, params);
  }
  auto eval = [&](const ParameterSet& p) {
    Tape tape;
    return f(tape, p).value();
  };

  ParameterSet work = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const std::size_t n = params[p].size();
    std::vector<std::size_t> coords;
    if (options.max_coords_per_tensor == 0 || n <= options.max_coords_per_tensor) {
      for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      // Evenly strided subset, always including the first and last entries.
      const std::size_t k = options.max_coords_per_tensor;
      for (std::size_t j = 0; j < k; ++j) coords.push_back(j * (n - 1) / (k - 1 == 0 ? 1 : k - 1));
    }
    for (std::size_t i : coords) {
      const double orig = work[p].data[i];
      work[p].data[i] = orig + options.step;
      const double up = eval(work);
      work[p].data[i] = orig - options.step;
      const double down = eval(work);
      work[p].data[i] = orig;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      report.entries.push_back({p, i, a, numeric, rel});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      if (!(rel < options.tol)) report.passed = false;
    }
  }
  return report;
}

}  // namespace coriem::ad
