#pragma once

// Reverse-accumulation tape over vector-valued nodes.
//
// Every node holds a flat double vector; scalars are size-1 vectors. Binary
// elementwise primitives broadcast a size-1 operand against a vector. Nodes
// are appended in evaluation order, so the tape is topologically sorted by
// construction and backward() is a single reverse sweep.
//
// Spans returned by Var::values() are invalidated by the next record on the
// same tape.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "coriem/params.hpp"

namespace coriem::ad {

using NodeId = std::uint32_t;

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Affine,  // c0 * x + c1
  Dot,
  SumSq,
  Sum,
  Norm,  // subgradient 0 at the origin
  Sqrt,
  Exp,
  Log,
  Tanh,
  Atanh,
  Tan,
  Atan,
  Cos,
  Sin,
  Sigmoid,
  Softplus,
  Square,
  MatVec,  // aux = rows; matrix operand row-major
  Concat,  // variadic
  ClampMin,
  ClampMax,
  BallProject,  // rescale to norm c0 when longer
  Count_,
};

struct OpAttr {
  double c0 = 0.0;
  double c1 = 0.0;
  std::uint32_t aux = 0;
};

class Tape;

/// Handle to a tape node.
class Var {
 public:
  Var() = default;

  NodeId id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  std::size_t size() const;
  double value(std::size_t i = 0) const;
  std::span<const double> values() const;
  std::vector<double> to_vector() const;

 private:
  friend class Tape;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(std::span<const double> values);
  Var constant(double value);
  /// Leaf bound to parameter `index`; repeated calls return the same node.
  Var param(const ParameterSet& params, std::size_t index);

  /// Appends a primitive. Throws UsageError for Op::Leaf, unknown ops, wrong
  /// arity, or incompatible operand sizes.
  Var record(Op op, std::span<const Var> inputs, OpAttr attr = {});

  /// Reverse sweep from a scalar node. Throws UsageError for non-scalar loss.
  GradientMap backward(Var loss, const ParameterSet& params) const;
  /// Per-node adjoints of the last sweep layout (same indexing as values).
  std::vector<double> adjoints(Var loss) const;

  std::size_t node_count() const noexcept { return nodes_.size(); }
  void clear();

  std::size_t size_of(NodeId id) const { return nodes_.at(id).size; }
  std::span<const double> values_of(NodeId id) const;

 private:
  struct Node {
    Op op;
    std::uint32_t size;
    std::uint32_t offset;
    std::uint32_t in_begin;
    std::uint32_t in_count;
    OpAttr attr;
    std::int64_t param;  // -1 unless a parameter leaf
  };

  Var push_leaf(std::span<const double> values, std::int64_t param);
  void forward(const Node& n, double* out) const;
  void backprop(const Node& n, const double* g, std::vector<double>& adj) const;

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<NodeId> inputs_;
  std::vector<std::int64_t> param_nodes_;
};

// Primitive wrappers.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var affine(Var x, double scale, double shift);
Var dot(Var a, Var b);
Var sumsq(Var a);
Var sum(Var a);
Var norm(Var a);
Var sqrt(Var a);
Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var atanh(Var a);
Var tan(Var a);
Var atan(Var a);
Var cos(Var a);
Var sin(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var square(Var a);
Var matvec(Var m, Var x, std::uint32_t rows);
Var concat(std::span<const Var> parts);
Var clamp_min(Var a, double lo);
Var clamp_max(Var a, double hi);
Var ball_project(Var a, double max_norm);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return affine(a, -1.0, 0.0); }
inline Var operator+(Var a, double c) { return affine(a, 1.0, c); }
inline Var operator+(double c, Var a) { return affine(a, 1.0, c); }
inline Var operator-(Var a, double c) { return affine(a, 1.0, -c); }
inline Var operator-(double c, Var a) { return affine(a, -1.0, c); }
inline Var operator*(Var a, double c) { return affine(a, c, 0.0); }
inline Var operator*(double c, Var a) { return affine(a, c, 0.0); }
inline Var operator/(Var a, double c) { return affine(a, 1.0 / c, 0.0); }

/// Central-difference check of reverse-mode gradients.
struct GradCheckEntry {
  std::size_t param;
  std::size_t index;
  double analytic;
  double numeric;
  double rel_error;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tol = 1e-3;
  /// Coordinates checked per tensor; 0 means all. Picked deterministically.
  std::size_t max_coords_per_tensor = 0;
  /// Relative error denominator floor.
  double floor = 1e-6;
};

using LossFn = std::function<Var(Tape&, const ParameterSet&)>;

GradCheckReport grad_check(const LossFn& f, const ParameterSet& params,
                           GradCheckOptions options = {});

}  // namespace coriem::ad
