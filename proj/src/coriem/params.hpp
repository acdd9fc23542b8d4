#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coriem::ad {

/// Dense row-major tensor of rank <= 2. Vectors are stored as rows x 1.
struct Tensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  std::size_t size() const noexcept { return data.size(); }
};

/// Ordered collection of named trainable tensors. Indices are stable.
class ParameterSet {
 public:
  std::size_t add(std::string name, int rows, int cols, std::vector<double> init);

  std::size_t size() const noexcept { return tensors_.size(); }
  Tensor& operator[](std::size_t i) { return tensors_.at(i); }
  const Tensor& operator[](std::size_t i) const { return tensors_.at(i); }
  std::optional<std::size_t> find(std::string_view name) const;

  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
  bool all_finite() const;

 private:
  std::vector<Tensor> tensors_;
};

/// Gradient of a scalar with respect to every tensor of a ParameterSet, one
/// entry per parameter and with matching sizes. Unreached tensors hold zeros.
struct GradientMap {
  std::vector<std::vector<double>> grads;

  const std::vector<double>& operator[](std::size_t i) const { return grads.at(i); }
  std::vector<double>& operator[](std::size_t i) { return grads.at(i); }

  static GradientMap zeros_like(const ParameterSet& params);
  void add(const GradientMap& other);
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First-order adaptive-moment optimizer over flat Euclidean parameters.
class Adam {
 public:
  Adam(const ParameterSet& params, AdamOptions options);

  void step(ParameterSet& params, const GradientMap& grads);
  long steps() const noexcept { return t_; }

 private:
  AdamOptions opt_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

}  // namespace coriem::ad
