#include "coriem/params.hpp"

#include <cmath>

#include "coriem/error.hpp"

namespace coriem::ad {

std::size_t ParameterSet::add(std::string name, int rows, int cols, std::vector<double> init) {
  if (rows <= 0 || cols <= 0) throw UsageError("parameter '" + name + "' has an empty shape");
  if (init.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw DimensionMismatch("parameter '" + name + "' initializer does not match its shape");
  }
  if (find(name)) throw UsageError("duplicate parameter name '" + name + "'");
  tensors_.push_back(Tensor{std::move(name), rows, cols, std::move(init)});
  return tensors_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  return std::nullopt;
}

bool ParameterSet::all_finite() const {
  for (const auto& t : tensors_) {
    for (double v : t.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

GradientMap GradientMap::zeros_like(const ParameterSet& params) {
  GradientMap g;
  g.grads.reserve(params.size());
  for (const auto& t : params.tensors()) g.grads.emplace_back(t.size(), 0.0);
  return g;
}

void GradientMap::add(const GradientMap& other) {
  if (other.grads.size() != grads.size()) throw DimensionMismatch("GradientMap::add: size mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (other.grads[i].size() != grads[i].size()) {
      throw DimensionMismatch("GradientMap::add: tensor size mismatch");
    }
    for (std::size_t j = 0; j < grads[i].size(); ++j) grads[i][j] += other.grads[i][j];
  }
}

Adam::Adam(const ParameterSet& params, AdamOptions options) : opt_(options) {
  for (const auto& t : params.tensors()) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

void Adam::step(ParameterSet& params, const GradientMap& grads) {
  if (params.size() != m_.size() || grads.grads.size() != m_.size()) {
    throw DimensionMismatch("Adam::step: parameter layout changed");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    auto& data = params[i].data;
    const auto& g = grads[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      m_[i][j] = opt_.beta1 * m_[i][j] + (1.0 - opt_.beta1) * g[j];
      v_[i][j] = opt_.beta2 * v_[i][j] + (1.0 - opt_.beta2) * g[j] * g[j];
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      data[j] -= opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps);
    }
  }
}

}  // namespace coriem::ad
