#include "recognn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recognn {

void Adam::step(const std::vector<TensorView>& params, const std::vector<TensorView>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("Adam::step: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.values.size(), 0.0);
      v_.emplace_back(p.values.size(), 0.0);
    }
  }
  if (m_.size() != params.size())
    throw std::invalid_argument("Adam::step: parameter list changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].values;
    auto g = grads[i].values;
    if (p.size() != g.size() || p.size() != m_[i].size())
      throw std::invalid_argument("Adam::step: shape mismatch in " + params[i].name);
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      p[k] -= config_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
    }
  }
}

void zero(const std::vector<TensorView>& tensors) {
  for (const auto& t : tensors) std::fill(t.values.begin(), t.values.end(), 0.0);
}

bool all_finite(const std::vector<TensorView>& tensors) {
  for (const auto& t : tensors)
    for (double x : t.values)
      if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace recognn
