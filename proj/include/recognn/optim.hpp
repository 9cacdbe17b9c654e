#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace recognn {

/// Flat view of one trainable tensor. Models expose their parameters and
/// gradients as parallel lists of these, in a fixed order.
struct TensorView {
  std::string name;
  std::span<double> values;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One update. `params` and `grads` must list the same tensors in the same
  /// order on every call.
  void step(const std::vector<TensorView>& params, const std::vector<TensorView>& grads);

  std::uint64_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Sets every tensor in the list to zero.
void zero(const std::vector<TensorView>& tensors);

bool all_finite(const std::vector<TensorView>& tensors);

}  // namespace recognn
