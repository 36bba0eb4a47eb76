#pragma once

#include <cstdint>

#include "lfd/nn/mlp.hpp"

namespace lfd::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over one network's parameters.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, AdamConfig config);

  // Throws std::domain_error (and leaves net and moments untouched) if any
  // gradient is non-finite; std::invalid_argument on shape mismatch.
  void step(Mlp& net, const Gradients& grads);

  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  std::int64_t step_count() const { return t_; }
  const Gradients& first_moment() const { return m_; }
  const Gradients& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  Gradients m_;
  Gradients v_;
  std::int64_t t_ = 0;
};

}  // namespace lfd::nn
