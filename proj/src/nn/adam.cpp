#include "lfd/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace lfd::nn {

Adam::Adam(const Mlp& net, AdamConfig config)
    : config_(config), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

void Adam::step(Mlp& net, const Gradients& grads) {
  if (grads.dw.size() != m_.dw.size()) throw std::invalid_argument("Adam::step: layer count mismatch");
  for (std::size_t i = 0; i < grads.dw.size(); ++i) {
    if (grads.dw[i].rows() != m_.dw[i].rows() || grads.dw[i].cols() != m_.dw[i].cols() ||
        grads.db[i].size() != m_.db[i].size())
      throw std::invalid_argument("Adam::step: gradient shape mismatch at layer " + std::to_string(i));
  }
  if (!grads.all_finite()) throw std::domain_error("Adam::step: non-finite gradient rejected");

  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto& layers = net.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    m_.dw[i] = b1 * m_.dw[i] + (1.0 - b1) * grads.dw[i];
    v_.dw[i] = b2 * v_.dw[i] + (1.0 - b2) * grads.dw[i].cwiseProduct(grads.dw[i]);
    m_.db[i] = b1 * m_.db[i] + (1.0 - b1) * grads.db[i];
    v_.db[i] = b2 * v_.db[i] + (1.0 - b2) * grads.db[i].cwiseProduct(grads.db[i]);
    layers[i].w.array() -=
        config_.lr * (m_.dw[i].array() / c1) / ((v_.dw[i].array() / c2).sqrt() + config_.eps);
    layers[i].b.array() -=
        config_.lr * (m_.db[i].array() / c1) / ((v_.db[i].array() / c2).sqrt() + config_.eps);
  }
}

}  // namespace lfd::nn
