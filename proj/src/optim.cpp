#include "fedmri/optim.hpp"

#include <cmath>

#include "fedmri/errors.hpp"

namespace fedmri::ad {

Optimizer::Optimizer(OptimizerOptions options) : options_(options) {
  if (!(options_.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (options_.decay < 0.0 || options_.decay >= 1.0) throw ConfigError("rmsprop decay must be in [0, 1)");
}

std::span<const float> Optimizer::state(const std::string& name) const {
  auto it = mean_square_.find(name);
  if (it == mean_square_.end()) return {};
  return it->second;
}

void Optimizer::step(std::span<Parameter* const> params) {
  const float lr = static_cast<float>(options_.lr);
  for (Parameter* p : params) {
    auto value = p->value.data();
    auto grad = p->grad.data();
    if (options_.kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * grad[i];
    } else {
      auto& s = mean_square_[p->name];
      if (s.empty()) s.assign(value.size(), 0.0f);
      const float decay = static_cast<float>(options_.decay);
      const float eps = static_cast<float>(options_.eps);
      for (std::size_t i = 0; i < value.size(); ++i) {
        s[i] = decay * s[i] + (1.0f - decay) * grad[i] * grad[i];
        value[i] -= lr * grad[i] / (std::sqrt(s[i]) + eps);
      }
    }
    for (float v : value)
      if (!std::isfinite(v)) throw NumericError("non-finite value in parameter " + p->name + " after optimizer step");
    p->zero_grad();
  }
}

}  // namespace fedmri::ad
