#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedmri/autodiff.hpp"

namespace fedmri::ad {

enum class OptimizerKind { sgd, rmsprop };

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::rmsprop;
  double lr = 1e-4;
  double decay = 0.99;
  double eps = 1e-8;
};

/// sgd:     value -= lr * grad
/// rmsprop: s = decay*s + (1-decay)*grad^2;  value -= lr * grad / (sqrt(s) + eps)
/// Running state is keyed by parameter name, so one optimizer can serve
/// disjoint subsets of a model across calls. step() zeroes the grads it used.
class Optimizer {
 public:
  explicit Optimizer(OptimizerOptions options = {});

  void step(std::span<Parameter* const> params);

  const OptimizerOptions& options() const noexcept { return options_; }
  void set_lr(double lr) { options_.lr = lr; }

  // Mean-square state for one parameter, empty if never stepped.
  std::span<const float> state(const std::string& name) const;

 private:
  OptimizerOptions options_;
  std::map<std::string, std::vector<float>> mean_square_;
};

}  // namespace fedmri::ad
