#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fedmri/tensor.hpp"

namespace fedmri::ad {

/// A named trainable tensor. grad always has the shape of value.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad();
};

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Records primitive applications in execution order; backward() replays
/// them in reverse, accumulating gradients additively. One tape per worker.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor value);
  // Leaf whose gradient is added into p.grad by backward().
  Var parameter(Parameter& p);

  /// Appends a node. requires_grad is derived from the inputs: the node is
  /// differentiable iff any input is. backward_fn is dropped otherwise.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward_fn);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  // Gradient buffer of a node, allocated (zeroed) on first access.
  Tensor& grad(std::size_t id);
  const Tensor& grad_of(Var v) const { return nodes_.at(v.id).grad; }
  bool has_grad(std::size_t id) const { return !nodes_.at(id).grad.data().empty(); }

  // Scalar losses may keep a double-precision value next to the float one.
  void set_scalar(Var v, double value) {
    nodes_.at(v.id).scalar = value;
    nodes_.at(v.id).has_scalar = true;
  }
  double scalar(Var v) const;

  /// Reverse pass from a one-element loss. Throws ShapeError otherwise.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() {
    nodes_.clear();
    branch_hash_ = 0xcbf29ce484222325ULL;
  }

  // Piecewise ops (relu, l1) fold the side of every element into a running
  // hash; equal hashes mean the same linear piece was taken.
  void note_branch(bool side) {
    branch_hash_ = (branch_hash_ ^ static_cast<std::uint64_t>(side)) * 0x100000001b3ULL;
  }
  std::uint64_t branch_hash() const noexcept { return branch_hash_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward_fn;
    double scalar = 0.0;
    bool has_scalar = false;
  };
  std::vector<Node> nodes_;
  std::uint64_t branch_hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace fedmri::ad
