#include "fedmri/autodiff.hpp"

#include <algorithm>

#include "fedmri/errors.hpp"

namespace fedmri::ad {

Parameter::Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {
  if (value.is_complex()) throw DtypeError("parameters are real32");
}

void Parameter::zero_grad() { std::fill(grad.data().begin(), grad.data().end(), 0.0f); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, {}, 0.0, false});
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, true, &p, {}, 0.0, false});
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward_fn) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [&](Var v) { return nodes_.at(v.id).requires_grad; });
  Node& node = nodes_.emplace_back();
  node.value = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward_fn = std::move(backward_fn);
  return Var{nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.data().empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

double Tape::scalar(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.value.numel() != 1) throw ShapeError("scalar(): node is not a one-element tensor");
  return n.has_scalar ? n.scalar : static_cast<double>(n.value[0]);
}

void Tape::backward(Var loss) {
  Node& root = nodes_.at(loss.id);
  if (root.value.numel() != 1)
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_string(root.value.shape()));
  if (!root.requires_grad) return;
  grad(loss.id)[0] = 1.0f;

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.data().empty()) continue;
    if (n.param != nullptr) {
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    } else if (n.backward_fn) {
      n.backward_fn(*this, i);
    }
  }
}

}  // namespace fedmri::ad
