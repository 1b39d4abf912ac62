#include "rtf/autodiff.hpp"

#include <stdexcept>

#include "rtf/core.hpp"

namespace rtf {

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(const ParamStore& store, const std::string& name) {
  Node n;
  n.param_index = store.index_of(name);
  n.store = &store;
  n.external = &store.entry(n.param_index).value;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
#ifndef NDEBUG
  if (!value.all_finite()) throw NumericError("non-finite value produced on tape");
#endif
  Node n;
  n.value = std::move(value);
  for (const Var& v : inputs) n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.external ? *n.external : n.value;
}

Tensor& Tape::grad(Var v) {
  Node& n = nodes_[v.id];
  if (!n.grad_ready) {
    n.grad = Tensor(value(v).shape());
    n.grad_ready = true;
  }
  return n.grad;
}

void Tape::backward(Var root) {
  const Tensor& out = value(root);
  if (out.size() != 1) throw std::invalid_argument("backward: root must be a single value");
  if (!out.all_finite()) throw NumericError("backward: root value is not finite");
  grad(root)[0] = 1;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.grad_ready || !n.backward) continue;
    n.backward(*this, Var{this, i});
  }
}

void Tape::accumulate_grads(ParamStore& store) const {
  for (const Node& n : nodes_) {
    if (n.store != &store || !n.grad_ready) continue;
    store.entry(n.param_index).grad.add_(n.grad);
  }
}

void Tape::accumulate_grads(const ParamStore& store, GradBuffer& buffer) const {
  for (const Node& n : nodes_) {
    if (n.store != &store || !n.grad_ready) continue;
    buffer.at(n.param_index).add_(n.grad);
  }
}

}  // namespace rtf
