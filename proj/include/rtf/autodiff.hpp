#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rtf/params.hpp"
#include "rtf/tensor.hpp"

namespace rtf {

class Tape;

// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Reverse-mode differentiation over a linear record of operations. Nodes are
// appended in evaluation order, so walking them backwards is a valid
// topological order. One tape per forward pass; not thread-safe.
class Tape {
 public:
  using Backward = std::function<void(Tape&, Var out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a store entry; the value is read in place, so the store must
  // outlive the tape and stay unmodified while it is in use.
  Var parameter(const ParamStore& store, const std::string& name);

  // Appends an op result. `inputs` decide whether the node needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  // Gradient buffer, allocated as zeros on first access.
  Tensor& grad(Var v);
  bool has_grad(Var v) const { return nodes_[v.id].grad_ready; }

  // Seeds d(root)/d(root) = 1 and propagates to every node. `root` must hold a
  // single value. Throws NumericError if the root is not finite.
  void backward(Var root);

  // Adds parameter-leaf gradients into the store's grad tensors.
  void accumulate_grads(ParamStore& store) const;
  // Adds parameter-leaf gradients into `buffer` (aligned with `store`).
  void accumulate_grads(const ParamStore& store, GradBuffer& buffer) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool grad_ready = false;
    bool requires_grad = false;
    const ParamStore* store = nullptr;
    std::size_t param_index = 0;
    Backward backward;
  };

  std::vector<Node> nodes_;
};

}  // namespace rtf
