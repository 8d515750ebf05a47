#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "ot2m/nn/tensor.hpp"

namespace ot2m::nn {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  /// Gradient after Tape::backward (zeros if nothing flowed here).
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the
/// recording order is already topological; backward walks it once in reverse.
/// Single-threaded; use one tape per thread.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Differentiable leaf; read its gradient through Var::grad().
  Var leaf(Tensor value);
  /// Leaf bound to a parameter; backward adds into `p.grad`.
  Var parameter(Parameter& p);

  /// Records a primitive. `backward` runs only if some input requires grad.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

  const Tensor& value(const Var& v) const { return nodes_[v.id_]->value; }
  bool requires_grad(const Var& v) const { return nodes_[v.id_]->requires_grad; }
  /// Mutable gradient buffer for `v`, allocated on first use.
  Tensor& grad_buffer(const Var& v);
  const Tensor& grad(const Var& v);

  /// Seeds d(loss)/d(loss) = 1 for a single-element `loss` and propagates.
  void backward(const Var& loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };
  Var push(std::unique_ptr<Node> node);

  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace ot2m::nn
