#include "ot2m/nn/tape.hpp"

#include "ot2m/error.hpp"

namespace ot2m::nn {

const Tensor& Var::value() const { return tape_->value(*this); }
const Tensor& Var::grad() const { return tape_->grad(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

Var Tape::push(std::unique_ptr<Node> node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  auto node = std::make_unique<Node>();
  node->value = std::move(value);
  return push(std::move(node));
}

Var Tape::leaf(Tensor value) {
  auto node = std::make_unique<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return push(std::move(node));
}

Var Tape::parameter(Parameter& p) {
  auto node = std::make_unique<Node>();
  node->value = p.value;
  node->requires_grad = true;
  node->param = &p;
  return push(std::move(node));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, Backward backward) {
  auto node = std::make_unique<Node>();
  node->value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape_ != this) {
      throw Error(ErrorKind::InvalidArgument, "input recorded on a different tape");
    }
    node->requires_grad = node->requires_grad || nodes_[in.id_]->requires_grad;
  }
  if (node->requires_grad) node->backward = std::move(backward);
  return push(std::move(node));
}

Tensor& Tape::grad_buffer(const Var& v) {
  Node& n = *nodes_[v.id_];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

const Tensor& Tape::grad(const Var& v) { return grad_buffer(v); }

void Tape::backward(const Var& loss) {
  if (value(loss).size() != 1) {
    throw Error(ErrorKind::ShapeMismatch, "backward needs a scalar loss, got " + shape_string(value(loss).shape()));
  }
  grad_buffer(loss)[0] += 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = *nodes_[i];
    if (!n.requires_grad || !n.has_grad) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      if (n.param->grad.size() != n.grad.size()) n.param->zero_grad();
      for (std::size_t k = 0; k < n.grad.size(); ++k) n.param->grad[k] += n.grad[k];
    }
  }
}

}  // namespace ot2m::nn
