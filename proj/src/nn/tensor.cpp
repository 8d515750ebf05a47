#include "ot2m/nn/tensor.hpp"

#include <algorithm>

#include "ot2m/error.hpp"

namespace ot2m::nn {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  if (shape_.size() > 4) {
    throw Error(ErrorKind::ShapeMismatch, "tensor rank above 4: " + shape_string(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 4) {
    throw Error(ErrorKind::ShapeMismatch, "tensor rank above 4: " + shape_string(shape_));
  }
  if (data_.size() != shape_size(shape_)) {
    throw Error(ErrorKind::ShapeMismatch, "data length " + std::to_string(data_.size()) + " does not match shape " +
                                              shape_string(shape_));
  }
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw Error(ErrorKind::ShapeMismatch, "item() on tensor of shape " + shape_string(shape_));
  }
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw Error(ErrorKind::ShapeMismatch, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace ot2m::nn
