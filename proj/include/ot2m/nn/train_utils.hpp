#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ot2m/nn/tape.hpp"

namespace ot2m::nn {

using ScalarFunction = std::function<Var(Tape&, Var)>;

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
/// eps must lie in [1e-6, 1e-3]. Throws NonFinite if any probe is NaN/Inf.
double grad_check(const ScalarFunction& f, const Tensor& x, double eps = 1e-5);

void sgd_step(std::span<Parameter* const> params, double lr);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction; moment buffers are owned per parameter slot.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, double lr, AdamHyper hyper = {});

  void step();
  void zero_grad();
  std::int64_t steps() const { return t_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  std::vector<Parameter*> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_;
  AdamHyper hyper_;
  std::int64_t t_ = 0;
};

/// "OT2W" named-tensor file, float32 payload.
class Checkpoint {
 public:
  void put(const std::string& name, const Tensor& value);
  void put_scalar(const std::string& name, double value) { put(name, Tensor::scalar(value)); }
  bool has(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  double scalar(const std::string& name) const { return get(name).item(); }
  /// Names in insertion order.
  std::vector<std::string> names() const;

  std::vector<char> encode() const;
  static Checkpoint decode(std::span<const char> bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace ot2m::nn
