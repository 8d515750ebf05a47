#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ot2m/nn/tape.hpp"

namespace ot2m::nn {

/// One randomized gradient check: draws an instance from `rng` and returns the
/// grad_check error for it.
struct GradcheckCase {
  std::string name;
  std::function<double(std::mt19937_64& rng, double eps)> run;
};

struct GradcheckResult {
  std::string name;
  std::size_t instances = 0;
  double max_error = 0.0;
};

/// Every differentiable primitive in ops.hpp, each input checked separately.
std::vector<GradcheckCase> primitive_gradcheck_cases();

std::vector<GradcheckResult> run_gradchecks(const std::vector<GradcheckCase>& cases, std::size_t instances,
                                            std::uint64_t seed, double eps = 1e-5);

/// Scalar <y, r> for a fixed random tensor r shaped like y; turns any op into
/// a grad_check-able function.
Var project(Var y, const Tensor& weights);
Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0);

}  // namespace ot2m::nn
