#include "ot2m/nn/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>

#include "ot2m/nn/ops.hpp"
#include "ot2m/nn/train_utils.hpp"

namespace ot2m::nn {

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(shape);
  for (double& v : t.storage()) v = n(rng);
  return t;
}

Var project(Var y, const Tensor& weights) {
  const std::size_t n = y.value().size();
  Var w = y.tape().constant(weights.reshaped({n, 1}));
  return reshape(matmul(reshape(y, {1, n}), w), {});
}

namespace {

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Pushes entries away from a kink at zero so central differences stay on one side.
Tensor away_from_zero(Tensor t, double margin) {
  for (double& v : t.storage()) {
    if (std::abs(v) < margin) v = v < 0.0 ? v - margin : v + margin;
  }
  return t;
}

/// Checks d<op(x), r>/dx where op sees x as its only varying input.
double check(const std::function<Var(Tape&, Var)>& op, const Tensor& x, std::mt19937_64& rng, double eps) {
  Tape probe;
  const Shape out_shape = op(probe, probe.constant(x)).shape();
  const Tensor r = random_tensor(out_shape, rng);
  return grad_check([&](Tape& t, Var v) { return project(op(t, v), r); }, x, eps);
}

Shape conv_input(std::mt19937_64& rng) { return {draw(rng, 1, 2), draw(rng, 1, 3), draw(rng, 2, 5), draw(rng, 3, 7)}; }

}  // namespace

std::vector<GradcheckCase> primitive_gradcheck_cases() {
  std::vector<GradcheckCase> cases;
  cases.push_back({"matmul.a", [](std::mt19937_64& rng, double eps) {
                     const std::size_t m = draw(rng, 1, 4), k = draw(rng, 1, 5), n = draw(rng, 1, 4);
                     const Tensor b = random_tensor({k, n}, rng);
                     return check([&](Tape& t, Var a) { return matmul(a, t.constant(b)); }, random_tensor({m, k}, rng), rng, eps);
                   }});
  cases.push_back({"matmul.b", [](std::mt19937_64& rng, double eps) {
                     const std::size_t m = draw(rng, 1, 4), k = draw(rng, 1, 5), n = draw(rng, 1, 4);
                     const Tensor a = random_tensor({m, k}, rng);
                     return check([&](Tape& t, Var b) { return matmul(t.constant(a), b); }, random_tensor({k, n}, rng), rng, eps);
                   }});
  cases.push_back({"transpose", [](std::mt19937_64& rng, double eps) {
                     return check([](Tape&, Var a) { return transpose(a); },
                                  random_tensor({draw(rng, 1, 4), draw(rng, 1, 4)}, rng), rng, eps);
                   }});
  auto conv_spec = [](std::mt19937_64& rng) {
    Conv2dSpec s;
    s.stride = {draw(rng, 1, 2), draw(rng, 1, 2)};
    s.padding = {draw(rng, 0, 1), draw(rng, 0, 1)};
    return s;
  };
  cases.push_back({"conv2d.input", [conv_spec](std::mt19937_64& rng, double eps) {
                     const Shape xs = conv_input(rng);
                     const std::size_t kh = draw(rng, 1, std::min<std::size_t>(3, xs[2]));
                     const std::size_t kw = draw(rng, 1, std::min<std::size_t>(3, xs[3]));
                     const Tensor w = random_tensor({draw(rng, 1, 3), xs[1], kh, kw}, rng);
                     const Conv2dSpec spec = conv_spec(rng);
                     return check([&](Tape& t, Var x) { return conv2d(x, t.constant(w), spec); }, random_tensor(xs, rng), rng, eps);
                   }});
  cases.push_back({"conv2d.weight", [conv_spec](std::mt19937_64& rng, double eps) {
                     const Shape xs = conv_input(rng);
                     const std::size_t kh = draw(rng, 1, std::min<std::size_t>(3, xs[2]));
                     const std::size_t kw = draw(rng, 1, std::min<std::size_t>(3, xs[3]));
                     const Tensor x = random_tensor(xs, rng);
                     const Conv2dSpec spec = conv_spec(rng);
                     return check([&](Tape& t, Var w) { return conv2d(t.constant(x), w, spec); },
                                  random_tensor({draw(rng, 1, 3), xs[1], kh, kw}, rng), rng, eps);
                   }});
  cases.push_back({"upsample_nearest_width2", [](std::mt19937_64& rng, double eps) {
                     return check([](Tape&, Var x) { return upsample_nearest_width2(x); }, random_tensor(conv_input(rng), rng), rng, eps);
                   }});
  cases.push_back({"relu", [](std::mt19937_64& rng, double eps) {
                     return check([](Tape&, Var x) { return relu(x); },
                                  away_from_zero(random_tensor({draw(rng, 1, 5), draw(rng, 1, 5)}, rng), 1e-3), rng, eps);
                   }});
  cases.push_back({"add", [](std::mt19937_64& rng, double eps) {
                     const Shape s{draw(rng, 1, 4), draw(rng, 1, 4)};
                     const Tensor b = random_tensor(s, rng);
                     return check([&](Tape& t, Var a) { return add(a, add(t.constant(b), a)); }, random_tensor(s, rng), rng, eps);
                   }});
  cases.push_back({"mul_scalar", [](std::mt19937_64& rng, double eps) {
                     const double s = std::normal_distribution<double>(0.0, 2.0)(rng);
                     return check([s](Tape&, Var a) { return mul_scalar(a, s); }, random_tensor({draw(rng, 1, 6)}, rng), rng, eps);
                   }});
  cases.push_back({"concat", [](std::mt19937_64& rng, double eps) {
                     const std::size_t axis = draw(rng, 0, 2);
                     Shape s{draw(rng, 1, 3), draw(rng, 1, 3), draw(rng, 1, 3)};
                     Shape other = s;
                     other[axis] = draw(rng, 1, 3);
                     const Tensor b = random_tensor(other, rng);
                     return check([&](Tape& t, Var a) { return concat({a, t.constant(b), a}, axis); }, random_tensor(s, rng), rng, eps);
                   }});
  cases.push_back({"slice", [](std::mt19937_64& rng, double eps) {
                     const std::size_t axis = draw(rng, 0, 2);
                     Shape s{draw(rng, 1, 4), draw(rng, 1, 4), draw(rng, 1, 4)};
                     const std::size_t b = draw(rng, 0, s[axis] - 1);
                     const std::size_t e = draw(rng, b + 1, s[axis]);
                     return check([&](Tape&, Var a) { return slice(a, axis, b, e); }, random_tensor(s, rng), rng, eps);
                   }});
  cases.push_back({"layer_bias.input", [](std::mt19937_64& rng, double eps) {
                     const Shape s = conv_input(rng);
                     const std::size_t axis = draw(rng, 0, 3);
                     const Tensor bias = random_tensor({s[axis]}, rng);
                     return check([&](Tape& t, Var x) { return layer_bias(x, t.constant(bias), axis); }, random_tensor(s, rng), rng, eps);
                   }});
  cases.push_back({"layer_bias.bias", [](std::mt19937_64& rng, double eps) {
                     const Shape s = conv_input(rng);
                     const std::size_t axis = draw(rng, 0, 3);
                     const Tensor x = random_tensor(s, rng);
                     return check([&](Tape& t, Var b) { return layer_bias(t.constant(x), b, axis); }, random_tensor({s[axis]}, rng), rng, eps);
                   }});
  cases.push_back({"reshape", [](std::mt19937_64& rng, double eps) {
                     const std::size_t a = draw(rng, 1, 4), b = draw(rng, 1, 4);
                     return check([&](Tape&, Var x) { return reshape(x, {b, a}); }, random_tensor({a, b}, rng), rng, eps);
                   }});
  cases.push_back({"l1_loss", [](std::mt19937_64& rng, double eps) {
                     const Shape s{draw(rng, 1, 4), draw(rng, 1, 4)};
                     const Tensor target = random_tensor(s, rng);
                     Tensor diff = away_from_zero(random_tensor(s, rng), 1e-3);
                     for (std::size_t i = 0; i < diff.size(); ++i) diff[i] += target[i];
                     return check([&](Tape& t, Var p) { return l1_loss(p, t.constant(target)); }, diff, rng, eps);
                   }});
  cases.push_back({"mse_loss", [](std::mt19937_64& rng, double eps) {
                     const Shape s{draw(rng, 1, 4), draw(rng, 1, 4)};
                     const Tensor target = random_tensor(s, rng);
                     return check([&](Tape& t, Var p) { return mse_loss(p, t.constant(target)); }, random_tensor(s, rng), rng, eps);
                   }});
  cases.push_back({"softmax_cross_entropy", [](std::mt19937_64& rng, double eps) {
                     const std::size_t n = draw(rng, 1, 5), v = draw(rng, 2, 6);
                     std::vector<int> targets(n);
                     for (auto& t : targets) t = static_cast<int>(draw(rng, 0, v - 1));
                     if (n > 1) targets[draw(rng, 0, n - 1)] = -1;
                     if (std::all_of(targets.begin(), targets.end(), [](int t) { return t < 0; })) targets[0] = 0;
                     return check([&](Tape&, Var x) { return softmax_cross_entropy(x, targets); }, random_tensor({n, v}, rng, 2.0), rng, eps);
                   }});
  cases.push_back({"embedding", [](std::mt19937_64& rng, double eps) {
                     const std::size_t v = draw(rng, 1, 5), d = draw(rng, 1, 4), t = draw(rng, 1, 6);
                     std::vector<int> ids(t);
                     for (auto& i : ids) i = static_cast<int>(draw(rng, 0, v - 1));
                     return check([&](Tape&, Var table) { return embedding(table, ids); }, random_tensor({v, d}, rng), rng, eps);
                   }});
  cases.push_back({"causal_softmax", [](std::mt19937_64& rng, double eps) {
                     const std::size_t t = draw(rng, 1, 4), s = t + draw(rng, 0, 3);
                     return check([](Tape&, Var x) { return causal_softmax(x); }, random_tensor({t, s}, rng, 2.0), rng, eps);
                   }});
  cases.push_back({"layer_norm.input", [](std::mt19937_64& rng, double eps) {
                     const std::size_t t = draw(rng, 1, 4), d = draw(rng, 2, 6);
                     const Tensor g = random_tensor({d}, rng), b = random_tensor({d}, rng);
                     return check([&](Tape& tp, Var x) { return layer_norm(x, tp.constant(g), tp.constant(b)); },
                                  random_tensor({t, d}, rng), rng, eps);
                   }});
  cases.push_back({"layer_norm.gamma", [](std::mt19937_64& rng, double eps) {
                     const std::size_t t = draw(rng, 1, 4), d = draw(rng, 2, 6);
                     const Tensor x = random_tensor({t, d}, rng), b = random_tensor({d}, rng);
                     return check([&](Tape& tp, Var g) { return layer_norm(tp.constant(x), g, tp.constant(b)); },
                                  random_tensor({d}, rng), rng, eps);
                   }});
  cases.push_back({"layer_norm.beta", [](std::mt19937_64& rng, double eps) {
                     const std::size_t t = draw(rng, 1, 4), d = draw(rng, 2, 6);
                     const Tensor x = random_tensor({t, d}, rng), g = random_tensor({d}, rng);
                     return check([&](Tape& tp, Var b) { return layer_norm(tp.constant(x), tp.constant(g), b); },
                                  random_tensor({d}, rng), rng, eps);
                   }});
  // The surrogate gradient is the identity; with quantized == z the forward
  // is the identity too, so central differences must agree with it.
  cases.push_back({"straight_through", [](std::mt19937_64& rng, double eps) {
                     return check([](Tape&, Var z) { return straight_through(z, z.value()); },
                                  random_tensor({draw(rng, 1, 3), draw(rng, 1, 5)}, rng), rng, eps);
                   }});
  return cases;
}

std::vector<GradcheckResult> run_gradchecks(const std::vector<GradcheckCase>& cases, std::size_t instances,
                                            std::uint64_t seed, double eps) {
  std::vector<GradcheckResult> out;
  std::mt19937_64 rng(seed);
  for (const auto& c : cases) {
    GradcheckResult r{c.name, instances, 0.0};
    for (std::size_t i = 0; i < instances; ++i) r.max_error = std::max(r.max_error, c.run(rng, eps));
    out.push_back(r);
  }
  return out;
}

}  // namespace ot2m::nn
