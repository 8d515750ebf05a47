#include <cmath>
#include <random>

#include "doctest.h"
#include "ot2m/error.hpp"
#include "ot2m/nn/ops.hpp"
#include "ot2m/nn/train_utils.hpp"

using namespace ot2m;
using namespace ot2m::nn;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, scale);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

double grad_norm_sq(const Tensor& g) {
  double s = 0.0;
  for (double v : g.values()) s += v * v;
  return s;
}

}  // namespace

TEST_CASE("relu forward and gradient mask") {
  Tape tape;
  const Var x = tape.leaf(Tensor({3}, {-1.0, 0.0, 2.0}));
  const Var y = relu(x);
  CHECK(y.value()[0] == 0.0);
  CHECK(y.value()[1] == 0.0);
  CHECK(y.value()[2] == 2.0);
  Tape t2;
  const Var x2 = t2.leaf(Tensor({3}, {-1.0, 0.0, 2.0}));
  const Var s = l1_loss(relu(x2), t2.constant(Tensor({3}, {-5.0, -5.0, -5.0})));
  t2.backward(s);
  // d/dx mean|relu(x)+5| = mask / 3
  CHECK(x2.grad()[0] == 0.0);
  CHECK(x2.grad()[1] == 0.0);
  CHECK(x2.grad()[2] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("conv2d with an identity 1x1 kernel returns its input") {
  std::mt19937_64 rng(1);
  Tape tape;
  const Tensor in = random_tensor({2, 3, 5, 7}, rng);
  Tensor w({3, 3, 1, 1});
  for (std::size_t c = 0; c < 3; ++c) w[c * 3 + c] = 1.0;
  const Var y = conv2d(tape.constant(in), tape.constant(w));
  CHECK(y.shape() == in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(y.value()[i] == in[i]);
}

TEST_CASE("conv2d 3x3 ones kernel over a 3x3 input sums the input") {
  Tape tape;
  const Tensor in({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Var y = conv2d(tape.constant(in), tape.constant(Tensor({1, 1, 3, 3}, 1.0)));
  CHECK(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y.value()[0] == 45.0);
}

TEST_CASE("conv2d output geometry with stride and padding") {
  Tape tape;
  const Var x = tape.constant(Tensor({2, 4, 5, 64}));
  const Var w = tape.constant(Tensor({8, 4, 3, 3}));
  CHECK(conv2d(x, w, {{1, 2}, {1, 1}}).shape() == Shape{2, 8, 5, 32});
  const Var odd = tape.constant(Tensor({1, 4, 5, 13}));
  CHECK(conv2d(odd, w, {{1, 2}, {1, 1}}).shape() == Shape{1, 8, 5, 7});
  CHECK(upsample_nearest_width2(odd).shape() == Shape{1, 4, 5, 26});
}

TEST_CASE("shape errors name both shapes") {
  Tape tape;
  const Var a = tape.constant(Tensor({2, 3}));
  const Var b = tape.constant(Tensor({4, 5}));
  try {
    matmul(a, b);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
    const std::string msg = e.what();
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("[4, 5]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, b), Error);
  CHECK_THROWS_AS(l1_loss(a, b), Error);
  CHECK_THROWS_AS(slice(a, 1, 2, 5), Error);
}

TEST_CASE("grad_check of sum of squares") {
  const ScalarFunction f = [](Tape&, Var x) { return mul_scalar(mse_loss(x, x.tape().constant(Tensor({1}))), 1.0); };
  Tape tape;
  const Var x = tape.leaf(Tensor({1}, {3.0}));
  tape.backward(f(tape, x));
  CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(grad_check(f, Tensor({1}, {3.0}), 1e-5) <= 1e-7);
}

TEST_CASE("grad_check of l1 away from the kink gives the sign vector") {
  const Tensor target({4}, {0.0, 0.0, 0.0, 0.0});
  const ScalarFunction f = [&](Tape& t, Var x) { return l1_loss(x, t.constant(target)); };
  const Tensor x({4}, {0.5, -0.3, 1.2, -2.0});
  Tape tape;
  const Var v = tape.leaf(x);
  tape.backward(f(tape, v));
  CHECK(v.grad()[0] == 0.25);
  CHECK(v.grad()[1] == -0.25);
  CHECK(grad_check(f, x, 1e-5) <= 1e-6);
}

TEST_CASE("grad_check of softmax cross entropy on random logits") {
  std::mt19937_64 rng(9);
  const Tensor logits = random_tensor({1, 10}, rng);
  const ScalarFunction f = [](Tape&, Var x) { return softmax_cross_entropy(x, {4}); };
  CHECK(grad_check(f, logits, 1e-5) <= 1e-5);
}

TEST_CASE("grad_check validates eps and finiteness") {
  const ScalarFunction f = [](Tape& t, Var x) { return mse_loss(x, t.constant(Tensor({1}))); };
  CHECK_THROWS_AS(grad_check(f, Tensor({1}, {1.0}), 1e-1), Error);
  const ScalarFunction bad = [](Tape& t, Var x) {
    return mse_loss(x, t.constant(Tensor({1}, {std::nan("")})));
  };
  try {
    grad_check(bad, Tensor({1}, {1.0}), 1e-5);
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
  }
}

TEST_CASE("add, concat and slice scatter gradients without loss") {
  std::mt19937_64 rng(2);
  Tape tape;
  const Var a = tape.leaf(random_tensor({2, 3, 4}, rng));
  const Var b = tape.leaf(random_tensor({2, 5, 4}, rng));
  const Var c = concat({a, b}, 1);
  const Var head = slice(c, 1, 0, 4);
  const Var tail = slice(c, 1, 4, 8);
  const Var target = tape.constant(random_tensor({2, 4, 4}, rng));
  const Var loss = add(mse_loss(head, target), mse_loss(tail, target));
  tape.backward(loss);
  const double upstream = grad_norm_sq(head.grad()) + grad_norm_sq(tail.grad());
  CHECK(std::abs(grad_norm_sq(c.grad()) - upstream) <= 1e-12);
  CHECK(std::abs(grad_norm_sq(a.grad()) + grad_norm_sq(b.grad()) - grad_norm_sq(c.grad())) <= 1e-12);
}

TEST_CASE("causal softmax masks the future") {
  Tape tape;
  const Var s = tape.constant(Tensor({3, 3}, {1, 5, 5, 1, 2, 5, 1, 2, 3}));
  const Var p = causal_softmax(s);
  CHECK(p.value()[0] == 1.0);
  CHECK(p.value()[1] == 0.0);
  CHECK(p.value()[2] == 0.0);
  CHECK(p.value()[5] == 0.0);
  CHECK(p.value()[3] + p.value()[4] == doctest::Approx(1.0));
}

TEST_CASE("sgd examples") {
  Parameter x("x", Tensor({1}, {1.0}));
  x.grad[0] = 2.0 * x.value[0];
  std::vector<Parameter*> params{&x};
  sgd_step(params, 0.1);
  CHECK(x.value[0] == doctest::Approx(0.8).epsilon(1e-15));
  for (int i = 1; i < 100; ++i) {
    x.grad[0] = 2.0 * x.value[0];
    sgd_step(params, 0.1);
  }
  // Oracle: x_k = 0.8^k.
  CHECK(x.value[0] == doctest::Approx(std::pow(0.8, 100)).epsilon(1e-9));
  CHECK(std::abs(x.value[0]) < 1e-9);

  Parameter wrong("w", Tensor({2}));
  wrong.grad = Tensor({3});
  std::vector<Parameter*> bad{&wrong};
  CHECK_THROWS_AS(sgd_step(bad, 0.1), Error);
}

TEST_CASE("adam first step magnitude is lr regardless of gradient scale") {
  for (double scale : {1e-4, 1.0, 1e4}) {
    Parameter p("p", Tensor({3}, {1.0, -1.0, 0.5}));
    p.grad = Tensor({3}, {scale, -scale, 2 * scale});
    Adam adam({&p}, 1e-3);
    adam.step();
    // |step| = lr * |g| / (|g| + eps): within 1e-3 relative of lr down to |g| = 1e-4.
    CHECK(std::abs(1.0 - p.value[0]) == doctest::Approx(1e-3).epsilon(1e-3));
    CHECK(std::abs(-1.0 - p.value[1]) == doctest::Approx(1e-3).epsilon(1e-3));
    CHECK(std::abs(0.5 - p.value[2]) == doctest::Approx(1e-3).epsilon(1e-3));
  }
}

TEST_CASE("checkpoint round trip") {
  Checkpoint ck;
  ck.put("enc.w", Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  ck.put_scalar("config.alpha", 4.0);
  const std::vector<char> bytes = ck.encode();
  const Checkpoint back = Checkpoint::decode(bytes);
  CHECK(back.names() == std::vector<std::string>{"enc.w", "config.alpha"});
  CHECK(back.get("enc.w").shape() == Shape{2, 3});
  CHECK(back.get("enc.w")[5] == 6.0);
  CHECK(back.scalar("config.alpha") == 4.0);
  CHECK(back.encode() == bytes);
  CHECK_THROWS_AS(back.get("missing"), Error);
  std::vector<char> corrupt = bytes;
  corrupt[1] = 'X';
  CHECK_THROWS_AS(Checkpoint::decode(corrupt), Error);
}
