#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "ot2m/nn/tape.hpp"

namespace ot2m::nn {

struct Conv2dSpec {
  std::array<std::size_t, 2> stride{1, 1};   // (height, width)
  std::array<std::size_t, 2> padding{0, 0};  // zero padding (height, width)
};

/// [M, K] x [K, N] -> [M, N].
Var matmul(Var a, Var b);
/// [M, N] -> [N, M].
Var transpose(Var a);
/// x: [N, C, H, W], weight: [O, C, KH, KW] -> [N, O, OH, OW].
Var conv2d(Var x, Var weight, Conv2dSpec spec = {});
/// [N, C, H, W] -> [N, C, H, 2W], each column repeated.
Var upsample_nearest_width2(Var x);
Var relu(Var x);
Var add(Var a, Var b);
Var mul_scalar(Var x, double s);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
/// Adds bias[c] along `axis` (bias length = x.shape[axis]).
Var layer_bias(Var x, Var bias, std::size_t axis);
Var reshape(Var x, Shape shape);

/// Mean absolute difference.
Var l1_loss(Var prediction, Var target);
/// Mean squared difference.
Var mse_loss(Var prediction, Var target);
/// logits [N, V]; targets[i] < 0 marks row i as ignored. Mean over kept rows.
Var softmax_cross_entropy(Var logits, const std::vector<int>& targets);

/// Rows of table [V, D] selected by ids -> [T, D].
Var embedding(Var table, const std::vector<int>& ids);
/// Row-wise softmax of [T, S] scores where row i may attend to columns
/// j <= i + (S - T).
Var causal_softmax(Var scores);
/// Normalizes the last axis of [T, D] then applies gamma/beta [D].
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
/// Forward returns `quantized`; backward passes the gradient to `z` unchanged.
Var straight_through(Var z, const Tensor& quantized);

}  // namespace ot2m::nn
