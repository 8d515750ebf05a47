#include "ot2m/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "ot2m/error.hpp"

namespace ot2m::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

MatMap as_matrix(double* data, std::size_t rows, std::size_t cols) {
  return {data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
ConstMatMap as_matrix(const double* data, std::size_t rows, std::size_t cols) {
  return {data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": " + shape_string(a) + " vs " + shape_string(b));
}

void require_rank(const char* op, const Var& v, std::size_t rank) {
  if (v.shape().size() != rank) {
    throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                                              shape_string(v.shape()));
  }
}

struct AxisSplit {
  std::size_t outer = 1, dim = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw Error(ErrorKind::ShapeMismatch, "axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.dim = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

struct ConvGeometry {
  std::size_t n, c, h, w, o, kh, kw, sh, sw, ph, pw, oh, ow;
};

void im2col(const double* x, const ConvGeometry& g, double* cols) {
  const std::size_t plane = g.oh * g.ow;
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* row = cols + ((c * g.kh + ki) * g.kw + kj) * plane;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.sh + ki) - static_cast<std::ptrdiff_t>(g.ph);
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.sw + kj) - static_cast<std::ptrdiff_t>(g.pw);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(g.h) &&
                                ix < static_cast<std::ptrdiff_t>(g.w);
            row[oy * g.ow + ox] =
                inside ? x[(c * g.h + static_cast<std::size_t>(iy)) * g.w + static_cast<std::size_t>(ix)] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeometry& g, double* dx) {
  const std::size_t plane = g.oh * g.ow;
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* row = cols + ((c * g.kh + ki) * g.kw + kj) * plane;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.sh + ki) - static_cast<std::ptrdiff_t>(g.ph);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.sw + kj) - static_cast<std::ptrdiff_t>(g.pw);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            dx[(c * g.h + static_cast<std::size_t>(iy)) * g.w + static_cast<std::size_t>(ix)] += row[oy * g.ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  if (a.shape()[1] != b.shape()[0]) shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor out({m, n});
  as_matrix(out.data(), m, n).noalias() = as_matrix(a.value().data(), m, k) * as_matrix(b.value().data(), k, n);
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape& tape, const Tensor& g) {
    const auto gm = as_matrix(g.data(), m, n);
    if (a.requires_grad()) {
      as_matrix(tape.grad_buffer(a).data(), m, k).noalias() += gm * as_matrix(b.value().data(), k, n).transpose();
    }
    if (b.requires_grad()) {
      as_matrix(tape.grad_buffer(b).data(), k, n).noalias() += as_matrix(a.value().data(), m, k).transpose() * gm;
    }
  });
}

Var transpose(Var a) {
  require_rank("transpose", a, 2);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out({n, m});
  as_matrix(out.data(), n, m) = as_matrix(a.value().data(), m, n).transpose();
  return a.tape().record(std::move(out), {a}, [a, m, n](Tape& tape, const Tensor& g) {
    as_matrix(tape.grad_buffer(a).data(), m, n) += as_matrix(g.data(), n, m).transpose();
  });
}

Var conv2d(Var x, Var weight, Conv2dSpec spec) {
  require_rank("conv2d", x, 4);
  require_rank("conv2d", weight, 4);
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs[1] != ws[1]) shape_error("conv2d", xs, ws);
  if (spec.stride[0] == 0 || spec.stride[1] == 0) {
    throw Error(ErrorKind::InvalidArgument, "conv2d: zero stride");
  }
  if (xs[2] + 2 * spec.padding[0] < ws[2] || xs[3] + 2 * spec.padding[1] < ws[3]) shape_error("conv2d", xs, ws);
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], spec.stride[0], spec.stride[1],
                 spec.padding[0], spec.padding[1], 0, 0};
  g.oh = (g.h + 2 * g.ph - g.kh) / g.sh + 1;
  g.ow = (g.w + 2 * g.pw - g.kw) / g.sw + 1;
  const std::size_t ckk = g.c * g.kh * g.kw;
  const std::size_t plane = g.oh * g.ow;

  Tensor out({g.n, g.o, g.oh, g.ow});
  std::vector<double> cols(ckk * plane);
  const auto wmat = as_matrix(weight.value().data(), g.o, ckk);
  for (std::size_t s = 0; s < g.n; ++s) {
    im2col(x.value().data() + s * g.c * g.h * g.w, g, cols.data());
    as_matrix(out.data() + s * g.o * plane, g.o, plane).noalias() = wmat * as_matrix(cols.data(), ckk, plane);
  }
  return x.tape().record(std::move(out), {x, weight}, [x, weight, g, ckk, plane](Tape& tape, const Tensor& grad) {
    std::vector<double> cols(ckk * plane);
    std::vector<double> dcols(ckk * plane);
    const auto wmat = as_matrix(weight.value().data(), g.o, ckk);
    for (std::size_t s = 0; s < g.n; ++s) {
      const auto gs = as_matrix(grad.data() + s * g.o * plane, g.o, plane);
      if (weight.requires_grad()) {
        im2col(x.value().data() + s * g.c * g.h * g.w, g, cols.data());
        as_matrix(tape.grad_buffer(weight).data(), g.o, ckk).noalias() +=
            gs * as_matrix(cols.data(), ckk, plane).transpose();
      }
      if (x.requires_grad()) {
        as_matrix(dcols.data(), ckk, plane).noalias() = wmat.transpose() * gs;
        col2im(dcols.data(), g, tape.grad_buffer(x).data() + s * g.c * g.h * g.w);
      }
    }
  });
}

Var upsample_nearest_width2(Var x) {
  require_rank("upsample_nearest_width2", x, 4);
  const Shape& s = x.shape();
  const std::size_t rows = s[0] * s[1] * s[2], w = s[3];
  Tensor out({s[0], s[1], s[2], 2 * w});
  const double* in = x.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < w; ++i) {
      out[r * 2 * w + 2 * i] = in[r * w + i];
      out[r * 2 * w + 2 * i + 1] = in[r * w + i];
    }
  }
  return x.tape().record(std::move(out), {x}, [x, rows, w](Tape& tape, const Tensor& g) {
    double* dx = tape.grad_buffer(x).data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < w; ++i) dx[r * w + i] += g[r * 2 * w + 2 * i] + g[r * 2 * w + 2 * i + 1];
    }
  });
}

Var relu(Var x) {
  Tensor out(x.shape());
  const Tensor& in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor& g) {
    Tensor& dx = tape.grad_buffer(x);
    const Tensor& in = x.value();
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i] > 0.0) dx[i] += g[i];
    }
  });
}

Var add(Var a, Var b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    for (const Var& v : {a, b}) {
      if (!v.requires_grad()) continue;
      Tensor& d = tape.grad_buffer(v);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var mul_scalar(Var x, double s) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * s;
  return x.tape().record(std::move(out), {x}, [x, s](Tape& tape, const Tensor& g) {
    Tensor& d = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * s;
  });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) {
    throw Error(ErrorKind::EmptyInput, "concat of zero tensors");
  }
  Shape shape = parts.front().shape();
  const AxisSplit first = split_axis(shape, axis);
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != shape.size()) shape_error("concat", shape, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != shape[i]) shape_error("concat", shape, s);
    }
    total += s[axis];
  }
  shape[axis] = total;
  Tensor out(shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    offsets.push_back(offset);
    const std::size_t d = p.shape()[axis];
    for (std::size_t o = 0; o < first.outer; ++o) {
      std::copy_n(p.value().data() + o * d * first.inner, d * first.inner,
                  out.data() + (o * total + offset) * first.inner);
    }
    offset += d;
  }
  return parts.front().tape().record(
      std::move(out), parts, [parts, offsets, total, first, axis](Tape& tape, const Tensor& g) {
        for (std::size_t k = 0; k < parts.size(); ++k) {
          const Var& p = parts[k];
          if (!p.requires_grad()) continue;
          const std::size_t d = p.shape()[axis];
          double* dp = tape.grad_buffer(p).data();
          for (std::size_t o = 0; o < first.outer; ++o) {
            const double* src = g.data() + (o * total + offsets[k]) * first.inner;
            for (std::size_t i = 0; i < d * first.inner; ++i) dp[o * d * first.inner + i] += src[i];
          }
        }
      });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const AxisSplit s = split_axis(x.shape(), axis);
  if (begin >= end || end > s.dim) {
    throw Error(ErrorKind::ShapeMismatch, "slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                                              ") out of range for " + shape_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[axis] = end - begin;
  Tensor out(shape);
  const std::size_t len = (end - begin) * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(x.value().data() + (o * s.dim + begin) * s.inner, len, out.data() + o * len);
  }
  return x.tape().record(std::move(out), {x}, [x, s, begin, len](Tape& tape, const Tensor& g) {
    double* dx = tape.grad_buffer(x).data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      double* dst = dx + (o * s.dim + begin) * s.inner;
      for (std::size_t i = 0; i < len; ++i) dst[i] += g[o * len + i];
    }
  });
}

Var layer_bias(Var x, Var bias, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis);
  if (bias.value().size() != s.dim) shape_error("layer_bias", x.shape(), bias.shape());
  Tensor out = x.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t c = 0; c < s.dim; ++c) {
      const double b = bias.value()[c];
      double* row = out.data() + (o * s.dim + c) * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) row[i] += b;
    }
  }
  return x.tape().record(std::move(out), {x, bias}, [x, bias, s](Tape& tape, const Tensor& g) {
    if (x.requires_grad()) {
      Tensor& dx = tape.grad_buffer(x);
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    }
    if (bias.requires_grad()) {
      Tensor& db = tape.grad_buffer(bias);
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t c = 0; c < s.dim; ++c) {
          const double* row = g.data() + (o * s.dim + c) * s.inner;
          double acc = 0.0;
          for (std::size_t i = 0; i < s.inner; ++i) acc += row[i];
          db[c] += acc;
        }
      }
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor& g) {
    Tensor& dx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
  });
}

Var l1_loss(Var prediction, Var target) {
  if (prediction.shape() != target.shape()) shape_error("l1_loss", prediction.shape(), target.shape());
  const Tensor& p = prediction.value();
  const Tensor& t = target.value();
  const double n = static_cast<double>(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - t[i]);
  return prediction.tape().record(Tensor::scalar(acc / n), {prediction, target},
                                  [prediction, target, n](Tape& tape, const Tensor& g) {
                                    const Tensor& p = prediction.value();
                                    const Tensor& t = target.value();
                                    const double scale = g[0] / n;
                                    for (int side = 0; side < 2; ++side) {
                                      const Var& v = side == 0 ? prediction : target;
                                      if (!v.requires_grad()) continue;
                                      const double sgn = side == 0 ? 1.0 : -1.0;
                                      Tensor& d = tape.grad_buffer(v);
                                      for (std::size_t i = 0; i < p.size(); ++i) {
                                        const double diff = p[i] - t[i];
                                        const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                                        d[i] += sgn * s * scale;
                                      }
                                    }
                                  });
}

Var mse_loss(Var prediction, Var target) {
  if (prediction.shape() != target.shape()) shape_error("mse_loss", prediction.shape(), target.shape());
  const Tensor& p = prediction.value();
  const Tensor& t = target.value();
  const double n = static_cast<double>(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    acc += d * d;
  }
  return prediction.tape().record(Tensor::scalar(acc / n), {prediction, target},
                                  [prediction, target, n](Tape& tape, const Tensor& g) {
                                    const Tensor& p = prediction.value();
                                    const Tensor& t = target.value();
                                    const double scale = 2.0 * g[0] / n;
                                    if (prediction.requires_grad()) {
                                      Tensor& d = tape.grad_buffer(prediction);
                                      for (std::size_t i = 0; i < p.size(); ++i) d[i] += (p[i] - t[i]) * scale;
                                    }
                                    if (target.requires_grad()) {
                                      Tensor& d = tape.grad_buffer(target);
                                      for (std::size_t i = 0; i < p.size(); ++i) d[i] -= (p[i] - t[i]) * scale;
                                    }
                                  });
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& targets) {
  require_rank("softmax_cross_entropy", logits, 2);
  const std::size_t rows = logits.shape()[0], classes = logits.shape()[1];
  if (targets.size() != rows) {
    throw Error(ErrorKind::ShapeMismatch, "softmax_cross_entropy: " + shape_string(logits.shape()) + " vs targets [" +
                                              std::to_string(targets.size()) + "]");
  }
  Tensor probs({rows, classes});
  double loss = 0.0;
  std::size_t kept = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* z = logits.value().data() + r * classes;
    const double mx = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(z[c] - mx);
    const double log_sum = std::log(sum) + mx;
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] = std::exp(z[c] - log_sum);
    if (targets[r] < 0) continue;
    if (static_cast<std::size_t>(targets[r]) >= classes) {
      throw Error(ErrorKind::IndexOutOfRange, "target " + std::to_string(targets[r]) + " >= " + std::to_string(classes));
    }
    loss += log_sum - z[targets[r]];
    ++kept;
  }
  if (kept == 0) {
    throw Error(ErrorKind::EmptyInput, "softmax_cross_entropy: every row is ignored");
  }
  const double n = static_cast<double>(kept);
  return logits.tape().record(
      Tensor::scalar(loss / n), {logits},
      [logits, targets, probs = std::move(probs), rows, classes, n](Tape& tape, const Tensor& g) {
        Tensor& d = tape.grad_buffer(logits);
        const double scale = g[0] / n;
        for (std::size_t r = 0; r < rows; ++r) {
          if (targets[r] < 0) continue;
          for (std::size_t c = 0; c < classes; ++c) d[r * classes + c] += probs[r * classes + c] * scale;
          d[r * classes + static_cast<std::size_t>(targets[r])] -= scale;
        }
      });
}

Var embedding(Var table, const std::vector<int>& ids) {
  require_rank("embedding", table, 2);
  const std::size_t vocab = table.shape()[0], width = table.shape()[1];
  Tensor out({ids.size(), width});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw Error(ErrorKind::IndexOutOfRange, "embedding id " + std::to_string(ids[i]) + " outside [0, " +
                                                  std::to_string(vocab) + ")");
    }
    std::copy_n(table.value().data() + static_cast<std::size_t>(ids[i]) * width, width, out.data() + i * width);
  }
  return table.tape().record(std::move(out), {table}, [table, ids, width](Tape& tape, const Tensor& g) {
    double* d = tape.grad_buffer(table).data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double* row = d + static_cast<std::size_t>(ids[i]) * width;
      for (std::size_t k = 0; k < width; ++k) row[k] += g[i * width + k];
    }
  });
}

Var causal_softmax(Var scores) {
  require_rank("causal_softmax", scores, 2);
  const std::size_t rows = scores.shape()[0], cols = scores.shape()[1];
  if (cols < rows) shape_error("causal_softmax", scores.shape(), {rows, rows});
  const std::size_t offset = cols - rows;
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t allowed = r + offset + 1;
    const double* z = scores.value().data() + r * cols;
    const double mx = *std::max_element(z, z + allowed);
    double sum = 0.0;
    for (std::size_t c = 0; c < allowed; ++c) sum += std::exp(z[c] - mx);
    for (std::size_t c = 0; c < allowed; ++c) out[r * cols + c] = std::exp(z[c] - mx) / sum;
  }
  Tensor probs = out;
  return scores.tape().record(std::move(out), {scores},
                              [scores, probs = std::move(probs), rows, cols, offset](Tape& tape, const Tensor& g) {
                                Tensor& d = tape.grad_buffer(scores);
                                for (std::size_t r = 0; r < rows; ++r) {
                                  const std::size_t allowed = r + offset + 1;
                                  const double* p = probs.data() + r * cols;
                                  const double* gr = g.data() + r * cols;
                                  double dot = 0.0;
                                  for (std::size_t c = 0; c < allowed; ++c) dot += p[c] * gr[c];
                                  for (std::size_t c = 0; c < allowed; ++c) d[r * cols + c] += p[c] * (gr[c] - dot);
                                }
                              });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  require_rank("layer_norm", x, 2);
  const std::size_t rows = x.shape()[0], width = x.shape()[1];
  if (gamma.value().size() != width) shape_error("layer_norm", x.shape(), gamma.shape());
  if (beta.value().size() != width) shape_error("layer_norm", x.shape(), beta.shape());
  Tensor out({rows, width});
  std::vector<double> xhat(rows * width), inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* v = x.value().data() + r * width;
    double mean = 0.0;
    for (std::size_t k = 0; k < width; ++k) mean += v[k];
    mean /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t k = 0; k < width; ++k) var += (v[k] - mean) * (v[k] - mean);
    var /= static_cast<double>(width);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t k = 0; k < width; ++k) {
      xhat[r * width + k] = (v[k] - mean) * inv_std[r];
      out[r * width + k] = xhat[r * width + k] * gamma.value()[k] + beta.value()[k];
    }
  }
  return x.tape().record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, rows, width, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tape,
                                                                                         const Tensor& g) {
        if (gamma.requires_grad()) {
          Tensor& dg = tape.grad_buffer(gamma);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t k = 0; k < width; ++k) dg[k] += g[r * width + k] * xhat[r * width + k];
        }
        if (beta.requires_grad()) {
          Tensor& db = tape.grad_buffer(beta);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t k = 0; k < width; ++k) db[k] += g[r * width + k];
        }
        if (x.requires_grad()) {
          Tensor& dx = tape.grad_buffer(x);
          const double w = static_cast<double>(width);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t k = 0; k < width; ++k) {
              const double dh = g[r * width + k] * gamma.value()[k];
              mean_d += dh;
              mean_dx += dh * xhat[r * width + k];
            }
            mean_d /= w;
            mean_dx /= w;
            for (std::size_t k = 0; k < width; ++k) {
              const double dh = g[r * width + k] * gamma.value()[k];
              dx[r * width + k] += inv_std[r] * (dh - mean_d - xhat[r * width + k] * mean_dx);
            }
          }
        }
      });
}

Var straight_through(Var z, const Tensor& quantized) {
  if (z.shape() != quantized.shape()) shape_error("straight_through", z.shape(), quantized.shape());
  return z.tape().record(quantized, {z}, [z](Tape& tape, const Tensor& g) {
    Tensor& d = tape.grad_buffer(z);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

}  // namespace ot2m::nn
