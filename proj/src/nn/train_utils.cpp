#include "ot2m/nn/train_utils.hpp"

#include <algorithm>
#include <cmath>

#include "ot2m/binary_io.hpp"
#include "ot2m/error.hpp"

namespace ot2m::nn {

namespace {

double evaluate(const ScalarFunction& f, const Tensor& x) {
  Tape tape;
  const Var out = f(tape, tape.constant(x));
  const double v = out.value().item();
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::NonFinite, "grad_check probe produced a non-finite value");
  }
  return v;
}

}  // namespace

double grad_check(const ScalarFunction& f, const Tensor& x, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    throw Error(ErrorKind::InvalidArgument, "grad_check eps must lie in [1e-6, 1e-3]");
  }
  Tape tape;
  const Var input = tape.leaf(x);
  const Var out = f(tape, input);
  if (!std::isfinite(out.value().item())) {
    throw Error(ErrorKind::NonFinite, "grad_check function value is non-finite");
  }
  tape.backward(out);
  const Tensor analytic = input.grad();
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double plus = evaluate(f, probe);
    probe[i] = x[i] - eps;
    const double minus = evaluate(f, probe);
    probe[i] = x[i];
    const double numeric = (plus - minus) / (2.0 * eps);
    if (!std::isfinite(analytic[i])) {
      throw Error(ErrorKind::NonFinite, "analytic gradient is non-finite");
    }
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

void sgd_step(std::span<Parameter* const> params, double lr) {
  for (Parameter* p : params) {
    if (p->grad.shape() != p->value.shape()) {
      throw Error(ErrorKind::ShapeMismatch, "sgd_step: " + p->name + " value " + shape_string(p->value.shape()) +
                                                " vs grad " + shape_string(p->grad.shape()));
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * p->grad[i];
  }
}

Adam::Adam(std::vector<Parameter*> params, double lr, AdamHyper hyper)
    : params_(std::move(params)), lr_(lr), hyper_(hyper) {
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (p.grad.shape() != p.value.shape()) {
      throw Error(ErrorKind::ShapeMismatch, "adam_step: " + p.name + " value " + shape_string(p.value.shape()) +
                                                " vs grad " + shape_string(p.grad.shape()));
    }
    std::vector<double>& m = m_[k];
    std::vector<double>& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = hyper_.beta1 * m[i] + (1.0 - hyper_.beta1) * g;
      v[i] = hyper_.beta2 * v[i] + (1.0 - hyper_.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + hyper_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Checkpoint::put(const std::string& name, const Tensor& value) {
  for (auto& [n, t] : entries_) {
    if (n == name) {
      t = value;
      return;
    }
  }
  entries_.emplace_back(name, value);
}

bool Checkpoint::has(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw Error(ErrorKind::MalformedStream, "checkpoint has no tensor named '" + name + "'");
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

std::vector<char> Checkpoint::encode() const {
  binary::Writer w;
  w.magic("OT2W");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, t] : entries_) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.values()) w.f32(static_cast<float>(v));
  }
  return w.take();
}

Checkpoint Checkpoint::decode(std::span<const char> bytes) {
  binary::Reader r(bytes);
  r.expect_magic("OT2W");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::MalformedStream, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  Checkpoint ck;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.raw(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank > 4) {
      throw Error(ErrorKind::MalformedStream, "tensor '" + name + "' has rank " + std::to_string(rank));
    }
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t n = shape_size(shape);
    if (r.remaining() < n * 4) {
      throw Error(ErrorKind::MalformedStream, "tensor '" + name + "' is truncated");
    }
    std::vector<double> data(n);
    for (auto& v : data) v = r.f32();
    ck.entries_.emplace_back(name, Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) {
    throw Error(ErrorKind::MalformedStream, "trailing bytes after checkpoint table");
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const { binary::write_file(path, encode()); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) { return decode(binary::read_file(path)); }

}  // namespace ot2m::nn
