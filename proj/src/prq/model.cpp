#include "ot2m/prq/model.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "ot2m/error.hpp"
#include "ot2m/nn/train_utils.hpp"

namespace ot2m::prq {

using nn::Conv2dSpec;
using nn::Parameter;
using nn::Tape;
using nn::Tensor;
using nn::Var;

std::size_t TokenizerConfig::num_blocks() const {
  return static_cast<std::size_t>(std::countr_zero(alpha));
}

void TokenizerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  if (alpha != 2 && alpha != 4 && alpha != 8) fail("alpha must be 2, 4 or 8, got " + std::to_string(alpha));
  if (layers < 1) fail("tokenizer needs at least one residual layer");
  if (!(beta >= 0.0)) fail("beta must be non-negative");
  if (codebook_size < 1 || codebook_size > 65536) fail("codebook size must be in [1, 65536]");
  if (latent_dim < 1 || width < 1) fail("latent dim and width must be positive");
  if (!(learning_rate > 0.0)) fail("learning rate must be positive");
  if (batch_size < 1) fail("batch size must be positive");
  if (crop_frames < alpha || crop_frames % alpha != 0) fail("crop length must be a positive multiple of alpha");
  if (!(ema_decay > 0.0 && ema_decay < 1.0)) fail("EMA decay must lie in (0, 1)");
  if (!(laplace_eps > 0.0)) fail("Laplace smoothing must be positive");
  if (!(grad_clip >= 0.0)) fail("gradient clip must be non-negative");
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) fail("final lr fraction must lie in (0, 1]");
}

TokenizerModel::TokenizerModel(const TokenizerConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t w = cfg_.width, dz = cfg_.latent_dim;
  const Conv2dSpec same{{1, 1}, {1, 1}};
  const Conv2dSpec down{{1, 2}, {1, 1}};
  const Conv2dSpec point{{1, 1}, {0, 0}};
  // Reserve so the Parameter addresses stay stable for the tape.
  params_.reserve(4 + 12 * cfg_.num_blocks());
  std::uint64_t seed = cfg_.seed * 1000003ULL + 17;
  enc_in_ = add_conv("enc.in", kPartFeatureDim, w, 1, point, seed++);
  for (std::size_t b = 0; b < cfg_.num_blocks(); ++b) {
    const std::string n = "enc.block" + std::to_string(b);
    enc_blocks_.push_back({add_conv(n + ".down", w, w, 3, down, seed++), add_conv(n + ".conv1", w, w, 3, same, seed++),
                           add_conv(n + ".conv2", w, w, 3, same, seed++)});
  }
  enc_out_ = add_conv("enc.out", w, dz, 1, point, seed++);
  dec_in_ = add_conv("dec.in", dz, w, 1, point, seed++);
  for (std::size_t b = 0; b < cfg_.num_blocks(); ++b) {
    const std::string n = "dec.block" + std::to_string(b);
    dec_blocks_.push_back({add_conv(n + ".up", w, w, 3, same, seed++), add_conv(n + ".conv1", w, w, 3, same, seed++),
                           add_conv(n + ".conv2", w, w, 3, same, seed++)});
  }
  dec_out_ = add_conv("dec.out", w, kPartFeatureDim, 1, point, seed++);
}

TokenizerModel::Conv TokenizerModel::add_conv(const std::string& name, std::size_t in, std::size_t out,
                                              std::size_t kernel, Conv2dSpec spec, std::uint64_t seed) {
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel * kernel));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor w({out, in, kernel, kernel});
  for (double& v : w.storage()) v = u(rng);
  Tensor b({out});
  for (double& v : b.storage()) v = u(rng);
  Conv c;
  c.spec = spec;
  c.weight = params_.size();
  params_.emplace_back(name + ".weight", std::move(w));
  c.bias = params_.size();
  params_.emplace_back(name + ".bias", std::move(b));
  return c;
}

std::vector<Parameter*> TokenizerModel::parameter_ptrs() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

Parameter& TokenizerModel::parameter(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw Error(ErrorKind::InvalidArgument, "no tokenizer parameter named " + name);
}

void TokenizerModel::zero_encoder_output() {
  params_[enc_out_.weight].value.fill(0.0);
  params_[enc_out_.bias].value.fill(0.0);
}

Var TokenizerModel::apply(const Conv& c, Var x, const Bind& bind) const {
  return nn::layer_bias(nn::conv2d(x, bind(c.weight), c.spec), bind(c.bias), 1);
}

Var TokenizerModel::block(const Block& b, Var x, const Bind& bind) const {
  Var h = apply(b.entry, x, bind);
  Var r = apply(b.second, nn::relu(apply(b.first, nn::relu(h), bind)), bind);
  return nn::add(h, r);
}

Var TokenizerModel::run_encoder(Var x, const Bind& bind) const {
  const nn::Shape& s = x.shape();
  if (s.size() != 4 || s[1] != kPartFeatureDim || s[2] != kNumParts) {
    throw Error(ErrorKind::ShapeMismatch, "encoder expects [N, 71, 5, T], got " + nn::shape_string(s));
  }
  if (s[3] < cfg_.alpha) {
    throw Error(ErrorKind::TooShort, "encoder needs at least " + std::to_string(cfg_.alpha) + " frames, got " +
                                         std::to_string(s[3]));
  }
  Var h = apply(enc_in_, x, bind);
  for (const Block& b : enc_blocks_) h = block(b, h, bind);
  return apply(enc_out_, nn::relu(h), bind);
}

Var TokenizerModel::run_decoder(Var z, const Bind& bind) const {
  const nn::Shape& s = z.shape();
  if (s.size() != 4 || s[1] != cfg_.latent_dim || s[2] != kNumParts) {
    throw Error(ErrorKind::ShapeMismatch, "decoder expects [N, d_z, 5, n], got " + nn::shape_string(s));
  }
  Var h = apply(dec_in_, z, bind);
  for (const Block& b : dec_blocks_) h = block(b, nn::upsample_nearest_width2(h), bind);
  return apply(dec_out_, nn::relu(h), bind);
}

Var TokenizerModel::encode(Tape& tape, Var x) {
  return run_encoder(x, [&](std::size_t i) { return tape.parameter(params_[i]); });
}

Var TokenizerModel::decode(Tape& tape, Var z) {
  return run_decoder(z, [&](std::size_t i) { return tape.parameter(params_[i]); });
}

Var TokenizerModel::encode(Tape& tape, Var x) const {
  return run_encoder(x, [&](std::size_t i) { return tape.constant(params_[i].value); });
}

Var TokenizerModel::decode(Tape& tape, Var z) const {
  return run_decoder(z, [&](std::size_t i) { return tape.constant(params_[i].value); });
}

namespace {

struct MergeMap {
  std::vector<std::size_t> target;  // part-local (part, k) -> whole-body channel
  std::vector<double> weight;       // 1 / multiplicity of the target channel
};

MergeMap build_merge_map(const Skeleton& sk) {
  MergeMap map;
  map.target.resize(kNumParts * kPartFeatureDim);
  std::vector<double> count(sk.feature_dim(), 0.0);
  for (std::size_t p = 0; p < kNumParts; ++p) {
    std::size_t k = 0;
    for (std::size_t joint : sk.part_map[p]) {
      const std::size_t o = sk.block_offset(joint);
      for (std::size_t i = 0; i < kJointFeatureDim; ++i) map.target[p * kPartFeatureDim + k++] = o + i;
    }
    for (std::size_t i = 0; i < kRootChannels + kContactChannels; ++i) {
      map.target[p * kPartFeatureDim + k++] = sk.root_offset() + i;
    }
  }
  for (std::size_t c : map.target) count[c] += 1.0;
  map.weight.resize(map.target.size());
  for (std::size_t i = 0; i < map.target.size(); ++i) map.weight[i] = 1.0 / count[map.target[i]];
  return map;
}

}  // namespace

Var part_merge(Var parts, const Skeleton& skeleton) {
  const nn::Shape s = parts.shape();
  if (s.size() != 4 || s[1] != kPartFeatureDim || s[2] != kNumParts) {
    throw Error(ErrorKind::ShapeMismatch, "part_merge expects [N, 71, 5, T], got " + nn::shape_string(s));
  }
  const std::size_t n = s[0], frames = s[3], dim = skeleton.feature_dim();
  const MergeMap map = build_merge_map(skeleton);
  Tensor out({n, dim, frames});
  const Tensor& x = parts.value();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t k = 0; k < kPartFeatureDim; ++k) {
      for (std::size_t p = 0; p < kNumParts; ++p) {
        const std::size_t m = p * kPartFeatureDim + k;
        const double* src = x.data() + ((b * kPartFeatureDim + k) * kNumParts + p) * frames;
        double* dst = out.data() + (b * dim + map.target[m]) * frames;
        for (std::size_t t = 0; t < frames; ++t) dst[t] += map.weight[m] * src[t];
      }
    }
  }
  return parts.tape().record(std::move(out), {parts}, [parts, map, s, dim](Tape& tape, const Tensor& g) {
    Tensor& gx = tape.grad_buffer(parts);
    const std::size_t n = s[0], frames = s[3];
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t k = 0; k < kPartFeatureDim; ++k) {
        for (std::size_t p = 0; p < kNumParts; ++p) {
          const std::size_t m = p * kPartFeatureDim + k;
          double* dst = gx.data() + ((b * kPartFeatureDim + k) * kNumParts + p) * frames;
          const double* src = g.data() + (b * dim + map.target[m]) * frames;
          for (std::size_t t = 0; t < frames; ++t) dst[t] += map.weight[m] * src[t];
        }
      }
    }
  });
}

nn::GradcheckCase part_merge_gradcheck_case() {
  return {"part_merge", [](std::mt19937_64& rng, double eps) {
            const std::size_t frames = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
            const Tensor x = nn::random_tensor({1, kPartFeatureDim, kNumParts, frames}, rng);
            Tape probe;
            const Tensor r = nn::random_tensor(part_merge(probe.constant(x)).shape(), rng);
            return nn::grad_check([&](Tape&, Var v) { return nn::project(part_merge(v), r); }, x, eps);
          }};
}

}  // namespace ot2m::prq
