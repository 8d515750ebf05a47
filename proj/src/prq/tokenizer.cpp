#include "ot2m/prq/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ot2m/error.hpp"

namespace ot2m::prq {

using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

Vec3 horizontal_root(const MotionSequence& m, std::size_t t) {
  const Skeleton& sk = m.skeleton();
  const Vec3 mid = 0.5 * (m.position(t, sk.hip_joints[0]) + m.position(t, sk.hip_joints[1]));
  return {mid.x(), 0.0, mid.z()};
}

std::vector<double> headings(const MotionSequence& m) {
  std::vector<double> h(m.num_frames(), 0.0);
  for (std::size_t t = 0; t < m.num_frames(); ++t) {
    try {
      h[t] = yaw_of(m.facing(t));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::GimbalDegenerate) throw;
      h[t] = t > 0 ? h[t - 1] : 0.0;
    }
  }
  return h;
}

}  // namespace

Placement placement_of(const MotionSequence& m) { return {headings(m.slice(0, 1))[0], horizontal_root(m, 0)}; }

FrameMatrix to_canonical(const MotionSequence& m) {
  const Placement at = placement_of(m);
  return transform_motion(m, -at.yaw, -(yaw_rotation(-at.yaw) * at.offset)).frames();
}

MotionSequence from_canonical(const FrameMatrix& canonical, double fps, const Placement& start) {
  return transform_motion(MotionSequence(canonical, fps, Skeleton::body()), start.yaw, start.offset);
}

FeatureNormalizer FeatureNormalizer::identity(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

FeatureNormalizer FeatureNormalizer::fit(const std::vector<FrameMatrix>& frames, double min_scale) {
  if (frames.empty()) {
    throw Error(ErrorKind::EmptyInput, "cannot fit a normalizer on zero clips");
  }
  const auto dim = static_cast<std::size_t>(frames.front().cols());
  std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
  double count = 0.0;
  for (const auto& f : frames) {
    for (Eigen::Index t = 0; t < f.rows(); ++t) {
      for (std::size_t i = 0; i < dim; ++i) {
        const double v = f(t, static_cast<Eigen::Index>(i));
        sum[i] += v;
        sq[i] += v * v;
      }
    }
    count += static_cast<double>(f.rows());
  }
  FeatureNormalizer n{std::vector<double>(dim), std::vector<double>(dim)};
  for (std::size_t i = 0; i < dim; ++i) {
    n.mean[i] = sum[i] / count;
    const double var = std::max(0.0, sq[i] / count - n.mean[i] * n.mean[i]);
    n.scale[i] = std::max(std::sqrt(var), min_scale);
  }
  return n;
}

FrameMatrix FeatureNormalizer::normalize(const FrameMatrix& frames) const {
  if (static_cast<std::size_t>(frames.cols()) != mean.size()) {
    throw Error(ErrorKind::ShapeMismatch, "normalizer width " + std::to_string(mean.size()) + " vs frames width " +
                                              std::to_string(frames.cols()));
  }
  FrameMatrix out(frames.rows(), frames.cols());
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (Eigen::Index i = 0; i < frames.cols(); ++i) out(t, i) = (frames(t, i) - mean[i]) / scale[i];
  }
  return out;
}

FrameMatrix FeatureNormalizer::denormalize(const FrameMatrix& frames) const {
  if (static_cast<std::size_t>(frames.cols()) != mean.size()) {
    throw Error(ErrorKind::ShapeMismatch, "normalizer width " + std::to_string(mean.size()) + " vs frames width " +
                                              std::to_string(frames.cols()));
  }
  FrameMatrix out(frames.rows(), frames.cols());
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (Eigen::Index i = 0; i < frames.cols(); ++i) out(t, i) = frames(t, i) * scale[i] + mean[i];
  }
  return out;
}

MotionSequence pad_to(const MotionSequence& m, std::size_t frames) {
  if (frames <= m.num_frames()) return m;
  FrameMatrix f(static_cast<Eigen::Index>(frames), m.frames().cols());
  f.topRows(m.frames().rows()) = m.frames();
  for (Eigen::Index t = m.frames().rows(); t < f.rows(); ++t) f.row(t) = m.frames().row(m.frames().rows() - 1);
  return MotionSequence(std::move(f), m.fps(), m.skeleton());
}

Tensor parts_to_tensor(const std::vector<PartSet>& parts) {
  if (parts.empty()) {
    throw Error(ErrorKind::EmptyInput, "no part sets to stack");
  }
  const std::size_t frames = parts.front().num_frames();
  Tensor out({parts.size(), kPartFeatureDim, kNumParts, frames});
  for (std::size_t b = 0; b < parts.size(); ++b) {
    if (parts[b].num_frames() != frames) {
      throw Error(ErrorKind::ShapeMismatch, "part sets of different lengths in one batch");
    }
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t p = 0; p < kNumParts; ++p) {
        for (std::size_t k = 0; k < kPartFeatureDim; ++k) {
          out[((b * kPartFeatureDim + k) * kNumParts + p) * frames + t] = parts[b].at(t, p, k);
        }
      }
    }
  }
  return out;
}

PartSet tensor_to_parts(const Tensor& x, std::size_t index) {
  const nn::Shape& s = x.shape();
  if (s.size() != 4 || s[1] != kPartFeatureDim || s[2] != kNumParts || index >= s[0]) {
    throw Error(ErrorKind::ShapeMismatch, "expected [N, 71, 5, T], got " + nn::shape_string(s));
  }
  const std::size_t frames = s[3];
  PartSet ps(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t p = 0; p < kNumParts; ++p) {
      for (std::size_t k = 0; k < kPartFeatureDim; ++k) {
        ps.at(t, p, k) = x[((index * kPartFeatureDim + k) * kNumParts + p) * frames + t];
      }
    }
  }
  return ps;
}

namespace {

/// Rows ordered (batch, step, part) from a [N, d, 5, n] tensor.
RowMatrix latents_to_rows(const Tensor& z) {
  const std::size_t n = z.dim(0), dim = z.dim(1), steps = z.dim(3);
  RowMatrix rows(static_cast<Eigen::Index>(n * steps * kNumParts), static_cast<Eigen::Index>(dim));
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < dim; ++c) {
      for (std::size_t p = 0; p < kNumParts; ++p) {
        for (std::size_t t = 0; t < steps; ++t) {
          rows(static_cast<Eigen::Index>((b * steps + t) * kNumParts + p), static_cast<Eigen::Index>(c)) =
              z[((b * dim + c) * kNumParts + p) * steps + t];
        }
      }
    }
  }
  return rows;
}

Tensor rows_to_latents(const RowMatrix& rows, const nn::Shape& shape) {
  const std::size_t n = shape[0], dim = shape[1], steps = shape[3];
  Tensor z(shape);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < dim; ++c) {
      for (std::size_t p = 0; p < kNumParts; ++p) {
        for (std::size_t t = 0; t < steps; ++t) {
          z[((b * dim + c) * kNumParts + p) * steps + t] =
              rows(static_cast<Eigen::Index>((b * steps + t) * kNumParts + p), static_cast<Eigen::Index>(c));
        }
      }
    }
  }
  return z;
}

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

/// Re-orthonormalizes 6D blocks and snaps contacts to {0, 1}.
void clean_features(FrameMatrix& f, const Skeleton& sk) {
  for (Eigen::Index t = 0; t < f.rows(); ++t) {
    for (std::size_t j = 0; j < sk.num_joints(); ++j) {
      if (j == sk.root) continue;
      const std::size_t o = sk.block_offset(j);
      SixD six;
      for (std::size_t i = 0; i < 6; ++i) six[i] = f(t, o + i);
      Mat3 r = Mat3::Identity();
      try {
        r = sixd_to_matrix(six);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateRotation) throw;
      }
      six = matrix_to_sixd(r);
      for (std::size_t i = 0; i < 6; ++i) f(t, o + i) = six[i];
    }
    for (std::size_t c = 0; c < kContactChannels; ++c) {
      double& v = f(t, sk.contact_offset() + c);
      v = v >= 0.5 ? 1.0 : 0.0;
    }
  }
}

}  // namespace

Tokenizer::Tokenizer(const TokenizerConfig& cfg)
    : model_(cfg),
      codebook_(cfg.codebook_size, cfg.latent_dim),
      normalizer_(FeatureNormalizer::identity(Skeleton::body().feature_dim())) {}

LatentGrid Tokenizer::encode(const PartSet& parts) const {
  Tape tape;
  const Var z = model_.encode(tape, tape.constant(parts_to_tensor({parts})));
  const Tensor& zv = z.value();
  const std::size_t dim = zv.dim(1), steps = zv.dim(3);
  LatentGrid out(kNumParts, steps, dim);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t p = 0; p < kNumParts; ++p) {
      for (std::size_t t = 0; t < steps; ++t) out.at(p, t)[c] = zv[(c * kNumParts + p) * steps + t];
    }
  }
  return out;
}

PartSet Tokenizer::decode(const TokenGrid& tokens) const {
  const LatentGrid q = dequantize(tokens, codebook_);
  const std::size_t dim = q.dim(), steps = q.steps();
  Tensor z({1, dim, kNumParts, steps});
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t p = 0; p < kNumParts; ++p) {
      for (std::size_t t = 0; t < steps; ++t) z[(c * kNumParts + p) * steps + t] = q.at(p, t)[c];
    }
  }
  Tape tape;
  const Var y = model_.decode(tape, tape.constant(std::move(z)));
  return tensor_to_parts(y.value(), 0);
}

TokenGrid Tokenizer::tokenize(const MotionSequence& m) const {
  const std::size_t alpha = config().alpha;
  if (m.num_frames() < alpha) {
    throw Error(ErrorKind::TooShort, "clip of " + std::to_string(m.num_frames()) + " frames is shorter than alpha " +
                                         std::to_string(alpha));
  }
  const MotionSequence padded = pad_to(m, round_up(m.num_frames(), alpha));
  const MotionSequence normalized(normalizer_.normalize(to_canonical(padded)), m.fps(), m.skeleton());
  return rq_quantize(encode(split_parts(normalized)), codebook_, config().layers).tokens;
}

MotionSequence Tokenizer::detokenize(const TokenGrid& tokens, double fps, const Placement& start) const {
  const Skeleton& sk = Skeleton::body();
  const MotionSequence merged = merge_parts(decode(tokens), fps, sk);
  FrameMatrix f = normalizer_.denormalize(merged.frames());
  clean_features(f, sk);
  return from_canonical(f, fps, start);
}

Reconstruction Tokenizer::reconstruct(const MotionSequence& m) const {
  TokenGrid tokens = tokenize(m);
  MotionSequence motion = detokenize(tokens, m.fps(), placement_of(m));
  return {std::move(motion), std::move(tokens)};
}

nn::Checkpoint Tokenizer::to_checkpoint() const {
  const TokenizerConfig& c = config();
  nn::Checkpoint ck;
  ck.put_scalar("config.alpha", static_cast<double>(c.alpha));
  ck.put_scalar("config.layers", static_cast<double>(c.layers));
  ck.put_scalar("config.codebook_size", static_cast<double>(c.codebook_size));
  ck.put_scalar("config.latent_dim", static_cast<double>(c.latent_dim));
  ck.put_scalar("config.width", static_cast<double>(c.width));
  ck.put_scalar("config.beta", c.beta);
  for (const auto& p : model_.parameters()) ck.put("model." + p.name, p.value);
  const std::size_t k = codebook_.size(), dim = codebook_.dim();
  const RowMatrix& codes = codebook_.codes();
  ck.put("codebook.codes", Tensor({k, dim}, std::vector<double>(codes.data(), codes.data() + codes.size())));
  ck.put("codebook.ema_counts", Tensor({k}, codebook_.ema_counts()));
  const RowMatrix& sums = codebook_.ema_sums();
  ck.put("codebook.ema_sums", Tensor({k, dim}, std::vector<double>(sums.data(), sums.data() + sums.size())));
  ck.put("normalizer.mean", Tensor({normalizer_.mean.size()}, normalizer_.mean));
  ck.put("normalizer.scale", Tensor({normalizer_.scale.size()}, normalizer_.scale));
  return ck;
}

Tokenizer Tokenizer::from_checkpoint(const nn::Checkpoint& ck) {
  TokenizerConfig c;
  c.alpha = static_cast<std::size_t>(ck.scalar("config.alpha"));
  c.layers = static_cast<std::size_t>(ck.scalar("config.layers"));
  c.codebook_size = static_cast<std::size_t>(ck.scalar("config.codebook_size"));
  c.latent_dim = static_cast<std::size_t>(ck.scalar("config.latent_dim"));
  c.width = static_cast<std::size_t>(ck.scalar("config.width"));
  c.beta = ck.scalar("config.beta");
  Tokenizer tok(c);
  for (auto& p : tok.model_.parameters()) {
    const Tensor& v = ck.get("model." + p.name);
    if (v.shape() != p.value.shape()) {
      throw Error(ErrorKind::ShapeMismatch, "checkpoint tensor " + p.name + " has shape " + nn::shape_string(v.shape()) +
                                                ", model expects " + nn::shape_string(p.value.shape()));
    }
    p.value = v;
    p.zero_grad();
  }
  auto to_rows = [&](const std::string& name) {
    const Tensor& t = ck.get(name);
    if (t.shape() != nn::Shape{c.codebook_size, c.latent_dim}) {
      throw Error(ErrorKind::ShapeMismatch, "checkpoint tensor " + name + " has shape " + nn::shape_string(t.shape()));
    }
    RowMatrix m(static_cast<Eigen::Index>(c.codebook_size), static_cast<Eigen::Index>(c.latent_dim));
    std::copy(t.storage().begin(), t.storage().end(), m.data());
    return m;
  };
  tok.codebook_ = Codebook(to_rows("codebook.codes"));
  tok.codebook_.restore_state(ck.get("codebook.ema_counts").storage(), to_rows("codebook.ema_sums"));
  tok.normalizer_.mean = ck.get("normalizer.mean").storage();
  tok.normalizer_.scale = ck.get("normalizer.scale").storage();
  const std::size_t dim = Skeleton::body().feature_dim();
  if (tok.normalizer_.mean.size() != dim || tok.normalizer_.scale.size() != dim) {
    throw Error(ErrorKind::ShapeMismatch, "checkpoint normalizer width does not match the skeleton");
  }
  return tok;
}

TokenizerTrainer::TokenizerTrainer(Tokenizer& tokenizer)
    : tok_(tokenizer),
      adam_(tokenizer.model().parameter_ptrs(), tokenizer.config().learning_rate),
      rng_(tokenizer.config().seed * 0x9E3779B97F4A7C15ULL + 1) {}

double TokenizerTrainer::current_lr() const {
  const TokenizerConfig& c = tok_.config();
  const auto step = static_cast<double>(steps_);
  if (c.warmup_steps > 0 && steps_ < c.warmup_steps) {
    return c.learning_rate * (step + 1.0) / static_cast<double>(c.warmup_steps);
  }
  if (horizon_ <= c.warmup_steps) return c.learning_rate;
  const double progress = std::min(1.0, (step - static_cast<double>(c.warmup_steps)) /
                                            static_cast<double>(horizon_ - c.warmup_steps));
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return c.learning_rate * (c.final_lr_fraction + (1.0 - c.final_lr_fraction) * cosine);
}

std::vector<MotionSequence> TokenizerTrainer::sample_batch(const std::vector<MotionSequence>& corpus) {
  const TokenizerConfig& c = tok_.config();
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].num_frames() >= c.alpha) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw Error(ErrorKind::EmptyInput, "no clip has at least alpha frames");
  }
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  std::vector<MotionSequence> batch;
  batch.reserve(c.batch_size);
  for (std::size_t b = 0; b < c.batch_size; ++b) {
    const MotionSequence& clip = corpus[eligible[pick(rng_)]];
    if (clip.num_frames() <= c.crop_frames) {
      batch.push_back(pad_to(clip, c.crop_frames));
    } else {
      std::uniform_int_distribution<std::size_t> start(0, clip.num_frames() - c.crop_frames);
      const std::size_t s = start(rng_);
      batch.push_back(clip.slice(s, s + c.crop_frames));
    }
  }
  return batch;
}

void TokenizerTrainer::init_codebook(const RowMatrix& latents) {
  // Codes are split evenly over the layers; each chunk is drawn from the
  // residuals left by quantizing with the chunks before it.
  const TokenizerConfig& c = tok_.config();
  const auto k_codes = static_cast<Eigen::Index>(c.codebook_size);
  const auto layers = static_cast<Eigen::Index>(c.layers);
  RowMatrix codes = RowMatrix::Zero(k_codes, latents.cols());
  RowMatrix residual = latents;
  std::uniform_int_distribution<Eigen::Index> pick(0, latents.rows() - 1);
  Eigen::Index filled = 0;
  for (Eigen::Index layer = 0; layer < layers; ++layer) {
    const Eigen::Index end = layer + 1 == layers ? k_codes : (layer + 1) * k_codes / layers;
    for (Eigen::Index k = filled; k < end; ++k) codes.row(k) = residual.row(pick(rng_));
    filled = end;
    if (filled == 0) continue;
    const Codebook partial(codes.topRows(filled));
    const RowQuantization q = quantize_rows(residual, partial, 1);
    for (Eigen::Index i = 0; i < residual.rows(); ++i) residual.row(i) -= codes.row(q.indices[static_cast<std::size_t>(i)]);
  }
  tok_.codebook() = Codebook(std::move(codes));
  initialized_ = true;
}

LossBreakdown TokenizerTrainer::train_step(const std::vector<MotionSequence>& batch) {
  if (batch.empty()) {
    throw Error(ErrorKind::EmptyInput, "empty training batch");
  }
  const TokenizerConfig& c = tok_.config();
  const std::size_t frames = batch.front().num_frames();
  for (const auto& m : batch) {
    if (m.num_frames() != frames) {
      throw Error(ErrorKind::ShapeMismatch, "training batch mixes clip lengths " + std::to_string(frames) + " and " +
                                                std::to_string(m.num_frames()));
    }
  }
  if (frames < c.alpha) {
    throw Error(ErrorKind::TooShort, "training clips must have at least alpha frames");
  }
  const std::size_t padded = round_up(frames, c.alpha);
  const std::size_t n = batch.size();
  const std::size_t dim = Skeleton::body().feature_dim();

  std::vector<PartSet> parts;
  Tensor whole({n, dim, padded});
  for (std::size_t b = 0; b < n; ++b) {
    const MotionSequence clip = pad_to(batch[b], padded);
    const FrameMatrix f = tok_.normalizer().normalize(to_canonical(clip));
    for (std::size_t t = 0; t < padded; ++t) {
      for (std::size_t i = 0; i < dim; ++i) whole[(b * dim + i) * padded + t] = f(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
    }
    parts.push_back(split_parts(MotionSequence(f, clip.fps(), clip.skeleton())));
  }

  Tape tape;
  const Var x = tape.constant(parts_to_tensor(parts));
  const Var z = tok_.model().encode(tape, x);
  const RowMatrix rows = latents_to_rows(z.value());
  if (!initialized_) init_codebook(rows);
  const RowQuantization q = quantize_rows(rows, tok_.codebook(), c.layers, true);
  const Var y = tok_.model().decode(tape, nn::straight_through(z, rows_to_latents(q.quantized, z.shape())));

  const Var term1 = nn::l1_loss(part_merge(y), tape.constant(std::move(whole)));
  Var term2;
  for (std::size_t p = 0; p < kNumParts; ++p) {
    const Var lp = nn::l1_loss(nn::slice(y, 2, p, p + 1), nn::slice(x, 2, p, p + 1));
    term2 = p == 0 ? lp : nn::add(term2, lp);
  }
  Var commit;
  for (std::size_t k = 1; k <= c.layers; ++k) {
    // Sum of the first k codes = z - r^k.
    const RowMatrix prefix = k == c.layers ? q.quantized : RowMatrix(rows - q.layer_inputs[k]);
    const Var target = tape.constant(rows_to_latents(prefix, z.shape()));
    for (std::size_t p = 0; p < kNumParts; ++p) {
      const Var lp = nn::mse_loss(nn::slice(z, 2, p, p + 1), nn::slice(target, 2, p, p + 1));
      commit = k == 1 && p == 0 ? lp : nn::add(commit, lp);
    }
  }
  const Var term3 = nn::mul_scalar(commit, c.beta);
  const Var total = nn::add(nn::add(term1, term2), term3);

  LossBreakdown out;
  out.whole_body = term1.value().item();
  out.parts = term2.value().item();
  out.commitment = term3.value().item();
  out.total = total.value().item();
  const std::pair<const char*, double> terms[] = {
      {"whole-body reconstruction", out.whole_body}, {"part reconstruction", out.parts}, {"commitment", out.commitment}};
  for (const auto& [name, v] : terms) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::NonFiniteLoss, std::string(name) + " term is " + std::to_string(v) + " at step " +
                                                std::to_string(steps_));
    }
  }

  adam_.zero_grad();
  tape.backward(total);
  double sq = 0.0;
  for (const auto& p : tok_.model().parameters()) {
    for (double g : p.grad.values()) sq += g * g;
  }
  out.grad_norm = std::sqrt(sq);
  if (!std::isfinite(out.grad_norm)) {
    throw Error(ErrorKind::NonFiniteLoss, "gradient norm is not finite at step " + std::to_string(steps_));
  }
  if (c.grad_clip > 0.0 && out.grad_norm > c.grad_clip) {
    const double scale = c.grad_clip / out.grad_norm;
    for (auto& p : tok_.model().parameters()) {
      for (double& g : p.grad.values()) g *= scale;
    }
  }
  out.lr = current_lr();
  adam_.set_lr(out.lr);
  adam_.step();

  // EMA over the residuals every layer saw, pooled since the codebook is shared.
  const std::size_t m = static_cast<std::size_t>(rows.rows());
  RowMatrix pooled(static_cast<Eigen::Index>(m * c.layers), rows.cols());
  std::vector<std::uint32_t> assign(m * c.layers);
  for (std::size_t k = 0; k < c.layers; ++k) {
    pooled.middleRows(static_cast<Eigen::Index>(k * m), static_cast<Eigen::Index>(m)) = q.layer_inputs[k];
    for (std::size_t i = 0; i < m; ++i) assign[k * m + i] = q.indices[i * c.layers + k];
  }
  tok_.codebook().ema_update(pooled, assign, c.ema_decay, c.laplace_eps);
  out.codes_reset = tok_.codebook().reset_dead_codes(c.dead_code_window, pooled, rng_);
  ++steps_;
  return out;
}

TrainLog train_tokenizer(Tokenizer& tokenizer, const std::vector<MotionSequence>& corpus, std::size_t steps,
                         const std::function<void(std::size_t, const LossBreakdown&)>& on_step) {
  std::vector<FrameMatrix> canonical;
  canonical.reserve(corpus.size());
  for (const auto& m : corpus) canonical.push_back(to_canonical(m));
  tokenizer.normalizer() = FeatureNormalizer::fit(canonical);
  TokenizerTrainer trainer(tokenizer);
  trainer.set_horizon(steps);
  TrainLog log;
  for (std::size_t s = 0; s < steps; ++s) {
    log.steps.push_back(trainer.train_step(trainer.sample_batch(corpus)));
    if (on_step) on_step(s, log.steps.back());
  }
  return log;
}

}  // namespace ot2m::prq
