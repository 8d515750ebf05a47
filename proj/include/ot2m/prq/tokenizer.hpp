#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <vector>

#include "ot2m/core/motion.hpp"
#include "ot2m/nn/train_utils.hpp"
#include "ot2m/prq/model.hpp"
#include "ot2m/prq/quantizer.hpp"

namespace ot2m::prq {

/// Frame-0 heading and horizontal root position of a clip.
struct Placement {
  double yaw = 0.0;
  Vec3 offset = Vec3::Zero();
};
Placement placement_of(const MotionSequence& m);

/// Clip features in the clip's own frame: rotated and translated so frame 0
/// faces +Z with its horizontal root at the origin.
FrameMatrix to_canonical(const MotionSequence& m);
/// Inverse of `to_canonical`, placing the clip back at `start`.
MotionSequence from_canonical(const FrameMatrix& canonical, double fps, const Placement& start = {});

/// Per-channel affine normalization of whole-body features.
struct FeatureNormalizer {
  std::vector<double> mean;
  std::vector<double> scale;

  /// Identity normalizer of the given width.
  static FeatureNormalizer identity(std::size_t dim);
  /// Mean/std over every row of `frames`; std is floored at `min_scale`.
  static FeatureNormalizer fit(const std::vector<FrameMatrix>& frames, double min_scale = 1e-2);

  FrameMatrix normalize(const FrameMatrix& frames) const;
  FrameMatrix denormalize(const FrameMatrix& frames) const;
};

struct LossBreakdown {
  double whole_body = 0.0;  // l1 of merged prediction vs whole-body target
  double parts = 0.0;       // sum over parts of per-part l1
  double commitment = 0.0;  // beta * sum over layers and parts of mse(z, sg[prefix])
  double total = 0.0;
  std::size_t codes_reset = 0;
  double grad_norm = 0.0;  // before clipping
  double lr = 0.0;
};

struct Reconstruction {
  MotionSequence motion;
  TokenGrid tokens;
};

/// Trained tokenizer artifacts: conv model, shared codebook, normalizer.
class Tokenizer {
 public:
  explicit Tokenizer(const TokenizerConfig& cfg);

  const TokenizerConfig& config() const { return model_.config(); }
  TokenizerModel& model() { return model_; }
  const TokenizerModel& model() const { return model_; }
  Codebook& codebook() { return codebook_; }
  const Codebook& codebook() const { return codebook_; }
  FeatureNormalizer& normalizer() { return normalizer_; }
  const FeatureNormalizer& normalizer() const { return normalizer_; }

  /// Part grid of a normalized clip -> p x n x d_z latents.
  LatentGrid encode(const PartSet& parts) const;
  /// Tokens -> part grid (normalized canonical features), T' = n * alpha.
  PartSet decode(const TokenGrid& tokens) const;

  /// Canonical features, normalize, split, encode and quantize. Clips whose
  /// length is not a multiple of alpha are padded by repeating the last frame.
  TokenGrid tokenize(const MotionSequence& m) const;
  /// Decode and merge back to a whole-body motion starting at `start`
  /// (default: facing +Z at the origin).
  MotionSequence detokenize(const TokenGrid& tokens, double fps, const Placement& start = {}) const;
  /// Full pipeline; the output is placed back where the input was and has
  /// ceil(T / alpha) * alpha frames.
  Reconstruction reconstruct(const MotionSequence& m) const;

  nn::Checkpoint to_checkpoint() const;
  static Tokenizer from_checkpoint(const nn::Checkpoint& ckpt);
  void save(const std::filesystem::path& path) const { to_checkpoint().save(path); }
  static Tokenizer load(const std::filesystem::path& path) { return from_checkpoint(nn::Checkpoint::load(path)); }

 private:
  TokenizerModel model_;
  Codebook codebook_;
  FeatureNormalizer normalizer_;
};

/// Gradient training with EMA codebook updates and dead-code resets.
class TokenizerTrainer {
 public:
  explicit TokenizerTrainer(Tokenizer& tokenizer);

  /// One optimization step on clips of equal length (already cropped).
  /// Throws NonFiniteLoss naming the offending term before any parameter or
  /// EMA update.
  LossBreakdown train_step(const std::vector<MotionSequence>& batch);

  /// Random crops of `crop_frames` from clips of at least alpha frames; short
  /// clips are padded by repeating their last frame.
  std::vector<MotionSequence> sample_batch(const std::vector<MotionSequence>& corpus);

  /// Enables warmup and cosine decay over `total_steps`.
  void set_horizon(std::size_t total_steps) { horizon_ = total_steps; }
  double current_lr() const;

  std::size_t steps() const { return steps_; }
  bool codebook_initialized() const { return initialized_; }

 private:
  void init_codebook(const RowMatrix& latents);

  Tokenizer& tok_;
  nn::Adam adam_;
  std::mt19937_64 rng_;
  std::size_t steps_ = 0;
  std::size_t horizon_ = 0;
  bool initialized_ = false;
};

struct TrainLog {
  std::vector<LossBreakdown> steps;
};

/// Fits the normalizer on `corpus` and runs `steps` training steps.
TrainLog train_tokenizer(Tokenizer& tokenizer, const std::vector<MotionSequence>& corpus, std::size_t steps,
                         const std::function<void(std::size_t, const LossBreakdown&)>& on_step = {});

/// Pads by repeating the last frame up to `frames`.
MotionSequence pad_to(const MotionSequence& m, std::size_t frames);

/// [N, 71, 5, T] tensor from equal-length part sets.
nn::Tensor parts_to_tensor(const std::vector<PartSet>& parts);
/// Batch item `index` of a [N, 71, 5, T] tensor.
PartSet tensor_to_parts(const nn::Tensor& t, std::size_t index);

}  // namespace ot2m::prq
