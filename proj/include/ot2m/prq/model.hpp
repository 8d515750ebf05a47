#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ot2m/core/skeleton.hpp"
#include "ot2m/nn/gradcheck_suite.hpp"
#include "ot2m/nn/ops.hpp"

namespace ot2m::prq {

struct TokenizerConfig {
  std::size_t alpha = 4;  // temporal downsampling: 2, 4 or 8
  std::size_t layers = 4;
  std::size_t codebook_size = 1024;
  std::size_t latent_dim = 512;
  double beta = 0.25;
  std::size_t width = 256;  // encoder/decoder channels
  double learning_rate = 2e-4;
  std::size_t batch_size = 256;
  std::size_t crop_frames = 64;
  double ema_decay = 0.99;
  double laplace_eps = 1e-5;
  std::size_t dead_code_window = 50;  // steps without selection before a reset
  double grad_clip = 1.0;             // global gradient-norm cap; 0 disables
  std::size_t warmup_steps = 0;       // linear warmup, then cosine decay when a horizon is set
  double final_lr_fraction = 1.0;     // lr at the end of the horizon relative to the peak
  std::uint64_t seed = 0;

  /// Number of stride-2 blocks, log2(alpha).
  std::size_t num_blocks() const;
  /// Throws InvalidArgument.
  void validate() const;
};

/// 2D conv encoder/decoder over (part, time) grids.
///
/// Encoder: 1x1 projection to `width`, log2(alpha) residual blocks that halve
/// time (3x3 stride (1,2) conv, then relu-conv-relu-conv added back), relu and
/// a 1x1 projection to the latent dim. The decoder mirrors it with nearest x2
/// upsampling along time. Part rows are never mixed down.
class TokenizerModel {
 public:
  explicit TokenizerModel(const TokenizerConfig& cfg);

  const TokenizerConfig& config() const { return cfg_; }
  std::vector<nn::Parameter>& parameters() { return params_; }
  const std::vector<nn::Parameter>& parameters() const { return params_; }
  std::vector<nn::Parameter*> parameter_ptrs();
  nn::Parameter& parameter(const std::string& name);

  /// [N, 71, 5, T] -> [N, d_z, 5, ceil(T / alpha)]. Gradients reach parameters.
  nn::Var encode(nn::Tape& tape, nn::Var x);
  /// [N, d_z, 5, n] -> [N, 71, 5, n * alpha].
  nn::Var decode(nn::Tape& tape, nn::Var z);
  /// Inference variants; parameters enter the tape as constants.
  nn::Var encode(nn::Tape& tape, nn::Var x) const;
  nn::Var decode(nn::Tape& tape, nn::Var z) const;

  /// Zeroes the encoder's output projection.
  void zero_encoder_output();

 private:
  using Bind = std::function<nn::Var(std::size_t)>;
  struct Conv {
    std::size_t weight = 0, bias = 0;
    nn::Conv2dSpec spec;
  };
  struct Block {
    Conv entry, first, second;
  };

  Conv add_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
                nn::Conv2dSpec spec, std::uint64_t seed);
  nn::Var apply(const Conv& c, nn::Var x, const Bind& bind) const;
  nn::Var block(const Block& b, nn::Var x, const Bind& bind) const;
  nn::Var run_encoder(nn::Var x, const Bind& bind) const;
  nn::Var run_decoder(nn::Var z, const Bind& bind) const;

  TokenizerConfig cfg_;
  std::vector<nn::Parameter> params_;
  Conv enc_in_, enc_out_, dec_in_, dec_out_;
  std::vector<Block> enc_blocks_, dec_blocks_;
};

/// Differentiable part merge: [N, 71, 5, T] -> [N, D, T]. Each whole-body
/// channel is the mean of the part channels holding a copy of it.
nn::Var part_merge(nn::Var parts, const Skeleton& skeleton = Skeleton::body());

/// Randomized gradient check of part_merge.
nn::GradcheckCase part_merge_gradcheck_case();

}  // namespace ot2m::prq
