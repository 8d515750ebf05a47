#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ot2m/ar/vocab.hpp"
#include "ot2m/nn/ops.hpp"
#include "ot2m/nn/train_utils.hpp"
#include "ot2m/prq/quantizer.hpp"

namespace ot2m::ar {

struct ArConfig {
  std::size_t layers = 4;
  std::size_t width = 256;
  std::size_t heads = 4;
  std::size_t context = 512;
  std::size_t token_layers = 4;  // residual layers per grid cell in the token stream
  double learning_rate = 1e-3;
  std::size_t batch_size = 1;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument.
  void validate() const;
};

/// One training sequence: <bos> text <mot> ... </mot> <eos>. Loss covers
/// every id from <mot> on.
struct Example {
  std::vector<int> ids;
  std::size_t answer_begin = 0;
};

Example make_example(const std::string& text, const prq::TokenGrid& grid, const Vocab& vocab);
/// Keeps the leading time steps of `grid` that let make_example fit a model
/// of the given context. Throws ContextOverflow when no step fits.
prq::TokenGrid fit_to_context(const prq::TokenGrid& grid, const std::string& text, const Vocab& vocab,
                              std::size_t context);
/// <bos> followed by the text ids.
std::vector<int> make_prompt(const std::string& text, const Vocab& vocab);

/// Next-id targets for the inputs ids[0 .. len-2]; positions before the
/// answer are -1 (masked).
std::vector<int> shifted_targets(const Example& ex);

/// Mean negative log-likelihood over the unmasked rows of logits [T, V].
/// Throws ShapeMismatch when targets and rows disagree.
nn::Var nll_loss(nn::Var logits, const std::vector<int>& targets);

/// Pre-norm decoder-only transformer with learned positions.
class ArModel {
 public:
  ArModel(const ArConfig& cfg, Vocab vocab);

  const ArConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  std::vector<nn::Parameter>& parameters() { return params_; }
  const std::vector<nn::Parameter>& parameters() const { return params_; }
  std::vector<nn::Parameter*> parameter_ptrs();

  /// Logits [T, V] for ids of length T <= context; gradients reach parameters.
  nn::Var logits(nn::Tape& tape, const std::vector<int>& ids);
  /// Inference variant with parameters as constants.
  nn::Var logits(nn::Tape& tape, const std::vector<int>& ids) const;

  nn::Checkpoint to_checkpoint() const;
  static ArModel from_checkpoint(const nn::Checkpoint& ck);
  void save(const std::filesystem::path& path) const { to_checkpoint().save(path); }
  static ArModel load(const std::filesystem::path& path) { return from_checkpoint(nn::Checkpoint::load(path)); }

 private:
  friend class Decoder;
  struct Layer {
    std::size_t ln1_g, ln1_b, qkv_w, qkv_b, out_w, out_b, ln2_g, ln2_b, fc1_w, fc1_b, fc2_w, fc2_b;
  };
  using Bind = std::function<nn::Var(std::size_t)>;

  std::size_t add(const std::string& name, nn::Shape shape, double stddev, double fill, std::mt19937_64& rng);
  nn::Var forward(const std::vector<int>& ids, const Bind& bind) const;

  ArConfig cfg_;
  Vocab vocab_;
  std::vector<nn::Parameter> params_;
  std::size_t tok_emb_ = 0, pos_emb_ = 0, lnf_g_ = 0, lnf_b_ = 0, head_w_ = 0, head_b_ = 0;
  std::vector<Layer> layers_;
};

/// Incremental decoding with a key/value cache. Holds a reference to the
/// model, which must outlive it.
class Decoder {
 public:
  explicit Decoder(const ArModel& model);

  /// Appends one id and returns the next-id logits. Throws ContextOverflow.
  Eigen::VectorXd feed(int id);
  std::size_t length() const { return length_; }

 private:
  const ArModel& model_;
  std::vector<Eigen::MatrixXd> keys_, values_;
  std::size_t length_ = 0;
};

struct TrainStats {
  std::vector<double> loss;
};

/// Adam on the mean NLL of `batch_size` examples per step, drawn in a
/// seed-determined order. Throws ContextOverflow naming the first example
/// that does not fit.
TrainStats train_ar(ArModel& model, const std::vector<Example>& corpus, std::size_t steps,
                    const std::function<void(std::size_t, double)>& on_step = {});

/// Mean NLL of one example under the model.
double example_nll(const ArModel& model, const Example& ex);

struct SamplingOptions {
  /// 0 selects greedy decoding.
  std::size_t top_k = 0;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  /// Optional cap on time steps; 0 leaves only the context limit.
  std::size_t max_steps = 0;
};

/// Grammar-constrained generation of a `layers`-deep token grid. Only ids the
/// template automaton allows get nonzero probability. Throws
/// MaxLengthExceeded when the context cannot hold one time step.
prq::TokenGrid generate(const ArModel& model, const std::string& text, std::size_t layers,
                        const SamplingOptions& options = {});
/// Raw answer ids from <mot> through <eos>, drawn under the template automaton.
std::vector<int> sample_answer(const ArModel& model, const std::string& text, std::size_t layers,
                               const SamplingOptions& options, std::mt19937_64& rng);
/// Same with a caller-owned generator, for drawing many samples.
prq::TokenGrid generate(const ArModel& model, const std::string& text, std::size_t layers,
                        const SamplingOptions& options, std::mt19937_64& rng);

}  // namespace ot2m::ar
