#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ot2m::prq {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// p x n x d_z grid of latent vectors (part-major).
class LatentGrid {
 public:
  LatentGrid(std::size_t parts, std::size_t steps, std::size_t dim);

  std::size_t parts() const { return parts_; }
  std::size_t steps() const { return steps_; }
  std::size_t dim() const { return dim_; }
  std::span<double> at(std::size_t part, std::size_t step) { return {data_.data() + offset(part, step), dim_}; }
  std::span<const double> at(std::size_t part, std::size_t step) const {
    return {data_.data() + offset(part, step), dim_};
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t offset(std::size_t part, std::size_t step) const { return (part * steps_ + step) * dim_; }
  std::size_t parts_, steps_, dim_;
  std::vector<double> data_;
};

/// Largest codebook a token file (16-bit indices) can address.
inline constexpr std::size_t kMaxCodebookSize = 65536;

/// n x p x L codebook indices; layers vary fastest.
class TokenGrid {
 public:
  TokenGrid() = default;
  TokenGrid(std::size_t steps, std::size_t parts, std::size_t layers);
  TokenGrid(std::size_t steps, std::size_t parts, std::size_t layers, std::vector<std::uint32_t> data);

  std::size_t steps() const { return steps_; }
  std::size_t parts() const { return parts_; }
  std::size_t layers() const { return layers_; }
  std::uint32_t& at(std::size_t step, std::size_t part, std::size_t layer) {
    return data_[(step * parts_ + part) * layers_ + layer];
  }
  std::uint32_t at(std::size_t step, std::size_t part, std::size_t layer) const {
    return data_[(step * parts_ + part) * layers_ + layer];
  }
  const std::vector<std::uint32_t>& data() const { return data_; }

  /// Throws IndexOutOfRange if any index >= codebook_size.
  void check_range(std::size_t codebook_size) const;

  bool operator==(const TokenGrid&) const = default;

 private:
  std::size_t steps_ = 0, parts_ = 0, layers_ = 0;
  std::vector<std::uint32_t> data_;
};

/// Shared codebook with EMA statistics and per-code usage counters.
class Codebook {
 public:
  Codebook(std::size_t size, std::size_t dim);
  explicit Codebook(RowMatrix codes);

  std::size_t size() const { return static_cast<std::size_t>(codes_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(codes_.cols()); }
  const RowMatrix& codes() const { return codes_; }
  std::span<const double> code(std::size_t k) const { return {codes_.row(static_cast<Eigen::Index>(k)).data(), dim()}; }
  void set_code(std::size_t k, std::span<const double> value);

  const std::vector<double>& ema_counts() const { return ema_counts_; }
  const RowMatrix& ema_sums() const { return ema_sums_; }
  /// Steps since each code was last selected.
  const std::vector<std::size_t>& idle_steps() const { return idle_steps_; }
  const std::vector<std::uint64_t>& usage() const { return usage_; }

  /// One EMA step from residuals (rows) and the codes chosen for them. Codes
  /// become smoothed cluster means; idle counters advance for unused codes.
  void ema_update(const RowMatrix& residuals, std::span<const std::uint32_t> assignments, double decay,
                  double laplace_eps);

  /// Codes idle for at least `window` steps are re-seeded from random rows of
  /// `pool`. Returns the number reset.
  std::size_t reset_dead_codes(std::size_t window, const RowMatrix& pool, std::mt19937_64& rng);

  void restore_state(std::vector<double> ema_counts, RowMatrix ema_sums);

 private:
  RowMatrix codes_;
  std::vector<double> ema_counts_;
  RowMatrix ema_sums_;
  std::vector<std::size_t> idle_steps_;
  std::vector<std::uint64_t> usage_;
};

/// Exact nearest code by squared Euclidean distance; ties go to the lowest index.
std::uint32_t nearest_code(std::span<const double> residual, const Codebook& codebook);

/// Greedy residual quantization of every row of `latents`.
struct RowQuantization {
  std::size_t layers = 0;
  std::vector<std::uint32_t> indices;  // rows x layers
  std::vector<double> residual_norms;  // rows x layers, ||r^k|| after layer k
  RowMatrix quantized;                 // sum of selected codes
  /// Residual fed to each layer (r^{k-1}); filled only when requested.
  std::vector<RowMatrix> layer_inputs;
};
RowQuantization quantize_rows(const RowMatrix& latents, const Codebook& codebook, std::size_t layers,
                              bool keep_layer_inputs = false);

struct QuantizeResult {
  TokenGrid tokens;
  LatentGrid quantized;
  std::vector<double> residual_norms;  // n x p x L, same layout as tokens
};

/// r^0 = z; for k = 1..L: pick the nearest code to r^{k-1}, subtract it.
QuantizeResult rq_quantize(const LatentGrid& latents, const Codebook& codebook, std::size_t layers);
/// Sum of the selected codes at each grid position.
LatentGrid dequantize(const TokenGrid& tokens, const Codebook& codebook);

/// "OT2T" token file: n, p, L, K_c then uint16 indices.
std::vector<char> encode_tokens(const TokenGrid& grid, std::size_t codebook_size);
TokenGrid decode_tokens(std::span<const char> bytes, std::size_t* codebook_size = nullptr);
void write_tokens(const std::filesystem::path& path, const TokenGrid& grid, std::size_t codebook_size);
TokenGrid read_tokens(const std::filesystem::path& path, std::size_t* codebook_size = nullptr);

}  // namespace ot2m::prq
