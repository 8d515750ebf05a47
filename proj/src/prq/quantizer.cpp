#include "ot2m/prq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ot2m/binary_io.hpp"
#include "ot2m/error.hpp"

namespace ot2m::prq {

LatentGrid::LatentGrid(std::size_t parts, std::size_t steps, std::size_t dim)
    : parts_(parts), steps_(steps), dim_(dim), data_(parts * steps * dim, 0.0) {}

TokenGrid::TokenGrid(std::size_t steps, std::size_t parts, std::size_t layers)
    : steps_(steps), parts_(parts), layers_(layers), data_(steps * parts * layers, 0) {}

TokenGrid::TokenGrid(std::size_t steps, std::size_t parts, std::size_t layers, std::vector<std::uint32_t> data)
    : steps_(steps), parts_(parts), layers_(layers), data_(std::move(data)) {
  if (data_.size() != steps * parts * layers) {
    throw Error(ErrorKind::ShapeMismatch, "token data length " + std::to_string(data_.size()) +
                                              " does not match " + std::to_string(steps) + "x" +
                                              std::to_string(parts) + "x" + std::to_string(layers));
  }
}

void TokenGrid::check_range(std::size_t codebook_size) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] >= codebook_size) {
      throw Error(ErrorKind::IndexOutOfRange, "token " + std::to_string(data_[i]) + " at position " +
                                                  std::to_string(i) + " >= codebook size " +
                                                  std::to_string(codebook_size));
    }
  }
}

Codebook::Codebook(std::size_t size, std::size_t dim) : Codebook(RowMatrix::Zero(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(dim))) {}

Codebook::Codebook(RowMatrix codes)
    : codes_(std::move(codes)),
      ema_counts_(static_cast<std::size_t>(codes_.rows()), 1.0),
      ema_sums_(codes_),
      idle_steps_(static_cast<std::size_t>(codes_.rows()), 0),
      usage_(static_cast<std::size_t>(codes_.rows()), 0) {}

void Codebook::set_code(std::size_t k, std::span<const double> value) {
  if (value.size() != dim()) {
    throw Error(ErrorKind::ShapeMismatch, "code of length " + std::to_string(value.size()) + " vs dim " +
                                              std::to_string(dim()));
  }
  const auto row = static_cast<Eigen::Index>(k);
  for (std::size_t i = 0; i < dim(); ++i) codes_(row, static_cast<Eigen::Index>(i)) = value[i];
  ema_sums_.row(row) = codes_.row(row);
  ema_counts_[k] = 1.0;
  idle_steps_[k] = 0;
}

void Codebook::ema_update(const RowMatrix& residuals, std::span<const std::uint32_t> assignments, double decay,
                          double laplace_eps) {
  const std::size_t k_codes = size();
  std::vector<double> counts(k_codes, 0.0);
  RowMatrix sums = RowMatrix::Zero(codes_.rows(), codes_.cols());
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const std::uint32_t a = assignments[i];
    counts[a] += 1.0;
    sums.row(a) += residuals.row(static_cast<Eigen::Index>(i));
  }
  double total = 0.0;
  for (std::size_t k = 0; k < k_codes; ++k) {
    ema_counts_[k] = decay * ema_counts_[k] + (1.0 - decay) * counts[k];
    total += ema_counts_[k];
    if (counts[k] > 0.0) {
      idle_steps_[k] = 0;
      usage_[k] += static_cast<std::uint64_t>(counts[k]);
    } else {
      ++idle_steps_[k];
    }
  }
  ema_sums_ = decay * ema_sums_ + (1.0 - decay) * sums;
  const double denom = total + static_cast<double>(k_codes) * laplace_eps;
  for (std::size_t k = 0; k < k_codes; ++k) {
    const double smoothed = (ema_counts_[k] + laplace_eps) / denom * total;
    if (smoothed > 0.0) codes_.row(static_cast<Eigen::Index>(k)) = ema_sums_.row(static_cast<Eigen::Index>(k)) / smoothed;
  }
}

std::size_t Codebook::reset_dead_codes(std::size_t window, const RowMatrix& pool, std::mt19937_64& rng) {
  if (pool.rows() == 0) return 0;
  std::uniform_int_distribution<Eigen::Index> pick(0, pool.rows() - 1);
  std::size_t reset = 0;
  for (std::size_t k = 0; k < size(); ++k) {
    if (idle_steps_[k] < window) continue;
    const auto row = static_cast<Eigen::Index>(k);
    codes_.row(row) = pool.row(pick(rng));
    ema_sums_.row(row) = codes_.row(row);
    ema_counts_[k] = 1.0;
    idle_steps_[k] = 0;
    ++reset;
  }
  return reset;
}

void Codebook::restore_state(std::vector<double> ema_counts, RowMatrix ema_sums) {
  if (ema_counts.size() != size() || ema_sums.rows() != codes_.rows() || ema_sums.cols() != codes_.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "codebook EMA state does not match codebook shape");
  }
  ema_counts_ = std::move(ema_counts);
  ema_sums_ = std::move(ema_sums);
}

namespace {

double exact_distance(const double* r, const double* c, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = r[i] - c[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

std::uint32_t nearest_code(std::span<const double> residual, const Codebook& codebook) {
  if (codebook.size() == 0) {
    throw Error(ErrorKind::EmptyCodebook, "nearest_code on an empty codebook");
  }
  if (residual.size() != codebook.dim()) {
    throw Error(ErrorKind::ShapeMismatch, "residual of length " + std::to_string(residual.size()) + " vs dim " +
                                              std::to_string(codebook.dim()));
  }
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < codebook.size(); ++k) {
    const double d = exact_distance(residual.data(), codebook.code(k).data(), codebook.dim());
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(k);
    }
  }
  return best;
}

RowQuantization quantize_rows(const RowMatrix& latents, const Codebook& codebook, std::size_t layers,
                              bool keep_layer_inputs) {
  if (codebook.size() == 0) {
    throw Error(ErrorKind::EmptyCodebook, "rq_quantize on an empty codebook");
  }
  if (static_cast<std::size_t>(latents.cols()) != codebook.dim()) {
    throw Error(ErrorKind::ShapeMismatch, "latent dim " + std::to_string(latents.cols()) + " vs codebook dim " +
                                              std::to_string(codebook.dim()));
  }
  const std::size_t rows = static_cast<std::size_t>(latents.rows());
  const std::size_t dim = codebook.dim();
  const std::size_t k_codes = codebook.size();
  const RowMatrix& codes = codebook.codes();
  const Eigen::VectorXd code_norms = codes.rowwise().squaredNorm();
  const double max_code_norm = code_norms.maxCoeff();

  RowQuantization out;
  out.layers = layers;
  out.indices.assign(rows * layers, 0);
  out.residual_norms.assign(rows * layers, 0.0);
  out.quantized = RowMatrix::Zero(latents.rows(), latents.cols());
  RowMatrix residual = latents;
  RowMatrix dots(latents.rows(), codes.rows());
  std::vector<std::size_t> candidates;
  for (std::size_t layer = 0; layer < layers; ++layer) {
    if (keep_layer_inputs) out.layer_inputs.push_back(residual);
    // ||r - c||^2 = ||r||^2 + ||c||^2 - 2 r.c screens candidates; the exact
    // distance decides among those within rounding reach of the minimum.
    dots.noalias() = residual * codes.transpose();
    for (std::size_t i = 0; i < rows; ++i) {
      const auto ri = static_cast<Eigen::Index>(i);
      const double r_norm = residual.row(ri).squaredNorm();
      double best_approx = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < k_codes; ++k) {
        best_approx = std::min(best_approx, code_norms[static_cast<Eigen::Index>(k)] - 2.0 * dots(ri, static_cast<Eigen::Index>(k)));
      }
      const double slack = 1e-9 * (r_norm + max_code_norm) + 1e-300;
      std::uint32_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < k_codes; ++k) {
        const double approx = code_norms[static_cast<Eigen::Index>(k)] - 2.0 * dots(ri, static_cast<Eigen::Index>(k));
        if (approx > best_approx + slack) continue;
        const double d = exact_distance(residual.row(ri).data(), codes.row(static_cast<Eigen::Index>(k)).data(), dim);
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::uint32_t>(k);
        }
      }
      out.indices[i * layers + layer] = best;
      residual.row(ri) -= codes.row(best);
      out.quantized.row(ri) += codes.row(best);
      out.residual_norms[i * layers + layer] = residual.row(ri).norm();
    }
  }
  return out;
}

QuantizeResult rq_quantize(const LatentGrid& latents, const Codebook& codebook, std::size_t layers) {
  const std::size_t parts = latents.parts(), steps = latents.steps(), dim = latents.dim();
  RowMatrix rows(static_cast<Eigen::Index>(parts * steps), static_cast<Eigen::Index>(dim));
  // Row order: step-major, part-minor, matching the token layout.
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t p = 0; p < parts; ++p) {
      const auto src = latents.at(p, t);
      std::copy(src.begin(), src.end(), rows.row(static_cast<Eigen::Index>(t * parts + p)).data());
    }
  }
  const RowQuantization q = quantize_rows(rows, codebook, layers);
  QuantizeResult out{TokenGrid(steps, parts, layers), LatentGrid(parts, steps, dim), q.residual_norms};
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t p = 0; p < parts; ++p) {
      const std::size_t row = t * parts + p;
      for (std::size_t k = 0; k < layers; ++k) out.tokens.at(t, p, k) = q.indices[row * layers + k];
      auto dst = out.quantized.at(p, t);
      for (std::size_t i = 0; i < dim; ++i) dst[i] = q.quantized(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

LatentGrid dequantize(const TokenGrid& tokens, const Codebook& codebook) {
  tokens.check_range(codebook.size());
  LatentGrid out(tokens.parts(), tokens.steps(), codebook.dim());
  for (std::size_t t = 0; t < tokens.steps(); ++t) {
    for (std::size_t p = 0; p < tokens.parts(); ++p) {
      auto dst = out.at(p, t);
      for (std::size_t k = 0; k < tokens.layers(); ++k) {
        const auto code = codebook.code(tokens.at(t, p, k));
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += code[i];
      }
    }
  }
  return out;
}

namespace {
constexpr std::uint32_t kTokenVersion = 1;
}

std::vector<char> encode_tokens(const TokenGrid& grid, std::size_t codebook_size) {
  if (codebook_size == 0 || codebook_size > kMaxCodebookSize) {
    throw Error(ErrorKind::InvalidArgument, "token files hold codebooks of size 1..65536");
  }
  grid.check_range(codebook_size);
  binary::Writer w;
  w.magic("OT2T");
  w.u32(kTokenVersion);
  w.u32(static_cast<std::uint32_t>(grid.steps()));
  w.u32(static_cast<std::uint32_t>(grid.parts()));
  w.u32(static_cast<std::uint32_t>(grid.layers()));
  w.u32(static_cast<std::uint32_t>(codebook_size));
  for (std::uint32_t v : grid.data()) w.u16(static_cast<std::uint16_t>(v));
  return w.take();
}

TokenGrid decode_tokens(std::span<const char> bytes, std::size_t* codebook_size) {
  binary::Reader r(bytes);
  r.expect_magic("OT2T");
  const std::uint32_t version = r.u32();
  if (version != kTokenVersion) {
    throw Error(ErrorKind::MalformedStream, "unsupported token file version " + std::to_string(version));
  }
  const std::uint32_t steps = r.u32(), parts = r.u32(), layers = r.u32(), k_codes = r.u32();
  const std::size_t count = static_cast<std::size_t>(steps) * parts * layers;
  if (r.remaining() != count * 2) {
    throw Error(ErrorKind::MalformedStream, "token payload size does not match header");
  }
  std::vector<std::uint32_t> data(count);
  for (auto& v : data) v = r.u16();
  TokenGrid grid(steps, parts, layers, std::move(data));
  grid.check_range(k_codes);
  if (codebook_size != nullptr) *codebook_size = k_codes;
  return grid;
}

void write_tokens(const std::filesystem::path& path, const TokenGrid& grid, std::size_t codebook_size) {
  binary::write_file(path, encode_tokens(grid, codebook_size));
}

TokenGrid read_tokens(const std::filesystem::path& path, std::size_t* codebook_size) {
  const std::vector<char> bytes = binary::read_file(path);
  return decode_tokens(bytes, codebook_size);
}

}  // namespace ot2m::prq
