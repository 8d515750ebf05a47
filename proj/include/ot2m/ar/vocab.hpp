#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ot2m/core/skeleton.hpp"
#include "ot2m/prq/quantizer.hpp"

namespace ot2m::ar {

enum class Special { Pad, Bos, Eos, Unk, Mot, EndMot, Part1, Part2, Part3, Part4, Part5, EndPart1, EndPart2, EndPart3, EndPart4, EndPart5 };
inline constexpr std::size_t kNumSpecials = 16;

/// Id layout: motion codes [0, K_c), then the specials in `Special` order,
/// then corpus words in sorted order.
class Vocab {
 public:
  Vocab(std::size_t codebook_size, std::vector<std::string> words);
  /// Words are the whitespace tokens of `texts`, lowercased, deduplicated.
  static Vocab from_texts(std::size_t codebook_size, const std::vector<std::string>& texts);

  std::size_t size() const { return codes_ + kNumSpecials + words_.size(); }
  std::size_t codebook_size() const { return codes_; }
  const std::vector<std::string>& words() const { return words_; }

  int code(std::size_t k) const;
  int special(Special s) const { return static_cast<int>(codes_ + static_cast<std::size_t>(s)); }
  int part_open(std::size_t part) const;
  int part_close(std::size_t part) const;
  /// Unknown words map to <unk>.
  int word(const std::string& w) const;

  bool is_code(int id) const { return id >= 0 && static_cast<std::size_t>(id) < codes_; }
  bool is_special(int id) const;
  bool is_word(int id) const;
  std::optional<Special> special_of(int id) const;

  std::string surface(int id) const;
  /// Inverse of `surface`; throws InvalidArgument for unknown surfaces.
  int id_of(const std::string& surface) const;

  std::vector<int> encode_text(const std::string& text) const;

 private:
  std::size_t codes_;
  std::vector<std::string> words_;
};

/// Lowercased whitespace tokens.
std::vector<std::string> split_words(const std::string& text);

/// <mot>, then per part i: <part_i>, its codes time-major with layers
/// innermost, </part_i>; then </mot>.
std::vector<int> serialize_tokens(const prq::TokenGrid& grid, const Vocab& vocab);
/// Inverse of serialize_tokens for grids with `layers` residual layers.
/// Throws MalformedStream naming the first offending position.
prq::TokenGrid deserialize_tokens(const std::vector<int>& ids, const Vocab& vocab, std::size_t layers);

/// Left-to-right recognizer of the motion answer `<mot> ... </mot> <eos>`.
/// All parts must carry the same number of codes, a positive multiple of
/// the layer count. `max_codes_per_part` caps the first part so the stream
/// can always close within a length budget.
class TemplateAutomaton {
 public:
  TemplateAutomaton(const Vocab& vocab, std::size_t layers, std::size_t max_codes_per_part);

  /// Whether `id` is legal next.
  bool allows(int id) const;
  /// Every legal next id, ascending.
  std::vector<int> allowed() const;
  /// Throws MalformedStream on an illegal id.
  void advance(int id);
  bool done() const { return stage_ == Stage::Done; }
  /// Ids still needed to finish along the shortest legal path.
  std::size_t min_remaining() const;

 private:
  enum class Stage { Start, PartOpen, InPart, AfterParts, AfterMot, Done };
  const Vocab* vocab_;
  std::size_t layers_, max_codes_;
  Stage stage_ = Stage::Start;
  std::size_t part_ = 0, count_ = 0, part_len_ = 0;
  std::size_t emitted_ = 0;
};

/// Codes per part that fit in `budget` ids for the full answer (including
/// <eos>), rounded down to a multiple of `layers`.
std::size_t max_codes_for_budget(std::size_t budget, std::size_t layers);

}  // namespace ot2m::ar
