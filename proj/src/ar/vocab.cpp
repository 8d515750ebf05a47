#include "ot2m/ar/vocab.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include "ot2m/error.hpp"

namespace ot2m::ar {

namespace {

constexpr std::array<const char*, kNumSpecials> kSpecialSurfaces = {
    "<pad>",    "<bos>",    "<eos>",    "<unk>",    "<mot>",     "</mot>",    "<part_1>",  "<part_2>",
    "<part_3>", "<part_4>", "<part_5>", "</part_1>", "</part_2>", "</part_3>", "</part_4>", "</part_5>"};

std::string code_surface(std::size_t k) { return "<code_" + std::to_string(k) + ">"; }

[[noreturn]] void malformed(std::size_t pos, const std::string& what) {
  throw Error(ErrorKind::MalformedStream, "position " + std::to_string(pos) + ": " + what);
}

}  // namespace

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(std::move(w));
  }
  return out;
}

Vocab::Vocab(std::size_t codebook_size, std::vector<std::string> words) : codes_(codebook_size), words_(std::move(words)) {
  if (codes_ == 0 || codes_ > prq::kMaxCodebookSize) {
    throw Error(ErrorKind::InvalidArgument, "codebook size must lie in [1, 65536]");
  }
  std::sort(words_.begin(), words_.end());
  words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
  for (const auto& w : words_) {
    if (w.empty() || (w.front() == '<' && w.back() == '>')) {
      throw Error(ErrorKind::InvalidArgument, "word '" + w + "' collides with the reserved <...> surfaces");
    }
  }
}

Vocab Vocab::from_texts(std::size_t codebook_size, const std::vector<std::string>& texts) {
  std::vector<std::string> words;
  for (const auto& t : texts) {
    for (auto& w : split_words(t)) {
      if (!(w.front() == '<' && w.back() == '>')) words.push_back(std::move(w));
    }
  }
  return Vocab(codebook_size, std::move(words));
}

int Vocab::code(std::size_t k) const {
  if (k >= codes_) {
    throw Error(ErrorKind::IndexOutOfRange, "code " + std::to_string(k) + " outside codebook of " + std::to_string(codes_));
  }
  return static_cast<int>(k);
}

int Vocab::part_open(std::size_t part) const {
  if (part >= kNumParts) throw Error(ErrorKind::IndexOutOfRange, "part index " + std::to_string(part));
  return special(static_cast<Special>(static_cast<std::size_t>(Special::Part1) + part));
}

int Vocab::part_close(std::size_t part) const {
  if (part >= kNumParts) throw Error(ErrorKind::IndexOutOfRange, "part index " + std::to_string(part));
  return special(static_cast<Special>(static_cast<std::size_t>(Special::EndPart1) + part));
}

int Vocab::word(const std::string& w) const {
  const auto it = std::lower_bound(words_.begin(), words_.end(), w);
  if (it == words_.end() || *it != w) return special(Special::Unk);
  return static_cast<int>(codes_ + kNumSpecials + static_cast<std::size_t>(it - words_.begin()));
}

bool Vocab::is_special(int id) const {
  return id >= 0 && static_cast<std::size_t>(id) >= codes_ && static_cast<std::size_t>(id) < codes_ + kNumSpecials;
}

bool Vocab::is_word(int id) const {
  return id >= 0 && static_cast<std::size_t>(id) >= codes_ + kNumSpecials && static_cast<std::size_t>(id) < size();
}

std::optional<Special> Vocab::special_of(int id) const {
  if (!is_special(id)) return std::nullopt;
  return static_cast<Special>(static_cast<std::size_t>(id) - codes_);
}

std::string Vocab::surface(int id) const {
  if (is_code(id)) return code_surface(static_cast<std::size_t>(id));
  if (is_special(id)) return kSpecialSurfaces[static_cast<std::size_t>(id) - codes_];
  if (is_word(id)) return words_[static_cast<std::size_t>(id) - codes_ - kNumSpecials];
  throw Error(ErrorKind::IndexOutOfRange, "token id " + std::to_string(id) + " outside vocabulary of " +
                                              std::to_string(size()));
}

int Vocab::id_of(const std::string& s) const {
  for (std::size_t i = 0; i < kNumSpecials; ++i) {
    if (s == kSpecialSurfaces[i]) return special(static_cast<Special>(i));
  }
  if (s.rfind("<code_", 0) == 0 && s.size() > 7 && s.back() == '>') {
    const std::string digits = s.substr(6, s.size() - 7);
    if (std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); }) &&
        digits.size() < 7 && (digits.size() == 1 || digits.front() != '0')) {
      const std::size_t k = std::stoul(digits);
      if (k < codes_) return static_cast<int>(k);
    }
  }
  const auto it = std::lower_bound(words_.begin(), words_.end(), s);
  if (it != words_.end() && *it == s) return static_cast<int>(codes_ + kNumSpecials + static_cast<std::size_t>(it - words_.begin()));
  throw Error(ErrorKind::InvalidArgument, "unknown surface '" + s + "'");
}

std::vector<int> Vocab::encode_text(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& w : split_words(text)) ids.push_back(word(w));
  return ids;
}

std::vector<int> serialize_tokens(const prq::TokenGrid& grid, const Vocab& vocab) {
  if (grid.parts() != kNumParts) {
    throw Error(ErrorKind::ShapeMismatch, "token grid must have 5 parts");
  }
  grid.check_range(vocab.codebook_size());
  std::vector<int> ids;
  ids.reserve(2 + kNumParts * (2 + grid.steps() * grid.layers()));
  ids.push_back(vocab.special(Special::Mot));
  for (std::size_t p = 0; p < kNumParts; ++p) {
    ids.push_back(vocab.part_open(p));
    for (std::size_t t = 0; t < grid.steps(); ++t) {
      for (std::size_t k = 0; k < grid.layers(); ++k) ids.push_back(static_cast<int>(grid.at(t, p, k)));
    }
    ids.push_back(vocab.part_close(p));
  }
  ids.push_back(vocab.special(Special::EndMot));
  return ids;
}

prq::TokenGrid deserialize_tokens(const std::vector<int>& ids, const Vocab& vocab, std::size_t layers) {
  if (layers == 0) throw Error(ErrorKind::InvalidArgument, "layers must be positive");
  std::size_t pos = 0;
  const auto expect = [&](int id, const char* what) {
    if (pos >= ids.size()) malformed(pos, std::string("stream ends, expected ") + what);
    if (ids[pos] != id) malformed(pos, "found " + vocab.surface(ids[pos]) + ", expected " + what);
    ++pos;
  };
  std::vector<std::vector<std::uint32_t>> parts(kNumParts);
  expect(vocab.special(Special::Mot), "<mot>");
  for (std::size_t p = 0; p < kNumParts; ++p) {
    expect(vocab.part_open(p), vocab.surface(vocab.part_open(p)).c_str());
    while (pos < ids.size() && vocab.is_code(ids[pos])) parts[p].push_back(static_cast<std::uint32_t>(ids[pos++]));
    const std::size_t len = parts[p].size();
    if (len == 0 || len % layers != 0) {
      malformed(pos, "part " + std::to_string(p + 1) + " holds " + std::to_string(len) +
                         " codes, not a positive multiple of " + std::to_string(layers));
    }
    if (len != parts[0].size()) {
      malformed(pos, "part " + std::to_string(p + 1) + " holds " + std::to_string(len) + " codes, part 1 holds " +
                         std::to_string(parts[0].size()));
    }
    expect(vocab.part_close(p), vocab.surface(vocab.part_close(p)).c_str());
  }
  expect(vocab.special(Special::EndMot), "</mot>");
  if (pos != ids.size()) malformed(pos, "trailing ids after </mot>");
  const std::size_t steps = parts[0].size() / layers;
  prq::TokenGrid grid(steps, kNumParts, layers);
  for (std::size_t p = 0; p < kNumParts; ++p) {
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t k = 0; k < layers; ++k) grid.at(t, p, k) = parts[p][t * layers + k];
    }
  }
  return grid;
}

std::size_t max_codes_for_budget(std::size_t budget, std::size_t layers) {
  const std::size_t fixed = 3 + 2 * kNumParts;
  if (budget < fixed + kNumParts * layers) return 0;
  const std::size_t per_part = (budget - fixed) / kNumParts;
  return per_part / layers * layers;
}

TemplateAutomaton::TemplateAutomaton(const Vocab& vocab, std::size_t layers, std::size_t max_codes_per_part)
    : vocab_(&vocab), layers_(layers), max_codes_(max_codes_per_part / std::max<std::size_t>(layers, 1) * layers) {
  if (layers_ == 0) throw Error(ErrorKind::InvalidArgument, "layers must be positive");
  if (max_codes_ == 0) {
    throw Error(ErrorKind::MaxLengthExceeded, "no room for a single time step per part");
  }
}

bool TemplateAutomaton::allows(int id) const {
  const Vocab& v = *vocab_;
  switch (stage_) {
    case Stage::Start:
      return id == v.special(Special::Mot);
    case Stage::PartOpen:
      return id == v.part_open(part_);
    case Stage::InPart:
      if (v.is_code(id)) return part_ == 0 ? count_ < max_codes_ : count_ < part_len_;
      if (id != v.part_close(part_)) return false;
      return part_ == 0 ? count_ > 0 && count_ % layers_ == 0 : count_ == part_len_;
    case Stage::AfterParts:
      return id == v.special(Special::EndMot);
    case Stage::AfterMot:
      return id == v.special(Special::Eos);
    case Stage::Done:
      return false;
  }
  return false;
}

std::vector<int> TemplateAutomaton::allowed() const {
  const Vocab& v = *vocab_;
  std::vector<int> out;
  if (stage_ == Stage::InPart && allows(0)) {
    for (std::size_t k = 0; k < v.codebook_size(); ++k) out.push_back(static_cast<int>(k));
  }
  for (std::size_t s = 0; s < kNumSpecials; ++s) {
    const int id = v.special(static_cast<Special>(s));
    if (allows(id)) out.push_back(id);
  }
  return out;
}

void TemplateAutomaton::advance(int id) {
  if (!allows(id)) {
    malformed(emitted_, "token " + (id >= 0 && static_cast<std::size_t>(id) < vocab_->size() ? vocab_->surface(id)
                                                                                              : std::to_string(id)) +
                            " is not legal here");
  }
  ++emitted_;
  const Vocab& v = *vocab_;
  switch (stage_) {
    case Stage::Start:
      stage_ = Stage::PartOpen;
      break;
    case Stage::PartOpen:
      stage_ = Stage::InPart;
      count_ = 0;
      break;
    case Stage::InPart:
      if (v.is_code(id)) {
        ++count_;
        break;
      }
      if (part_ == 0) part_len_ = count_;
      ++part_;
      stage_ = part_ == kNumParts ? Stage::AfterParts : Stage::PartOpen;
      break;
    case Stage::AfterParts:
      stage_ = Stage::AfterMot;
      break;
    case Stage::AfterMot:
      stage_ = Stage::Done;
      break;
    case Stage::Done:
      break;
  }
}

std::size_t TemplateAutomaton::min_remaining() const {
  const std::size_t len = part_ == 0 ? std::max<std::size_t>(layers_, (count_ + layers_ - 1) / layers_ * layers_) : part_len_;
  switch (stage_) {
    case Stage::Start:
      return 3 + kNumParts * (2 + layers_);
    case Stage::PartOpen:
      return 2 + (kNumParts - part_) * (2 + len);
    case Stage::InPart:
      return 2 + (len - count_) + 1 + (kNumParts - part_ - 1) * (2 + len);
    case Stage::AfterParts:
      return 2;
    case Stage::AfterMot:
      return 1;
    case Stage::Done:
      return 0;
  }
  return 0;
}

}  // namespace ot2m::ar
