#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ot2m/error.hpp"

namespace ot2m::binary {

/// Appends little-endian scalars to a byte buffer.
class Writer {
 public:
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }
  void u32(std::uint32_t v) { put(v); }
  void u16(std::uint16_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

  const std::vector<char>& bytes() const { return bytes_; }
  std::vector<char> take() { return std::move(bytes_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
    }
  }
  std::vector<char> bytes_;
};

/// Bounds-checked little-endian reader; throws MalformedStream on overrun.
class Reader {
 public:
  explicit Reader(std::span<const char> bytes) : bytes_(bytes) {}

  void expect_magic(std::string_view tag) {
    need(tag.size());
    if (std::string_view(bytes_.data() + pos_, tag.size()) != tag) {
      throw Error(ErrorKind::MalformedStream, "bad magic, expected '" + std::string(tag) + "'");
    }
    pos_ += tag.size();
  }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::MalformedStream, "unexpected end of stream");
    }
  }
  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(U);
    return v;
  }
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, std::span<const char> bytes);
std::vector<char> read_file(const std::filesystem::path& path);

}  // namespace ot2m::binary
