#ifndef HLSA_BYTE_IO_HPP
#define HLSA_BYTE_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hlsa/weighted_net.hpp"

namespace hlsa::detail {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

// Bounds-checked cursor; every failure reports the offending offset.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(std::string("truncated input reading ") + what, pos_);
    }
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint16_t u16_le(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] |
                                                 (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32_le(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::uint32_t u32_be(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  float f32_le(const char* what) { return std::bit_cast<float>(u32_le(what)); }

  std::vector<float> f32_array(std::size_t n, const char* what) {
    if (n > remaining() / 4) {
      throw FormatError(std::string("truncated input reading ") + what, pos_);
    }
    std::vector<float> out(n);
    for (auto& v : out) v = f32_le(what);
    return out;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16_le(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v & 0xff));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32_le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32_be(std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32_le(float v) { u32_le(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::span<const std::uint8_t> bytes) {
    out_.insert(out_.end(), bytes.begin(), bytes.end());
  }

  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

}  // namespace hlsa::detail

#endif  // HLSA_BYTE_IO_HPP
