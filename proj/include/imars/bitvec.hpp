#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace imars {

// Fixed-width bit vector, LSB-first within 64-bit words.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t width) : width_(width), words_((width + 63) / 64, 0) {}

  static BitVec from_bytes(std::span<const std::uint8_t> bytes) {
    BitVec v(bytes.size() * 8);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      v.words_[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << ((i % 8) * 8);
    }
    return v;
  }

  std::size_t width() const { return width_; }

  bool get(std::size_t i) const {
    check(i);
    return (words_[i / 64] >> (i % 64)) & 1u;
  }

  void set(std::size_t i, bool value) {
    check(i);
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (value) {
      words_[i / 64] |= mask;
    } else {
      words_[i / 64] &= ~mask;
    }
  }

  std::size_t popcount() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  // Hamming distance, optionally ignoring positions set in `mask`.
  static std::size_t hamming(const BitVec& a, const BitVec& b) {
    if (a.width_ != b.width_) throw std::invalid_argument("BitVec width mismatch");
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i) {
      n += static_cast<std::size_t>(std::popcount(a.words_[i] ^ b.words_[i]));
    }
    return n;
  }

  static std::size_t hamming_masked(const BitVec& a, const BitVec& b, const BitVec& ignore) {
    if (a.width_ != b.width_ || a.width_ != ignore.width_) {
      throw std::invalid_argument("BitVec width mismatch");
    }
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i) {
      n += static_cast<std::size_t>(std::popcount((a.words_[i] ^ b.words_[i]) & ~ignore.words_[i]));
    }
    return n;
  }

  bool operator==(const BitVec& other) const = default;

  std::span<const std::uint64_t> words() const { return words_; }

  std::vector<std::uint8_t> to_bytes() const {
    std::vector<std::uint8_t> out((width_ + 7) / 8, 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<std::uint8_t>(words_[i / 8] >> ((i % 8) * 8));
    }
    return out;
  }

 private:
  void check(std::size_t i) const {
    if (i >= width_) throw std::out_of_range("BitVec index out of range");
  }

  std::size_t width_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace imars
