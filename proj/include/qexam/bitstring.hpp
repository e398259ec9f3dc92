#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qexam/rng.hpp"

namespace qexam {

// Ordered sequence of classical bits. Problems, solutions and decoded
// payloads are all BitStrings.
class BitString {
 public:
  BitString() = default;

  explicit BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
      if (b > 1) throw std::invalid_argument("BitString: entries must be 0 or 1");
    }
  }

  static BitString random(std::size_t length, Rng& rng) {
    std::vector<std::uint8_t> bits(length);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_bit());
    return BitString(std::move(bits));
  }

  static BitString zeros(std::size_t length) {
    return BitString(std::vector<std::uint8_t>(length, 0));
  }

  static BitString parse(const std::string& text) {
    std::vector<std::uint8_t> bits;
    bits.reserve(text.size());
    for (char c : text) {
      if (c == '0') {
        bits.push_back(0);
      } else if (c == '1') {
        bits.push_back(1);
      } else {
        throw std::invalid_argument("BitString: expected only '0' and '1'");
      }
    }
    return BitString(std::move(bits));
  }

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }

  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, int bit) { bits_[i] = static_cast<std::uint8_t>(bit & 1); }
  void push_back(int bit) { bits_.push_back(static_cast<std::uint8_t>(bit & 1)); }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::string str() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
  }

  friend bool operator==(const BitString& a, const BitString& b) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

}  // namespace qexam
