#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace modelyap {

/// Raised when widths disagree (block vs cipher, key vs cipher, state vs iv).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fixed-width bit string of at most 128 bits.
///
/// Bit index i counts from the most significant bit (i = 0 is the MSB),
/// which is the canonical cell order used everywhere in the engine. The
/// value is held as an unsigned integer split into two 64-bit words.
template <class Tag>
class FixedBits {
 public:
  static constexpr std::size_t max_width = 128;

  FixedBits() = default;

  explicit FixedBits(std::size_t width, std::uint64_t hi = 0, std::uint64_t lo = 0)
      : width_(checked_width(width)) {
    hi_ = hi;
    lo_ = lo;
    mask();
  }

  static FixedBits zero(std::size_t width) { return FixedBits(width); }

  static FixedBits from_uint(std::size_t width, std::uint64_t value) {
    return FixedBits(width, 0, value);
  }

  /// Parses exactly ceil(width/4) hex digits, most significant first.
  static FixedBits from_hex(std::size_t width, std::string_view hex) {
    checked_width(width);
    if (hex.size() != (width + 3) / 4) {
      throw DimensionError("hex string '" + std::string(hex) + "' does not encode " +
                           std::to_string(width) + " bits");
    }
    std::uint64_t hi = 0, lo = 0;
    for (char c : hex) {
      const int d = hex_digit(c);
      if (d < 0) throw std::invalid_argument("invalid hex digit in '" + std::string(hex) + "'");
      hi = (hi << 4) | (lo >> 60);
      lo = (lo << 4) | static_cast<std::uint64_t>(d);
    }
    FixedBits out(width, hi, lo);
    if (out.hi_ != hi || out.lo_ != lo) {
      throw DimensionError("hex value '" + std::string(hex) + "' exceeds " +
                           std::to_string(width) + " bits");
    }
    return out;
  }

  /// Parses a string of '0'/'1' characters; its length is the width.
  static FixedBits from_binary(std::string_view bits) {
    FixedBits out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] == '1') {
        out.flip(i);
      } else if (bits[i] != '0') {
        throw std::invalid_argument("invalid binary digit in '" + std::string(bits) + "'");
      }
    }
    return out;
  }

  std::size_t width() const noexcept { return width_; }
  std::uint64_t hi() const noexcept { return hi_; }
  std::uint64_t lo() const noexcept { return lo_; }

  bool test(std::size_t i) const {
    const std::size_t p = position(i);
    return p < 64 ? ((lo_ >> p) & 1u) != 0 : ((hi_ >> (p - 64)) & 1u) != 0;
  }

  void flip(std::size_t i) {
    const std::size_t p = position(i);
    if (p < 64) {
      lo_ ^= std::uint64_t{1} << p;
    } else {
      hi_ ^= std::uint64_t{1} << (p - 64);
    }
  }

  FixedBits flipped(std::size_t i) const {
    FixedBits out = *this;
    out.flip(i);
    return out;
  }

  std::size_t popcount() const noexcept {
    return static_cast<std::size_t>(std::popcount(hi_) + std::popcount(lo_));
  }

  FixedBits& operator^=(const FixedBits& other) {
    require_same_width(other);
    hi_ ^= other.hi_;
    lo_ ^= other.lo_;
    return *this;
  }

  friend FixedBits operator^(FixedBits a, const FixedBits& b) { return a ^= b; }

  /// Adds `delta` modulo 2^width.
  FixedBits plus(std::uint64_t delta) const {
    FixedBits out = *this;
    const std::uint64_t lo = out.lo_ + delta;
    out.hi_ += lo < out.lo_ ? 1 : 0;
    out.lo_ = lo;
    out.mask();
    return out;
  }

  /// Calls fn(i) for every set bit, i in MSB-first index order.
  template <class Fn>
  void for_each_set_bit(Fn&& fn) const {
    for (std::uint64_t w = hi_; w != 0; w &= w - 1) {
      const std::size_t p = 64 + static_cast<std::size_t>(std::countr_zero(w));
      fn(width_ - 1 - p);
    }
    for (std::uint64_t w = lo_; w != 0; w &= w - 1) {
      const std::size_t p = static_cast<std::size_t>(std::countr_zero(w));
      fn(width_ - 1 - p);
    }
  }

  std::string to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    const std::size_t n = (width_ + 3) / 4;
    std::string out(n, '0');
    std::uint64_t hi = hi_, lo = lo_;
    for (std::size_t k = 0; k < n; ++k) {
      out[n - 1 - k] = digits[lo & 0xF];
      lo = (lo >> 4) | (hi << 60);
      hi >>= 4;
    }
    return out;
  }

  std::string to_binary() const {
    std::string out(width_, '0');
    for (std::size_t i = 0; i < width_; ++i) {
      if (test(i)) out[i] = '1';
    }
    return out;
  }

  friend bool operator==(const FixedBits&, const FixedBits&) = default;

  void require_same_width(const FixedBits& other) const {
    if (other.width_ != width_) {
      throw DimensionError("bit width mismatch: " + std::to_string(width_) + " vs " +
                           std::to_string(other.width_));
    }
  }

 private:
  static std::size_t checked_width(std::size_t width) {
    if (width == 0 || width > max_width) {
      throw DimensionError("bit width must be in [1, 128], got " + std::to_string(width));
    }
    return width;
  }

  static int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  }

  std::size_t position(std::size_t i) const {
    if (i >= width_) {
      throw std::out_of_range("bit index " + std::to_string(i) + " outside width " +
                              std::to_string(width_));
    }
    return width_ - 1 - i;
  }

  void mask() {
    if (width_ < 64) {
      hi_ = 0;
      lo_ &= (std::uint64_t{1} << width_) - 1;
    } else if (width_ == 64) {
      hi_ = 0;
    } else if (width_ < 128) {
      hi_ &= (std::uint64_t{1} << (width_ - 64)) - 1;
    }
  }

  std::size_t width_ = 0;
  std::uint64_t hi_ = 0;
  std::uint64_t lo_ = 0;
};

struct BlockTag {};
struct KeyTag {};

/// An n-bit block, the unit a cipher encrypts.
using BitBlock = FixedBits<BlockTag>;
/// A k-bit cipher key.
using Key = FixedBits<KeyTag>;

}  // namespace modelyap
