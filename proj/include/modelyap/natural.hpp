#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace modelyap {

/// Arbitrary-precision natural number, little-endian 64-bit limbs, no
/// trailing zero limbs (zero is the empty vector).
class Natural {
 public:
  Natural() = default;
  explicit Natural(std::uint64_t v) {
    if (v != 0) limbs_.push_back(v);
  }

  static Natural from_limbs(std::span<const std::uint64_t> limbs) {
    Natural out;
    out.limbs_.assign(limbs.begin(), limbs.end());
    out.trim();
    return out;
  }

  bool is_zero() const noexcept { return limbs_.empty(); }
  std::span<const std::uint64_t> limbs() const noexcept { return limbs_; }
  std::size_t limb_count() const noexcept { return limbs_.size(); }

  std::size_t bit_width() const noexcept {
    if (limbs_.empty()) return 0;
    return 64 * (limbs_.size() - 1) + static_cast<std::size_t>(std::bit_width(limbs_.back()));
  }

  Natural& operator+=(const Natural& other) {
    add_limbs(other.limbs_);
    return *this;
  }

  friend Natural operator+(Natural a, const Natural& b) { return a += b; }

  Natural& operator*=(std::uint64_t m) {
    if (m == 0) {
      limbs_.clear();
      return *this;
    }
    unsigned __int128 carry = 0;
    for (auto& limb : limbs_) {
      const unsigned __int128 p = static_cast<unsigned __int128>(limb) * m + carry;
      limb = static_cast<std::uint64_t>(p);
      carry = p >> 64;
    }
    if (carry != 0) limbs_.push_back(static_cast<std::uint64_t>(carry));
    return *this;
  }

  friend bool operator==(const Natural&, const Natural&) = default;

  friend std::strong_ordering operator<=>(const Natural& a, const Natural& b) {
    if (a.limbs_.size() != b.limbs_.size()) return a.limbs_.size() <=> b.limbs_.size();
    for (std::size_t i = a.limbs_.size(); i-- > 0;) {
      if (a.limbs_[i] != b.limbs_[i]) return a.limbs_[i] <=> b.limbs_[i];
    }
    return std::strong_ordering::equal;
  }

  /// Natural logarithm to double precision; -inf for zero.
  double log() const {
    if (limbs_.empty()) return -INFINITY;
    const std::size_t k = limbs_.size();
    if (k == 1) return std::log(static_cast<double>(limbs_[0]));
    const double top = std::ldexp(static_cast<double>(limbs_[k - 1]), 64) +
                       static_cast<double>(limbs_[k - 2]);
    return std::log(top) + static_cast<double>(64 * (k - 2)) * std::log(2.0);
  }

  std::string to_decimal() const {
    if (limbs_.empty()) return "0";
    constexpr std::uint64_t chunk = 10'000'000'000'000'000'000ull;  // 10^19
    std::vector<std::uint64_t> work = limbs_;
    std::vector<std::uint64_t> parts;
    while (!work.empty()) {
      unsigned __int128 rem = 0;
      for (std::size_t i = work.size(); i-- > 0;) {
        const unsigned __int128 cur = (rem << 64) | work[i];
        work[i] = static_cast<std::uint64_t>(cur / chunk);
        rem = cur % chunk;
      }
      parts.push_back(static_cast<std::uint64_t>(rem));
      while (!work.empty() && work.back() == 0) work.pop_back();
    }
    std::string out = std::to_string(parts.back());
    for (std::size_t i = parts.size() - 1; i-- > 0;) {
      std::string digits = std::to_string(parts[i]);
      out += std::string(19 - digits.size(), '0') + digits;
    }
    return out;
  }

  void add_limbs(std::span<const std::uint64_t> other) {
    if (limbs_.size() < other.size()) limbs_.resize(other.size(), 0);
    std::uint64_t carry = 0;
    std::size_t i = 0;
    for (; i < other.size(); ++i) {
      const std::uint64_t s = limbs_[i] + other[i];
      const std::uint64_t c1 = s < limbs_[i] ? 1 : 0;
      limbs_[i] = s + carry;
      carry = c1 | (limbs_[i] < s ? 1 : 0);
    }
    for (; carry != 0 && i < limbs_.size(); ++i) {
      limbs_[i] += 1;
      carry = limbs_[i] == 0 ? 1 : 0;
    }
    if (carry != 0) limbs_.push_back(1);
  }

 private:
  void trim() {
    while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
  }

  std::vector<std::uint64_t> limbs_;
};

}  // namespace modelyap
