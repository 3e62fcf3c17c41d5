#pragma once

#include <array>
#include <cstdint>

#include "modelyap/bit_block.hpp"

namespace modelyap {

// TEA and XTEA share the 64-bit block / 128-bit key layout: the block is
// (v0, v1) with v0 the high 32 bits, the key is four big-endian words.
// `cycles` counts full cycles (two Feistel rounds each); 32 is standard.

namespace detail {

inline constexpr std::uint32_t tea_delta = 0x9E3779B9u;

inline std::array<std::uint32_t, 4> tea_key_words(const Key& key) {
  return {static_cast<std::uint32_t>(key.hi() >> 32), static_cast<std::uint32_t>(key.hi()),
          static_cast<std::uint32_t>(key.lo() >> 32), static_cast<std::uint32_t>(key.lo())};
}

}  // namespace detail

class Tea {
 public:
  Tea(const Key& key, unsigned cycles) : k_(detail::tea_key_words(key)), cycles_(cycles) {}

  std::uint64_t encrypt(std::uint64_t block) const noexcept {
    std::uint32_t v0 = static_cast<std::uint32_t>(block >> 32);
    std::uint32_t v1 = static_cast<std::uint32_t>(block);
    std::uint32_t sum = 0;
    for (unsigned i = 0; i < cycles_; ++i) {
      sum += detail::tea_delta;
      v0 += ((v1 << 4) + k_[0]) ^ (v1 + sum) ^ ((v1 >> 5) + k_[1]);
      v1 += ((v0 << 4) + k_[2]) ^ (v0 + sum) ^ ((v0 >> 5) + k_[3]);
    }
    return (std::uint64_t{v0} << 32) | v1;
  }

  std::uint64_t decrypt(std::uint64_t block) const noexcept {
    std::uint32_t v0 = static_cast<std::uint32_t>(block >> 32);
    std::uint32_t v1 = static_cast<std::uint32_t>(block);
    std::uint32_t sum = detail::tea_delta * cycles_;
    for (unsigned i = 0; i < cycles_; ++i) {
      v1 -= ((v0 << 4) + k_[2]) ^ (v0 + sum) ^ ((v0 >> 5) + k_[3]);
      v0 -= ((v1 << 4) + k_[0]) ^ (v1 + sum) ^ ((v1 >> 5) + k_[1]);
      sum -= detail::tea_delta;
    }
    return (std::uint64_t{v0} << 32) | v1;
  }

 private:
  std::array<std::uint32_t, 4> k_;
  unsigned cycles_;
};

class Xtea {
 public:
  Xtea(const Key& key, unsigned cycles) : k_(detail::tea_key_words(key)), cycles_(cycles) {}

  std::uint64_t encrypt(std::uint64_t block) const noexcept {
    std::uint32_t v0 = static_cast<std::uint32_t>(block >> 32);
    std::uint32_t v1 = static_cast<std::uint32_t>(block);
    std::uint32_t sum = 0;
    for (unsigned i = 0; i < cycles_; ++i) {
      v0 += (((v1 << 4) ^ (v1 >> 5)) + v1) ^ (sum + k_[sum & 3]);
      sum += detail::tea_delta;
      v1 += (((v0 << 4) ^ (v0 >> 5)) + v0) ^ (sum + k_[(sum >> 11) & 3]);
    }
    return (std::uint64_t{v0} << 32) | v1;
  }

  std::uint64_t decrypt(std::uint64_t block) const noexcept {
    std::uint32_t v0 = static_cast<std::uint32_t>(block >> 32);
    std::uint32_t v1 = static_cast<std::uint32_t>(block);
    std::uint32_t sum = detail::tea_delta * cycles_;
    for (unsigned i = 0; i < cycles_; ++i) {
      v1 -= (((v0 << 4) ^ (v0 >> 5)) + v0) ^ (sum + k_[(sum >> 11) & 3]);
      sum -= detail::tea_delta;
      v0 -= (((v1 << 4) ^ (v1 >> 5)) + v1) ^ (sum + k_[sum & 3]);
    }
    return (std::uint64_t{v0} << 32) | v1;
  }

 private:
  std::array<std::uint32_t, 4> k_;
  unsigned cycles_;
};

}  // namespace modelyap
