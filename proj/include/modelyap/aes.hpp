#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "modelyap/bit_block.hpp"

namespace modelyap {

namespace detail {

constexpr std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t p = 0;
  while (b != 0) {
    if (b & 1) p ^= a;
    a = static_cast<std::uint8_t>((a << 1) ^ ((a & 0x80) ? 0x1B : 0x00));
    b >>= 1;
  }
  return p;
}

constexpr std::uint8_t rotl8(std::uint8_t x, int s) {
  return static_cast<std::uint8_t>((x << s) | (x >> (8 - s)));
}

constexpr std::array<std::uint8_t, 256> make_sbox() {
  std::array<std::uint8_t, 256> s{};
  for (int x = 0; x < 256; ++x) {
    // x^254 is the multiplicative inverse (0 maps to 0).
    std::uint8_t inv = 1;
    std::uint8_t base = static_cast<std::uint8_t>(x);
    for (int e = 254; e != 0; e >>= 1) {
      if (e & 1) inv = gf_mul(inv, base);
      base = gf_mul(base, base);
    }
    if (x == 0) inv = 0;
    s[x] = static_cast<std::uint8_t>(inv ^ rotl8(inv, 1) ^ rotl8(inv, 2) ^ rotl8(inv, 3) ^
                                     rotl8(inv, 4) ^ 0x63);
  }
  return s;
}

inline constexpr std::array<std::uint8_t, 256> aes_sbox = make_sbox();

constexpr std::array<std::uint8_t, 256> make_inv_sbox() {
  std::array<std::uint8_t, 256> inv{};
  for (int x = 0; x < 256; ++x) inv[aes_sbox[x]] = static_cast<std::uint8_t>(x);
  return inv;
}

inline constexpr std::array<std::uint8_t, 256> aes_inv_sbox = make_inv_sbox();

constexpr std::uint32_t rotr32(std::uint32_t x, int s) { return (x >> s) | (x << (32 - s)); }

constexpr std::array<std::array<std::uint32_t, 256>, 4> make_te() {
  std::array<std::array<std::uint32_t, 256>, 4> te{};
  for (int x = 0; x < 256; ++x) {
    const std::uint8_t s = aes_sbox[x];
    const std::uint32_t w = (std::uint32_t{gf_mul(s, 2)} << 24) | (std::uint32_t{s} << 16) |
                            (std::uint32_t{s} << 8) | gf_mul(s, 3);
    te[0][x] = w;
    te[1][x] = rotr32(w, 8);
    te[2][x] = rotr32(w, 16);
    te[3][x] = rotr32(w, 24);
  }
  return te;
}

inline constexpr auto aes_te = make_te();

}  // namespace detail

/// AES with a 128-bit key. `rounds` in [1, 10]; 10 is the standard cipher,
/// fewer rounds truncate it (the last executed round omits MixColumns).
class Aes128 {
 public:
  Aes128(const Key& key, unsigned rounds) : rounds_(rounds) {
    if (rounds < 1 || rounds > 10) {
      throw std::invalid_argument("AES-128 supports 1..10 rounds");
    }
    rk_[0] = static_cast<std::uint32_t>(key.hi() >> 32);
    rk_[1] = static_cast<std::uint32_t>(key.hi());
    rk_[2] = static_cast<std::uint32_t>(key.lo() >> 32);
    rk_[3] = static_cast<std::uint32_t>(key.lo());
    std::uint8_t rcon = 1;
    for (int i = 4; i < 44; ++i) {
      std::uint32_t t = rk_[i - 1];
      if (i % 4 == 0) {
        t = (t << 8) | (t >> 24);
        t = sub_word(t) ^ (std::uint32_t{rcon} << 24);
        rcon = detail::gf_mul(rcon, 2);
      }
      rk_[i] = rk_[i - 4] ^ t;
    }
  }

  void encrypt(std::uint64_t& hi, std::uint64_t& lo) const noexcept {
    const auto& te = detail::aes_te;
    std::uint32_t s0 = static_cast<std::uint32_t>(hi >> 32) ^ rk_[0];
    std::uint32_t s1 = static_cast<std::uint32_t>(hi) ^ rk_[1];
    std::uint32_t s2 = static_cast<std::uint32_t>(lo >> 32) ^ rk_[2];
    std::uint32_t s3 = static_cast<std::uint32_t>(lo) ^ rk_[3];
    for (unsigned r = 1; r < rounds_; ++r) {
      const std::uint32_t* k = &rk_[4 * r];
      const std::uint32_t t0 = te[0][s0 >> 24] ^ te[1][(s1 >> 16) & 0xFF] ^
                               te[2][(s2 >> 8) & 0xFF] ^ te[3][s3 & 0xFF] ^ k[0];
      const std::uint32_t t1 = te[0][s1 >> 24] ^ te[1][(s2 >> 16) & 0xFF] ^
                               te[2][(s3 >> 8) & 0xFF] ^ te[3][s0 & 0xFF] ^ k[1];
      const std::uint32_t t2 = te[0][s2 >> 24] ^ te[1][(s3 >> 16) & 0xFF] ^
                               te[2][(s0 >> 8) & 0xFF] ^ te[3][s1 & 0xFF] ^ k[2];
      const std::uint32_t t3 = te[0][s3 >> 24] ^ te[1][(s0 >> 16) & 0xFF] ^
                               te[2][(s1 >> 8) & 0xFF] ^ te[3][s2 & 0xFF] ^ k[3];
      s0 = t0;
      s1 = t1;
      s2 = t2;
      s3 = t3;
    }
    const std::uint32_t* k = &rk_[4 * rounds_];
    const std::uint32_t o0 = final_word(s0, s1, s2, s3) ^ k[0];
    const std::uint32_t o1 = final_word(s1, s2, s3, s0) ^ k[1];
    const std::uint32_t o2 = final_word(s2, s3, s0, s1) ^ k[2];
    const std::uint32_t o3 = final_word(s3, s0, s1, s2) ^ k[3];
    hi = (std::uint64_t{o0} << 32) | o1;
    lo = (std::uint64_t{o2} << 32) | o3;
  }

  void decrypt(std::uint64_t& hi, std::uint64_t& lo) const noexcept {
    // State byte (row r, column c) lives at index 4c + r.
    std::array<std::uint8_t, 16> s{};
    for (int i = 0; i < 8; ++i) {
      s[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
      s[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
    }
    add_round_key(s, rounds_);
    for (unsigned r = rounds_; r-- > 0;) {
      inv_shift_rows(s);
      for (auto& b : s) b = detail::aes_inv_sbox[b];
      add_round_key(s, r);
      if (r != 0) inv_mix_columns(s);
    }
    hi = 0;
    lo = 0;
    for (int i = 0; i < 8; ++i) {
      hi = (hi << 8) | s[i];
      lo = (lo << 8) | s[8 + i];
    }
  }

 private:
  static std::uint32_t sub_word(std::uint32_t w) {
    const auto& sb = detail::aes_sbox;
    return (std::uint32_t{sb[w >> 24]} << 24) | (std::uint32_t{sb[(w >> 16) & 0xFF]} << 16) |
           (std::uint32_t{sb[(w >> 8) & 0xFF]} << 8) | sb[w & 0xFF];
  }

  static std::uint32_t final_word(std::uint32_t a, std::uint32_t b, std::uint32_t c,
                                  std::uint32_t d) {
    const auto& sb = detail::aes_sbox;
    return (std::uint32_t{sb[a >> 24]} << 24) | (std::uint32_t{sb[(b >> 16) & 0xFF]} << 16) |
           (std::uint32_t{sb[(c >> 8) & 0xFF]} << 8) | sb[d & 0xFF];
  }

  void add_round_key(std::array<std::uint8_t, 16>& s, unsigned round) const {
    for (int c = 0; c < 4; ++c) {
      const std::uint32_t w = rk_[4 * round + c];
      for (int r = 0; r < 4; ++r) s[4 * c + r] ^= static_cast<std::uint8_t>(w >> (24 - 8 * r));
    }
  }

  static void inv_shift_rows(std::array<std::uint8_t, 16>& s) {
    std::array<std::uint8_t, 16> t{};
    for (int c = 0; c < 4; ++c) {
      for (int r = 0; r < 4; ++r) t[4 * ((c + r) % 4) + r] = s[4 * c + r];
    }
    s = t;
  }

  static void inv_mix_columns(std::array<std::uint8_t, 16>& s) {
    using detail::gf_mul;
    for (int c = 0; c < 4; ++c) {
      const std::uint8_t a0 = s[4 * c], a1 = s[4 * c + 1], a2 = s[4 * c + 2], a3 = s[4 * c + 3];
      s[4 * c] = gf_mul(a0, 14) ^ gf_mul(a1, 11) ^ gf_mul(a2, 13) ^ gf_mul(a3, 9);
      s[4 * c + 1] = gf_mul(a0, 9) ^ gf_mul(a1, 14) ^ gf_mul(a2, 11) ^ gf_mul(a3, 13);
      s[4 * c + 2] = gf_mul(a0, 13) ^ gf_mul(a1, 9) ^ gf_mul(a2, 14) ^ gf_mul(a3, 11);
      s[4 * c + 3] = gf_mul(a0, 11) ^ gf_mul(a1, 13) ^ gf_mul(a2, 9) ^ gf_mul(a3, 14);
    }
  }

  std::array<std::uint32_t, 44> rk_{};
  unsigned rounds_;
};

}  // namespace modelyap
