#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "modelyap/aes.hpp"
#include "modelyap/bit_block.hpp"
#include "modelyap/tea.hpp"

namespace modelyap {

class UnsupportedCipher : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class CipherId { tea, xtea, aes128, toy_xor, toy_permutation, toy_identity };

/// Block-size class of a cipher; signatures are compared within a family.
enum class Family { bits64, bits128, toy };

struct CipherSpec {
  CipherId id = CipherId::tea;
  std::size_t block_bits = 64;
  std::size_t key_bits = 128;
  unsigned rounds = 32;
  std::uint64_t seed = 0;  // toy_permutation only

  friend bool operator==(const CipherSpec&, const CipherSpec&) = default;
};

inline bool is_toy(CipherId id) {
  return id == CipherId::toy_xor || id == CipherId::toy_permutation ||
         id == CipherId::toy_identity;
}

inline std::string cipher_name(CipherId id) {
  switch (id) {
    case CipherId::tea: return "tea";
    case CipherId::xtea: return "xtea";
    case CipherId::aes128: return "aes128";
    case CipherId::toy_xor: return "toy-xor";
    case CipherId::toy_permutation: return "toy-perm";
    case CipherId::toy_identity: return "toy-identity";
  }
  throw UnsupportedCipher("unknown cipher id");
}

inline Family family_of(const CipherSpec& spec) {
  if (is_toy(spec.id)) return Family::toy;
  return spec.block_bits == 64 ? Family::bits64 : Family::bits128;
}

inline std::string family_name(Family f) {
  switch (f) {
    case Family::bits64: return "64-bit";
    case Family::bits128: return "128-bit";
    case Family::toy: return "toy";
  }
  return "?";
}

inline Family family_from_name(std::string_view name) {
  if (name == "64-bit") return Family::bits64;
  if (name == "128-bit") return Family::bits128;
  if (name == "toy") return Family::toy;
  throw std::invalid_argument("unknown family '" + std::string(name) + "'");
}

/// Default parameterisation of a real cipher: TEA/XTEA run 32 cycles, AES-128 10 rounds.
inline CipherSpec cipher_spec(CipherId id, std::optional<unsigned> rounds = std::nullopt) {
  switch (id) {
    case CipherId::tea:
    case CipherId::xtea: return {id, 64, 128, rounds.value_or(32), 0};
    case CipherId::aes128: return {id, 128, 128, rounds.value_or(10), 0};
    default: break;
  }
  throw UnsupportedCipher("cipher_spec() covers real ciphers; use toy_cipher() for toys");
}

inline CipherSpec cipher_spec(std::string_view name, std::optional<unsigned> rounds = std::nullopt) {
  if (name == "tea" || name == "TEA") return cipher_spec(CipherId::tea, rounds);
  if (name == "xtea" || name == "XTEA") return cipher_spec(CipherId::xtea, rounds);
  if (name == "aes128" || name == "aes" || name == "AES" || name == "AES-128") {
    return cipher_spec(CipherId::aes128, rounds);
  }
  throw UnsupportedCipher("unsupported cipher '" + std::string(name) + "'");
}

enum class ToyKind { xor_key, permutation, identity };

/// Enumerable toy cipher on n in [4, 16] bits. The xor kind is E_K(x) = x ^ K;
/// the permutation kind is a keyless bijection drawn from `seed`.
inline CipherSpec toy_cipher(ToyKind kind, std::size_t n, std::uint64_t seed = 0) {
  if (n < 4 || n > 16) {
    throw DimensionError("toy cipher width must be in [4, 16], got " + std::to_string(n));
  }
  const CipherId id = kind == ToyKind::xor_key       ? CipherId::toy_xor
                      : kind == ToyKind::permutation ? CipherId::toy_permutation
                                                     : CipherId::toy_identity;
  return {id, n, n, 1, seed};
}

/// Published weak-key screening hook. Only DES carries a canonical list and
/// DES is not built in, so every implemented cipher accepts every key.
inline bool is_weak_key(const CipherSpec&, const Key&) { return false; }

namespace detail {

struct ToyXor {
  std::uint64_t key;
};

struct ToyTable {
  std::shared_ptr<const std::vector<std::uint16_t>> forward;
  std::shared_ptr<const std::vector<std::uint16_t>> inverse;
};

inline ToyTable make_toy_table(std::size_t n, std::uint64_t seed, bool identity) {
  const std::size_t size = std::size_t{1} << n;
  std::vector<std::uint16_t> fwd(size);
  std::iota(fwd.begin(), fwd.end(), std::uint16_t{0});
  if (!identity) {
    // Fisher-Yates on raw engine output keeps the table identical across standard libraries.
    std::mt19937_64 rng(seed);
    for (std::size_t i = size - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(fwd[i], fwd[j]);
    }
  }
  std::vector<std::uint16_t> inv(size);
  for (std::size_t x = 0; x < size; ++x) inv[fwd[x]] = static_cast<std::uint16_t>(x);
  return {std::make_shared<const std::vector<std::uint16_t>>(std::move(fwd)),
          std::make_shared<const std::vector<std::uint16_t>>(std::move(inv))};
}

}  // namespace detail

/// A keyed, immutable cipher instance. Copies share lookup tables; all
/// member functions are const and safe to call concurrently.
class BlockCipher {
 public:
  BlockCipher(const CipherSpec& spec, const Key& key) : spec_(spec), impl_(make(spec, key)) {}

  const CipherSpec& spec() const noexcept { return spec_; }
  std::size_t block_bits() const noexcept { return spec_.block_bits; }

  BitBlock encrypt(const BitBlock& block) const {
    check(block);
    return std::visit([&](const auto& c) { return apply(c, block, true); }, impl_);
  }

  BitBlock decrypt(const BitBlock& block) const {
    check(block);
    return std::visit([&](const auto& c) { return apply(c, block, false); }, impl_);
  }

 private:
  using Impl = std::variant<Tea, Xtea, Aes128, detail::ToyXor, detail::ToyTable>;

  static Impl make(const CipherSpec& spec, const Key& key) {
    if (key.width() != spec.key_bits) {
      throw DimensionError("key has " + std::to_string(key.width()) + " bits, " +
                           cipher_name(spec.id) + " expects " + std::to_string(spec.key_bits));
    }
    switch (spec.id) {
      case CipherId::tea:
        require(spec, 64, 128);
        return Tea(key, spec.rounds);
      case CipherId::xtea:
        require(spec, 64, 128);
        return Xtea(key, spec.rounds);
      case CipherId::aes128:
        require(spec, 128, 128);
        return Aes128(key, spec.rounds);
      case CipherId::toy_xor:
        require_toy(spec);
        return detail::ToyXor{key.lo()};
      case CipherId::toy_permutation:
      case CipherId::toy_identity:
        require_toy(spec);
        return detail::make_toy_table(spec.block_bits, spec.seed,
                                      spec.id == CipherId::toy_identity);
    }
    throw UnsupportedCipher("unknown cipher id");
  }

  static void require(const CipherSpec& spec, std::size_t n, std::size_t k) {
    if (spec.block_bits != n || spec.key_bits != k) {
      throw DimensionError(cipher_name(spec.id) + " requires " + std::to_string(n) +
                           "-bit blocks and " + std::to_string(k) + "-bit keys");
    }
    if (spec.rounds == 0) throw std::invalid_argument("rounds must be positive");
  }

  static void require_toy(const CipherSpec& spec) {
    if (spec.block_bits < 4 || spec.block_bits > 16 || spec.key_bits != spec.block_bits) {
      throw DimensionError("toy ciphers need 4..16-bit blocks and equal key width");
    }
  }

  void check(const BitBlock& block) const {
    if (block.width() != spec_.block_bits) {
      throw DimensionError("block has " + std::to_string(block.width()) + " bits, " +
                           cipher_name(spec_.id) + " expects " + std::to_string(spec_.block_bits));
    }
  }

  BitBlock apply(const Tea& c, const BitBlock& b, bool fwd) const {
    return BitBlock::from_uint(64, fwd ? c.encrypt(b.lo()) : c.decrypt(b.lo()));
  }
  BitBlock apply(const Xtea& c, const BitBlock& b, bool fwd) const {
    return BitBlock::from_uint(64, fwd ? c.encrypt(b.lo()) : c.decrypt(b.lo()));
  }
  BitBlock apply(const Aes128& c, const BitBlock& b, bool fwd) const {
    std::uint64_t hi = b.hi(), lo = b.lo();
    if (fwd) {
      c.encrypt(hi, lo);
    } else {
      c.decrypt(hi, lo);
    }
    return BitBlock(128, hi, lo);
  }
  BitBlock apply(const detail::ToyXor& c, const BitBlock& b, bool) const {
    return BitBlock::from_uint(spec_.block_bits, b.lo() ^ c.key);
  }
  BitBlock apply(const detail::ToyTable& c, const BitBlock& b, bool fwd) const {
    const auto& table = fwd ? *c.forward : *c.inverse;
    return BitBlock::from_uint(spec_.block_bits, table[b.lo()]);
  }

  CipherSpec spec_;
  Impl impl_;
};

inline BitBlock encrypt_block(const CipherSpec& spec, const Key& key, const BitBlock& block) {
  return BlockCipher(spec, key).encrypt(block);
}

inline BitBlock decrypt_block(const CipherSpec& spec, const Key& key, const BitBlock& block) {
  return BlockCipher(spec, key).decrypt(block);
}

}  // namespace modelyap
