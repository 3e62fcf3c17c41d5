#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "modelyap/bit_block.hpp"
#include "modelyap/cipher.hpp"

namespace modelyap {

enum class ModeId { ECB, CBC, OFB, CFB, CTR, PCBC };

inline constexpr std::array<ModeId, 6> all_modes = {ModeId::ECB, ModeId::CBC, ModeId::OFB,
                                                    ModeId::CFB, ModeId::CTR, ModeId::PCBC};

inline std::string mode_name(ModeId m) {
  switch (m) {
    case ModeId::ECB: return "ECB";
    case ModeId::CBC: return "CBC";
    case ModeId::OFB: return "OFB";
    case ModeId::CFB: return "CFB";
    case ModeId::CTR: return "CTR";
    case ModeId::PCBC: return "PCBC";
  }
  return "?";
}

inline ModeId mode_from_name(std::string_view name) {
  for (ModeId m : all_modes) {
    const std::string canonical = mode_name(m);
    if (name.size() != canonical.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < name.size(); ++i) {
      const char c = name[i];
      const char up = (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
      same = same && up == canonical[i];
    }
    if (same) return m;
  }
  throw std::invalid_argument("unknown mode of operation '" + std::string(name) + "'");
}

/// How the IV is chosen when the mode is iterated as a dynamical system.
///
/// chained:   every configuration evolved at step t+1 uses the reference's
///            last ciphertext block C^t_b.
/// refreshed: at t >= 1 each configuration X draws a fresh IV derived from
///            itself, CBC-MAC_K(C^t_b, X). Perturbed configurations therefore
///            see an unrelated IV, like a mode that re-randomises its IV or
///            counter at every application.
/// Step 0 always uses the caller's IV for every configuration.
enum class IvSchedule { chained, refreshed };

inline IvSchedule default_iv_schedule(ModeId m) {
  switch (m) {
    case ModeId::OFB:
    case ModeId::CTR:
    case ModeId::PCBC: return IvSchedule::refreshed;
    default: return IvSchedule::chained;
  }
}

inline std::string iv_schedule_name(IvSchedule s) {
  return s == IvSchedule::chained ? "chained" : "refreshed";
}

/// One configuration of the cellular-automaton view: b blocks plus the IV
/// that the next application of the mode will use.
struct SystemState {
  std::vector<BitBlock> blocks;
  BitBlock iv;
  std::uint64_t t = 0;

  std::size_t block_count() const noexcept { return blocks.size(); }
  std::size_t cell_count() const noexcept {
    return blocks.empty() ? 0 : blocks.size() * blocks.front().width();
  }
  friend bool operator==(const SystemState&, const SystemState&) = default;
};

class ModeContext {
 public:
  ModeContext(ModeId mode, const CipherSpec& spec, const Key& key,
              std::optional<IvSchedule> schedule = std::nullopt)
      : mode_(mode), cipher_(spec, key), schedule_(schedule.value_or(default_iv_schedule(mode))) {}

  ModeId mode() const noexcept { return mode_; }
  const BlockCipher& cipher() const noexcept { return cipher_; }
  const CipherSpec& spec() const noexcept { return cipher_.spec(); }
  IvSchedule schedule() const noexcept { return schedule_; }
  std::size_t block_bits() const noexcept { return cipher_.block_bits(); }

 private:
  ModeId mode_;
  BlockCipher cipher_;
  IvSchedule schedule_;
};

/// ctr_j = base + j - 1 (mod 2^n) for j = 1..count.
inline std::vector<BitBlock> counter_sequence(const BitBlock& base, std::size_t count) {
  if (count == 0) throw std::invalid_argument("counter_sequence needs count >= 1");
  std::vector<BitBlock> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) out.push_back(base.plus(j));
  return out;
}

inline void validate_state(const ModeContext& ctx, std::span<const BitBlock> blocks,
                           const BitBlock& iv) {
  if (blocks.empty()) throw DimensionError("a system state needs at least one block");
  const std::size_t n = ctx.block_bits();
  if (iv.width() != n) {
    throw DimensionError("iv has " + std::to_string(iv.width()) + " bits, cipher block is " +
                         std::to_string(n));
  }
  for (const auto& blk : blocks) {
    if (blk.width() != n) {
      throw DimensionError("block has " + std::to_string(blk.width()) +
                           " bits, cipher block is " + std::to_string(n));
    }
  }
}

/// One application of the mode: out_j = C_j for in_j = P_j, with `iv` as gamma.
/// `out` must have the same length as `in` and must not alias it.
inline void apply_mode(const ModeContext& ctx, std::span<const BitBlock> in, const BitBlock& iv,
                       std::span<BitBlock> out) {
  const BlockCipher& e = ctx.cipher();
  const std::size_t b = in.size();
  switch (ctx.mode()) {
    case ModeId::ECB:
      for (std::size_t j = 0; j < b; ++j) out[j] = e.encrypt(in[j]);
      break;
    case ModeId::CBC: {
      BitBlock prev = iv;
      for (std::size_t j = 0; j < b; ++j) prev = out[j] = e.encrypt(prev ^ in[j]);
      break;
    }
    case ModeId::OFB: {
      BitBlock o = e.encrypt(iv);  // O_0
      for (std::size_t j = 0; j < b; ++j) {
        out[j] = in[j] ^ o;
        if (j + 1 < b) o = e.encrypt(o);
      }
      break;
    }
    case ModeId::CFB: {
      BitBlock prev = iv;
      for (std::size_t j = 0; j < b; ++j) prev = out[j] = e.encrypt(prev) ^ in[j];
      break;
    }
    case ModeId::CTR:
      for (std::size_t j = 0; j < b; ++j) out[j] = in[j] ^ e.encrypt(iv.plus(j));
      break;
    case ModeId::PCBC: {
      // P_0 is the zero block, so the first feedback value is gamma itself.
      BitBlock feedback = iv;
      for (std::size_t j = 0; j < b; ++j) {
        out[j] = e.encrypt(in[j] ^ feedback);
        feedback = in[j] ^ out[j];
      }
      break;
    }
  }
}

inline void invert_mode(const ModeContext& ctx, std::span<const BitBlock> in, const BitBlock& iv,
                        std::span<BitBlock> out) {
  const BlockCipher& e = ctx.cipher();
  const std::size_t b = in.size();
  switch (ctx.mode()) {
    case ModeId::ECB:
      for (std::size_t j = 0; j < b; ++j) out[j] = e.decrypt(in[j]);
      break;
    case ModeId::CBC:
      for (std::size_t j = 0; j < b; ++j) out[j] = e.decrypt(in[j]) ^ (j == 0 ? iv : in[j - 1]);
      break;
    case ModeId::OFB:
    case ModeId::CTR:
      // Keystream modes are involutions for a fixed IV.
      apply_mode(ctx, in, iv, out);
      break;
    case ModeId::CFB:
      for (std::size_t j = 0; j < b; ++j) out[j] = in[j] ^ e.encrypt(j == 0 ? iv : in[j - 1]);
      break;
    case ModeId::PCBC: {
      BitBlock feedback = iv;
      for (std::size_t j = 0; j < b; ++j) {
        out[j] = e.decrypt(in[j]) ^ feedback;
        feedback = out[j] ^ in[j];
      }
      break;
    }
  }
}

/// Encrypts state.blocks with state.iv as gamma. The result carries the
/// chaining value C_b as its iv and t + 1.
inline SystemState encrypt_once(const ModeContext& ctx, const SystemState& state) {
  validate_state(ctx, state.blocks, state.iv);
  SystemState next;
  next.blocks.resize(state.blocks.size());
  apply_mode(ctx, state.blocks, state.iv, next.blocks);
  next.iv = next.blocks.back();
  next.t = state.t + 1;
  return next;
}

/// Inverse of encrypt_once: `state.iv` must be the IV that encrypted `state.blocks`.
inline SystemState decrypt_once(const ModeContext& ctx, const SystemState& state) {
  validate_state(ctx, state.blocks, state.iv);
  SystemState prev;
  prev.blocks.resize(state.blocks.size());
  invert_mode(ctx, state.blocks, state.iv, prev.blocks);
  prev.iv = state.iv;
  prev.t = state.t == 0 ? 0 : state.t - 1;
  return prev;
}

/// CBC-MAC of `blocks` under the context's cipher, starting from `chain`.
inline BitBlock configuration_mac(const ModeContext& ctx, const BitBlock& chain,
                                  std::span<const BitBlock> blocks) {
  BitBlock v = chain;
  for (const auto& x : blocks) v = ctx.cipher().encrypt(v ^ x);
  return v;
}

/// IV used when `config` is evolved from the step that `reference` is at.
inline BitBlock step_iv(const ModeContext& ctx, const SystemState& reference,
                        std::span<const BitBlock> config) {
  if (reference.t == 0 || ctx.schedule() == IvSchedule::chained) return reference.iv;
  return configuration_mac(ctx, reference.iv, config);
}

/// Advances a trajectory by one step of the iterated system.
inline SystemState advance(const ModeContext& ctx, const SystemState& state) {
  SystemState in = state;
  in.iv = step_iv(ctx, state, state.blocks);
  return encrypt_once(ctx, in);
}

/// States at t = 1..steps of the iterated system started from `plaintext`.
inline std::vector<SystemState> iterate(const ModeContext& ctx, const SystemState& plaintext,
                                        std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("iterate needs at least one step");
  std::vector<SystemState> out;
  out.reserve(steps);
  SystemState s = plaintext;
  for (std::size_t i = 0; i < steps; ++i) {
    s = advance(ctx, s);
    out.push_back(s);
  }
  return out;
}

/// CSV: t,block_index,block_hex,iv_hex (block_index is 1-based).
inline void write_trajectory_csv(std::ostream& os, std::span<const SystemState> states) {
  os << "t,block_index,block_hex,iv_hex\n";
  for (const auto& s : states) {
    for (std::size_t j = 0; j < s.blocks.size(); ++j) {
      os << s.t << ',' << (j + 1) << ',' << s.blocks[j].to_hex() << ',' << s.iv.to_hex() << '\n';
    }
  }
}

}  // namespace modelyap
