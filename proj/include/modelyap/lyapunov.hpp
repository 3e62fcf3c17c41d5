#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "modelyap/mode.hpp"
#include "modelyap/natural.hpp"

namespace modelyap {

/// Largest |lambda(t) - lambda(t+1)| accepted as converged.
inline constexpr double convergence_tolerance = 1.19e-4;

/// Mean-field upper bound on the exponent, ln(b * n).
inline double lambda_upper_bound(std::size_t blocks, std::size_t block_bits) {
  if (blocks == 0 || block_bits == 0) throw std::invalid_argument("b and n must be positive");
  return std::log(static_cast<double>(blocks) * static_cast<double>(block_bits));
}

enum class PerturbationPolicy { fixed, random_per_member };

/// Which bit of block 1 is flipped to create the perturbed plaintext.
/// `bit` is 1-based from the most significant bit; bit n is the LSB.
struct PerturbationSpec {
  std::size_t bit = 0;  // 0 means "the least significant bit"
  PerturbationPolicy policy = PerturbationPolicy::fixed;

  std::size_t resolved_bit(std::size_t n) const {
    const std::size_t b = bit == 0 ? n : bit;
    if (b < 1 || b > n) {
      throw std::out_of_range("perturbation bit " + std::to_string(b) + " outside [1, " +
                              std::to_string(n) + "]");
    }
    return b;
  }
};

/// P* = P with one bit of block 1 complemented.
inline SystemState initial_perturbation(const SystemState& plaintext, const PerturbationSpec& spec) {
  if (plaintext.blocks.empty()) throw DimensionError("plaintext has no blocks");
  SystemState out = plaintext;
  out.blocks[0].flip(spec.resolved_bit(out.blocks[0].width()) - 1);
  return out;
}

/// Per-cell defect multiplicities m_t(c) for all N = b*n cells, stored as a
/// dense N x L matrix of 64-bit limbs so one step is a batch of carry adds.
class DefectField {
 public:
  DefectField() = default;
  DefectField(std::size_t cells, std::size_t limbs)
      : cells_(cells), limbs_(limbs), data_(cells * limbs, 0) {}

  /// One defect on `cell`, as produced by a single flipped bit.
  static DefectField single(std::size_t cells, std::size_t cell) {
    if (cell >= cells) throw std::out_of_range("defect cell outside the field");
    DefectField f(cells, 1);
    f.data_[cell] = 1;
    return f;
  }

  std::size_t cell_count() const noexcept { return cells_; }
  std::size_t limb_count() const noexcept { return limbs_; }

  std::span<const std::uint64_t> row(std::size_t cell) const {
    return {data_.data() + cell * limbs_, limbs_};
  }

  bool nonzero(std::size_t cell) const {
    for (std::uint64_t limb : row(cell)) {
      if (limb != 0) return true;
    }
    return false;
  }

  Natural multiplicity(std::size_t cell) const { return Natural::from_limbs(row(cell)); }

  Natural total() const {
    Natural sum;
    for (std::size_t c = 0; c < cells_; ++c) sum.add_limbs(row(c));
    return Natural::from_limbs(sum.limbs());
  }

  /// m(cell) += value. The caller sizes the field so the sum cannot overflow.
  void add(std::size_t cell, std::span<const std::uint64_t> value) {
    std::uint64_t* dst = data_.data() + cell * limbs_;
    std::uint64_t carry = 0;
    std::size_t i = 0;
    for (; i < value.size(); ++i) {
      const std::uint64_t s = dst[i] + value[i];
      const std::uint64_t c1 = s < dst[i] ? 1 : 0;
      dst[i] = s + carry;
      carry = c1 | (dst[i] < s ? 1 : 0);
    }
    for (; carry != 0 && i < limbs_; ++i) {
      dst[i] += 1;
      carry = dst[i] == 0 ? 1 : 0;
    }
    if (carry != 0) throw std::overflow_error("defect multiplicity overflowed its limb budget");
  }

  /// Re-lays the matrix with `limbs` limbs per cell (must fit every value).
  void resize_limbs(std::size_t limbs) {
    if (limbs == limbs_) return;
    std::vector<std::uint64_t> data(cells_ * limbs, 0);
    for (std::size_t c = 0; c < cells_; ++c) {
      for (std::size_t i = 0; i < std::min(limbs, limbs_); ++i) {
        data[c * limbs + i] = data_[c * limbs_ + i];
      }
      for (std::size_t i = limbs; i < limbs_; ++i) {
        if (data_[c * limbs_ + i] != 0) throw std::logic_error("resize_limbs would truncate");
      }
    }
    limbs_ = limbs;
    data_ = std::move(data);
  }

 private:
  std::size_t cells_ = 0;
  std::size_t limbs_ = 0;
  std::vector<std::uint64_t> data_;
};

/// A system the defect engine can drive. `advance` moves the reference one
/// step; `evolve` applies that same step to an arbitrary configuration
/// (a replica), writing its image into `out`.
template <class D>
concept DefectDynamics =
    requires(const D& d, const SystemState& s, std::span<const BitBlock> cfg,
             std::span<BitBlock> out) {
      { d.advance(s) } -> std::same_as<SystemState>;
      d.evolve(s, cfg, out);
    };

/// The iterated mode of operation as a DefectDynamics.
class ModeDynamics {
 public:
  explicit ModeDynamics(ModeContext ctx) : ctx_(std::move(ctx)) {}

  const ModeContext& context() const noexcept { return ctx_; }

  SystemState advance(const SystemState& s) const { return modelyap::advance(ctx_, s); }

  void evolve(const SystemState& reference, std::span<const BitBlock> config,
              std::span<BitBlock> out) const {
    apply_mode(ctx_, config, step_iv(ctx_, reference, config), out);
  }

 private:
  ModeContext ctx_;
};

struct DefectStep {
  SystemState reference;
  DefectField field;
  Natural epsilon;
};

/// One step of the replica procedure with multiplicity bookkeeping:
/// every cell c with m_t(c) > 0 spawns the replica "reference with c
/// flipped"; it is evolved one step and each cell where it differs from the
/// evolved reference gains m_t(c) defects.
template <DefectDynamics D>
DefectStep defect_step(const D& dynamics, const SystemState& reference, const DefectField& field) {
  const std::size_t b = reference.blocks.size();
  if (b == 0) throw DimensionError("reference state has no blocks");
  const std::size_t n = reference.blocks.front().width();
  const std::size_t cells = b * n;
  if (field.cell_count() != cells) {
    throw DimensionError("defect field covers " + std::to_string(field.cell_count()) +
                         " cells, state has " + std::to_string(cells));
  }

  DefectStep out;
  out.reference = dynamics.advance(reference);

  // Every target sums at most all sources, each bounded by the current
  // total, so total * cells fits in the new limb budget.
  const std::size_t bound_bits =
      field.total().bit_width() + static_cast<std::size_t>(std::bit_width(cells)) + 1;
  out.field = DefectField(cells, std::max<std::size_t>(1, (bound_bits + 63) / 64));

  std::vector<BitBlock> replica = reference.blocks;
  std::vector<BitBlock> image(b);
  for (std::size_t c = 0; c < cells; ++c) {
    if (!field.nonzero(c)) continue;
    const std::size_t j = c / n;
    const std::size_t i = c % n;
    replica[j].flip(i);
    dynamics.evolve(reference, replica, image);
    replica[j].flip(i);
    const auto m = field.row(c);
    for (std::size_t k = 0; k < b; ++k) {
      const BitBlock diff = image[k] ^ out.reference.blocks[k];
      diff.for_each_set_bit([&](std::size_t bit) { out.field.add(k * n + bit, m); });
    }
  }

  out.epsilon = out.field.total();
  out.field.resize_limbs(std::max<std::size_t>(1, out.epsilon.limb_count()));
  return out;
}

/// epsilon_t and lambda(t) = ln(epsilon_t / epsilon_0) / t for t = 1..T.
struct LyapunovTrace {
  std::vector<Natural> epsilon;
  std::vector<double> epsilon_log;
  std::vector<double> lambda;
  double lambda_m = 0.0;
  std::optional<std::size_t> converged_at;
  std::optional<std::size_t> extinct_at;  // first t with epsilon_t = 0; lambda = -inf there

  std::size_t steps() const noexcept { return lambda.size(); }
  bool extinct() const noexcept { return extinct_at.has_value(); }
  double final_lambda() const { return lambda.empty() ? NAN : lambda.back(); }

  std::vector<double> normalized() const {
    std::vector<double> out(lambda.size());
    for (std::size_t t = 0; t < lambda.size(); ++t) out[t] = lambda[t] / lambda_m;
    return out;
  }
};

/// Smallest t (1-based) such that |curve(s) - curve(s+1)| < tolerance for every
/// s in [t, T-1]; nullopt when the last step is still moving or T < 2.
inline std::optional<std::size_t> convergence_step(std::span<const double> curve,
                                                   double tolerance = convergence_tolerance) {
  if (curve.size() < 2) return std::nullopt;
  std::optional<std::size_t> first;
  for (std::size_t s = curve.size() - 1; s-- > 0;) {
    if (!(std::fabs(curve[s] - curve[s + 1]) < tolerance)) break;
    first = s + 1;
  }
  return first;
}

template <DefectDynamics D>
LyapunovTrace lyapunov_curve(const D& dynamics, const SystemState& plaintext,
                             const PerturbationSpec& pert, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("lyapunov_curve needs T >= 1");
  if (plaintext.blocks.empty()) throw DimensionError("plaintext has no blocks");
  const std::size_t n = plaintext.blocks.front().width();
  const std::size_t b = plaintext.blocks.size();

  LyapunovTrace trace;
  trace.lambda_m = lambda_upper_bound(b, n);
  trace.epsilon.reserve(steps);
  trace.epsilon_log.reserve(steps);
  trace.lambda.reserve(steps);

  SystemState ref = plaintext;
  ref.t = 0;
  DefectField field = DefectField::single(b * n, pert.resolved_bit(n) - 1);
  for (std::size_t t = 1; t <= steps; ++t) {
    DefectStep step = defect_step(dynamics, ref, field);
    const double ln_eps = step.epsilon.log();
    trace.epsilon.push_back(step.epsilon);
    trace.epsilon_log.push_back(ln_eps);
    if (step.epsilon.is_zero()) {
      trace.lambda.push_back(-INFINITY);
      trace.extinct_at = t;
      break;
    }
    trace.lambda.push_back(ln_eps / static_cast<double>(t));  // epsilon_0 = 1
    ref = std::move(step.reference);
    field = std::move(step.field);
  }
  if (!trace.extinct()) trace.converged_at = convergence_step(trace.lambda);
  return trace;
}

inline LyapunovTrace lyapunov_curve(const ModeContext& ctx, const SystemState& plaintext,
                                    const PerturbationSpec& pert, std::size_t steps) {
  return lyapunov_curve(ModeDynamics(ctx), plaintext, pert, steps);
}

class ResourceGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Literal pathway enumeration: the replica multiset A_t holds one entry per
/// defect, and each entry is evolved on its own. Exponential; toy sizes only.
template <DefectDynamics D>
std::vector<std::uint64_t> naive_defect_oracle(const D& dynamics, const SystemState& plaintext,
                                               const PerturbationSpec& pert, std::size_t steps,
                                               std::size_t max_replicas = std::size_t{1} << 22) {
  const std::size_t n = plaintext.blocks.front().width();
  const std::size_t b = plaintext.blocks.size();
  SystemState ref = plaintext;
  ref.t = 0;
  std::vector<std::size_t> replicas = {pert.resolved_bit(n) - 1};
  std::vector<std::uint64_t> eps;
  for (std::size_t t = 1; t <= steps; ++t) {
    const SystemState next = dynamics.advance(ref);
    std::vector<std::size_t> spawned;
    for (std::size_t cell : replicas) {
      std::vector<BitBlock> config = ref.blocks;
      config[cell / n].flip(cell % n);
      std::vector<BitBlock> image(b);
      dynamics.evolve(ref, config, image);
      for (std::size_t j = 0; j < b; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          if (image[j].test(i) != next.blocks[j].test(i)) spawned.push_back(j * n + i);
        }
      }
      if (spawned.size() > max_replicas) {
        throw ResourceGuardError("replica multiset exceeded " + std::to_string(max_replicas));
      }
    }
    eps.push_back(spawned.size());
    if (spawned.empty()) break;
    replicas = std::move(spawned);
    ref = next;
  }
  return eps;
}

inline std::vector<std::uint64_t> naive_defect_oracle(const ModeContext& ctx,
                                                      const SystemState& plaintext,
                                                      const PerturbationSpec& pert,
                                                      std::size_t steps,
                                                      std::size_t max_replicas = std::size_t{1} << 22) {
  return naive_defect_oracle(ModeDynamics(ctx), plaintext, pert, steps, max_replicas);
}

namespace detail {

inline std::string format_double(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "-inf") return -INFINITY;
  if (s == "inf") return INFINITY;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

}  // namespace detail

/// CSV: t,ln_epsilon,lambda,lambda_normalized
inline void write_trace_csv(std::ostream& os, const LyapunovTrace& trace) {
  os << "t,ln_epsilon,lambda,lambda_normalized\n";
  for (std::size_t t = 0; t < trace.steps(); ++t) {
    os << (t + 1) << ',' << detail::format_double(trace.epsilon_log[t]) << ','
       << detail::format_double(trace.lambda[t]) << ','
       << detail::format_double(trace.lambda[t] / trace.lambda_m) << '\n';
  }
}

/// Sidecar with exact epsilon_t as decimal strings: t,epsilon
inline void write_epsilon_csv(std::ostream& os, const LyapunovTrace& trace) {
  os << "t,epsilon\n";
  for (std::size_t t = 0; t < trace.epsilon.size(); ++t) {
    os << (t + 1) << ',' << trace.epsilon[t].to_decimal() << '\n';
  }
}

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Columns of a trace CSV as read back from disk.
struct TraceTable {
  std::vector<double> ln_epsilon;
  std::vector<double> lambda;
  std::vector<double> normalized;
  std::size_t steps() const noexcept { return lambda.size(); }
};

inline TraceTable read_trace_csv(std::istream& is) {
  TraceTable table;
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,ln_epsilon,lambda,lambda_normalized", 0) != 0) {
    throw TraceFormatError("trace file lacks the t,ln_epsilon,lambda,lambda_normalized header");
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (f.size() != 4) throw TraceFormatError(where + "expected 4 fields");
    try {
      if (std::stoul(f[0]) != table.steps() + 1) {
        throw TraceFormatError(where + "steps must be consecutive from 1");
      }
      table.ln_epsilon.push_back(detail::parse_double(f[1]));
      table.lambda.push_back(detail::parse_double(f[2]));
      table.normalized.push_back(detail::parse_double(f[3]));
    } catch (const TraceFormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw TraceFormatError(where + e.what());
    }
  }
  if (table.lambda.empty()) throw TraceFormatError("trace file has no steps");
  return table;
}

}  // namespace modelyap
