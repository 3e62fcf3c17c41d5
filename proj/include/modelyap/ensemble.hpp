#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "modelyap/cipher.hpp"
#include "modelyap/lyapunov.hpp"
#include "modelyap/mode.hpp"
#include "modelyap/stats.hpp"

namespace modelyap {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  CipherSpec cipher;
  ModeId mode = ModeId::ECB;
  std::size_t blocks = 5;
  std::size_t ensemble_size = 200;
  std::size_t steps = 200;
  std::uint64_t seed = 0;
  PerturbationSpec perturbation;
  std::optional<IvSchedule> iv_schedule;  // nullopt: the mode's default

  IvSchedule resolved_schedule() const { return iv_schedule.value_or(default_iv_schedule(mode)); }

  void validate() const {
    if (blocks == 0) throw ConfigError("blocks must be at least 1");
    if (ensemble_size < 2) throw ConfigError("ensemble_size must be at least 2");
    if (steps < 2) throw ConfigError("steps must be at least 2");
    try {
      perturbation.resolved_bit(cipher.block_bits);
    } catch (const std::out_of_range& e) {
      throw ConfigError(e.what());
    }
    (void)BlockCipher(cipher, Key(cipher.key_bits));
  }
};

struct DatasetMember {
  SystemState plaintext;  // t = 0, iv = gamma
  Key key;
  std::size_t flip_bit = 0;  // 1-based from the MSB of block 1
};

namespace detail {

template <class Bits>
Bits draw_bits(std::mt19937_64& rng, std::size_t width) {
  const std::uint64_t lo = rng();
  const std::uint64_t hi = width > 64 ? rng() : 0;
  return Bits(width, hi, lo);
}

}  // namespace detail

/// Members are drawn from one mt19937_64 stream in a fixed order: key, iv,
/// plaintext blocks 1..b, then the flipped bit under the random policy. The
/// mode takes no part in generation, so configs differing only in mode share
/// their data member for member.
inline std::vector<DatasetMember> generate_dataset(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n = config.cipher.block_bits;
  const std::size_t k = config.cipher.key_bits;
  std::mt19937_64 rng(config.seed);
  std::set<std::pair<std::uint64_t, std::uint64_t>> used_keys;
  const std::size_t key_space_bits = k;

  std::vector<DatasetMember> out;
  out.reserve(config.ensemble_size);
  for (std::size_t e = 0; e < config.ensemble_size; ++e) {
    DatasetMember m;
    std::size_t retries = 0;
    for (;;) {
      m.key = detail::draw_bits<Key>(rng, k);
      const bool repeated = used_keys.count({m.key.hi(), m.key.lo()}) != 0;
      if (!repeated && !is_weak_key(config.cipher, m.key)) break;
      // Tiny toy key spaces run out of distinct keys; accept repeats once exhausted.
      if (repeated && key_space_bits < 64 && used_keys.size() >= (std::uint64_t{1} << key_space_bits) &&
          !is_weak_key(config.cipher, m.key)) {
        break;
      }
      if (++retries > 1000) {
        throw GenerationError("key generation exceeded 1000 retries for member " +
                              std::to_string(e));
      }
    }
    used_keys.insert({m.key.hi(), m.key.lo()});
    m.plaintext.iv = detail::draw_bits<BitBlock>(rng, n);
    m.plaintext.blocks.reserve(config.blocks);
    for (std::size_t j = 0; j < config.blocks; ++j) {
      m.plaintext.blocks.push_back(detail::draw_bits<BitBlock>(rng, n));
    }
    m.plaintext.t = 0;
    m.flip_bit = config.perturbation.policy == PerturbationPolicy::random_per_member
                     ? static_cast<std::size_t>(rng() % n) + 1
                     : config.perturbation.resolved_bit(n);
    out.push_back(std::move(m));
  }
  return out;
}

struct EnsembleResult {
  ExperimentConfig config;
  double lambda_m = 0.0;
  std::vector<LyapunovTrace> members;  // in member order, extinct ones included
  std::vector<std::size_t> excluded;   // indices of extinct members
  std::vector<double> mean_lambda;
  double sigma = 0.0;
  double delta = 0.0;
  bool converged = false;
  std::optional<std::size_t> converged_at;

  std::size_t steps() const noexcept { return mean_lambda.size(); }
  std::vector<double> final_lambdas() const {
    std::vector<double> out;
    out.reserve(members.size());
    for (const auto& m : members) out.push_back(m.final_lambda());
    return out;
  }
  double mean_final() const { return mean_lambda.empty() ? NAN : mean_lambda.back(); }
  std::vector<double> normalized_mean() const {
    std::vector<double> out(mean_lambda.size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = mean_lambda[t] / lambda_m;
    return out;
  }
};

/// Fills mean/sigma/delta/convergence from result.members, skipping extinct
/// members. Summation runs in member order so results are reproducible.
inline void aggregate(EnsembleResult& result) {
  result.excluded.clear();
  std::vector<const LyapunovTrace*> live;
  for (std::size_t i = 0; i < result.members.size(); ++i) {
    const auto& m = result.members[i];
    if (m.extinct() || m.steps() != result.config.steps) {
      result.excluded.push_back(i);
    } else {
      live.push_back(&m);
    }
  }
  if (live.empty()) throw std::runtime_error("every ensemble member went extinct");
  const std::size_t T = result.config.steps;
  result.mean_lambda.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0.0;
    for (const auto* m : live) sum += m->lambda[t];
    result.mean_lambda[t] = sum / static_cast<double>(live.size());
  }
  std::vector<double> finals;
  finals.reserve(live.size());
  for (const auto* m : live) finals.push_back(m->lambda.back());
  result.sigma = sample_sd(finals);
  const auto [lo, hi] = std::minmax_element(finals.begin(), finals.end());
  result.delta = *hi - *lo;
  result.converged_at = convergence_step(result.mean_lambda);
  result.converged = std::fabs(result.mean_lambda[T - 2] - result.mean_lambda[T - 1]) <
                     convergence_tolerance;
}

inline std::size_t default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first
/// exception thrown by any call is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline EnsembleResult run_ensemble(const ExperimentConfig& config, std::size_t jobs = 1) {
  const std::vector<DatasetMember> data = generate_dataset(config);
  EnsembleResult result;
  result.config = config;
  result.lambda_m = lambda_upper_bound(config.blocks, config.cipher.block_bits);
  result.members.resize(data.size());
  parallel_for(data.size(), jobs, [&](std::size_t i) {
    const ModeContext ctx(config.mode, config.cipher, data[i].key, config.resolved_schedule());
    PerturbationSpec pert{data[i].flip_bit, PerturbationPolicy::fixed};
    result.members[i] = lyapunov_curve(ctx, data[i].plaintext, pert, config.steps);
  });
  aggregate(result);
  return result;
}

/// Post-transient window [T/4, T] as 0-based indices [first, T).
inline std::size_t transient_cut(std::size_t steps) {
  return std::max<std::size_t>(1, steps / 4) - 1;
}

/// Fraction of curves in `a` lying inside the pointwise [min, max] envelope
/// of `b` at every t in [T/4, T].
inline double envelope_inclusion_rate(std::span<const std::vector<double>> a,
                                      std::span<const std::vector<double>> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("envelope needs non-empty curve sets");
  const std::size_t T = b.front().size();
  for (const auto& c : a) {
    if (c.size() != T) throw DimensionError("envelope curves differ in length");
  }
  for (const auto& c : b) {
    if (c.size() != T) throw DimensionError("envelope curves differ in length");
  }
  std::vector<double> lo(T, INFINITY), hi(T, -INFINITY);
  for (const auto& c : b) {
    for (std::size_t t = 0; t < T; ++t) {
      lo[t] = std::min(lo[t], c[t]);
      hi[t] = std::max(hi[t], c[t]);
    }
  }
  std::size_t inside = 0;
  for (const auto& c : a) {
    bool ok = true;
    for (std::size_t t = transient_cut(T); t < T && ok; ++t) ok = c[t] >= lo[t] && c[t] <= hi[t];
    inside += ok ? 1 : 0;
  }
  return static_cast<double>(inside) / static_cast<double>(a.size());
}

inline double envelope_outlier_rate(std::span<const std::vector<double>> a,
                                    std::span<const std::vector<double>> b) {
  return 1.0 - envelope_inclusion_rate(a, b);
}

inline std::vector<std::vector<double>> member_curves(const EnsembleResult& r) {
  std::vector<std::vector<double>> out;
  out.reserve(r.members.size());
  for (std::size_t i = 0; i < r.members.size(); ++i) {
    if (std::find(r.excluded.begin(), r.excluded.end(), i) == r.excluded.end()) {
      out.push_back(r.members[i].lambda);
    }
  }
  return out;
}

struct BlockPoint {
  std::size_t blocks = 0;
  double lambda = 0.0;
};

struct RegressionFit {
  double alpha = 0.0;  // slope in ln(b)
  double beta = 0.0;
  double r_squared = 0.0;
};

/// Least squares of final lambda against ln(b).
inline RegressionFit fit_lambda_vs_blocks(std::span<const BlockPoint> points) {
  std::set<std::size_t> distinct;
  for (const auto& p : points) {
    if (p.blocks == 0) throw FitError("block count must be positive");
    distinct.insert(p.blocks);
  }
  if (distinct.size() < 3) throw FitError("need at least 3 distinct block counts");
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    xs.push_back(std::log(static_cast<double>(p.blocks)));
    ys.push_back(p.lambda);
  }
  const LinearFit f = least_squares(xs, ys);
  return {f.slope, f.intercept, f.r_squared};
}

}  // namespace modelyap
