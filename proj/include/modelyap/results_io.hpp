#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modelyap/ensemble.hpp"
#include "modelyap/stats.hpp"

namespace modelyap {

namespace fs = std::filesystem;
using nlohmann::json;

/// An experiment as written in a config file: one ExperimentConfig per mode.
struct RunConfig {
  ExperimentConfig base;
  std::vector<ModeId> modes;

  ExperimentConfig for_mode(ModeId m) const {
    ExperimentConfig c = base;
    c.mode = m;
    return c;
  }
};

inline CipherSpec cipher_from_config(const std::string& name, std::optional<unsigned> rounds,
                                     std::optional<std::size_t> toy_bits, std::uint64_t toy_seed) {
  if (name == "toy-xor" || name == "toy-perm" || name == "toy-identity") {
    const ToyKind kind = name == "toy-xor"    ? ToyKind::xor_key
                         : name == "toy-perm" ? ToyKind::permutation
                                              : ToyKind::identity;
    return toy_cipher(kind, toy_bits.value_or(8), toy_seed);
  }
  return cipher_spec(name, rounds);
}

inline std::string perturbation_policy_name(PerturbationPolicy p) {
  return p == PerturbationPolicy::fixed ? "fixed" : "random";
}

/// Config schema (all keys optional except cipher and mode/modes):
///   cipher: "tea" | "xtea" | "aes128" | "toy-xor" | "toy-perm" | "toy-identity"
///   rounds, toy_bits, toy_seed, mode or modes, blocks, ensemble_size, steps,
///   seed, perturbation {bit, policy: "fixed"|"random"},
///   iv_schedule: "default" | "chained" | "refreshed"
inline RunConfig run_config_from_json(const json& j) {
  static const std::set<std::string> known = {
      "cipher", "rounds", "toy_bits", "toy_seed", "mode", "modes", "blocks",
      "ensemble_size", "steps", "seed", "perturbation", "iv_schedule"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig rc;
  try {
    std::optional<unsigned> rounds;
    if (j.contains("rounds")) rounds = j.at("rounds").get<unsigned>();
    std::optional<std::size_t> toy_bits;
    if (j.contains("toy_bits")) toy_bits = j.at("toy_bits").get<std::size_t>();
    rc.base.cipher = cipher_from_config(j.at("cipher").get<std::string>(), rounds, toy_bits,
                                        j.value("toy_seed", std::uint64_t{0}));
    if (j.contains("mode") == j.contains("modes")) {
      throw ConfigError("config needs exactly one of 'mode' or 'modes'");
    }
    if (j.contains("mode")) {
      rc.modes.push_back(mode_from_name(j.at("mode").get<std::string>()));
    } else {
      for (const auto& m : j.at("modes")) rc.modes.push_back(mode_from_name(m.get<std::string>()));
    }
    if (rc.modes.empty()) throw ConfigError("'modes' is empty");
    rc.base.mode = rc.modes.front();
    const auto signed_count = [&](const char* key, long long fallback) {
      const long long v = j.value(key, fallback);
      if (v < 0) throw ConfigError(std::string(key) + " must be non-negative");
      return static_cast<std::size_t>(v);
    };
    rc.base.blocks = signed_count("blocks", 5);
    rc.base.ensemble_size = signed_count("ensemble_size", 200);
    rc.base.steps = signed_count("steps", 200);
    rc.base.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("perturbation")) {
      const auto& p = j.at("perturbation");
      rc.base.perturbation.bit = p.value("bit", std::size_t{0});
      const std::string policy = p.value("policy", std::string("fixed"));
      if (policy == "fixed") {
        rc.base.perturbation.policy = PerturbationPolicy::fixed;
      } else if (policy == "random") {
        rc.base.perturbation.policy = PerturbationPolicy::random_per_member;
      } else {
        throw ConfigError("unknown perturbation policy '" + policy + "'");
      }
    }
    const std::string sched = j.value("iv_schedule", std::string("default"));
    if (sched == "chained") {
      rc.base.iv_schedule = IvSchedule::chained;
    } else if (sched == "refreshed") {
      rc.base.iv_schedule = IvSchedule::refreshed;
    } else if (sched != "default") {
      throw ConfigError("unknown iv_schedule '" + sched + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (ModeId m : rc.modes) rc.for_mode(m).validate();
  return rc;
}

inline json cipher_to_json(const CipherSpec& c) {
  json j = {{"name", cipher_name(c.id)},
            {"block_bits", c.block_bits},
            {"key_bits", c.key_bits},
            {"rounds", c.rounds},
            {"family", family_name(family_of(c))}};
  if (c.id == CipherId::toy_permutation) j["toy_seed"] = c.seed;
  return j;
}

/// The fully resolved configuration, written back into every output.
inline json run_config_to_json(const RunConfig& rc) {
  json modes = json::array();
  json schedules = json::object();
  for (ModeId m : rc.modes) {
    modes.push_back(mode_name(m));
    schedules[mode_name(m)] = iv_schedule_name(rc.for_mode(m).resolved_schedule());
  }
  const std::size_t n = rc.base.cipher.block_bits;
  return {{"cipher", cipher_to_json(rc.base.cipher)},
          {"modes", modes},
          {"blocks", rc.base.blocks},
          {"ensemble_size", rc.base.ensemble_size},
          {"steps", rc.base.steps},
          {"seed", rc.base.seed},
          {"perturbation",
           {{"bit", rc.base.perturbation.policy == PerturbationPolicy::fixed
                        ? json(rc.base.perturbation.resolved_bit(n))
                        : json(nullptr)},
            {"policy", perturbation_policy_name(rc.base.perturbation.policy)}}},
          {"iv_schedule", schedules}};
}

inline json ensemble_to_json(const EnsembleResult& r) {
  return {{"mode", mode_name(r.config.mode)},
          {"cipher", cipher_name(r.config.cipher.id)},
          {"family", family_name(family_of(r.config.cipher))},
          {"block_bits", r.config.cipher.block_bits},
          {"blocks", r.config.blocks},
          {"steps", r.config.steps},
          {"iv_schedule", iv_schedule_name(r.config.resolved_schedule())},
          {"lambda_m", r.lambda_m},
          {"mean_final_lambda", r.mean_final()},
          {"sigma", r.sigma},
          {"delta", r.delta},
          {"converged", r.converged},
          {"converged_at", r.converged_at ? json(*r.converged_at) : json(nullptr)},
          {"excluded_members", r.excluded},
          {"final_lambda", r.final_lambdas()},
          {"mean_lambda", r.mean_lambda}};
}

struct PairTest {
  ModeId a = ModeId::ECB;
  ModeId b = ModeId::ECB;
  PairedTTest test;
};

/// Paired t-tests on final lambda for every pair of ensembles, members
/// matched by index; members extinct in either ensemble are dropped.
inline std::vector<PairTest> pairwise_tests(const std::vector<EnsembleResult>& results) {
  std::vector<PairTest> out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (std::size_t k = i + 1; k < results.size(); ++k) {
      const auto fa = results[i].final_lambdas();
      const auto fb = results[k].final_lambdas();
      if (fa.size() != fb.size()) continue;
      std::vector<double> xa, xb;
      for (std::size_t m = 0; m < fa.size(); ++m) {
        if (std::isfinite(fa[m]) && std::isfinite(fb[m])) {
          xa.push_back(fa[m]);
          xb.push_back(fb[m]);
        }
      }
      if (xa.size() < 2) continue;
      out.push_back({results[i].config.mode, results[k].config.mode, paired_t_test(xa, xb)});
    }
  }
  return out;
}

inline json tests_to_json(const std::vector<PairTest>& tests) {
  json arr = json::array();
  for (const auto& pt : tests) {
    arr.push_back({{"a", mode_name(pt.a)},
                   {"b", mode_name(pt.b)},
                   {"t", std::isfinite(pt.test.t) ? json(pt.test.t)
                                                  : json(pt.test.t > 0 ? "inf" : "-inf")},
                   {"p", pt.test.p},
                   {"dof", pt.test.dof},
                   {"zero_variance", pt.test.zero_variance}});
  }
  return arr;
}

inline constexpr int results_version = 1;

inline json results_document(const RunConfig& rc, const std::vector<EnsembleResult>& results) {
  json ens = json::array();
  for (const auto& r : results) ens.push_back(ensemble_to_json(r));
  return {{"format", "modelyap-results"},
          {"version", results_version},
          {"config", run_config_to_json(rc)},
          {"ensembles", ens},
          {"t_tests", tests_to_json(pairwise_tests(results))}};
}

inline std::string member_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "member_%04zu.csv", index);
  return buf;
}

inline std::string epsilon_file_name(std::size_t index) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "member_%04zu_epsilon.csv", index);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

/// Writes results.json and members/<MODE>/member_NNNN.csv under `dir`.
inline void write_run(const fs::path& dir, const RunConfig& rc,
                      const std::vector<EnsembleResult>& results, bool exact_epsilon) {
  fs::create_directories(dir);
  write_text(dir / "results.json", results_document(rc, results).dump(2) + "\n");
  for (const auto& r : results) {
    const fs::path mdir = dir / "members" / mode_name(r.config.mode);
    fs::create_directories(mdir);
    for (std::size_t i = 0; i < r.members.size(); ++i) {
      std::ofstream os(mdir / member_file_name(i), std::ios::binary);
      write_trace_csv(os, r.members[i]);
      if (exact_epsilon) {
        std::ofstream es(mdir / epsilon_file_name(i), std::ios::binary);
        write_epsilon_csv(es, r.members[i]);
      }
    }
  }
}

class ResultsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ResultsError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ResultsError(path.string() + ": " + e.what());
  }
}

/// Loads every ensemble of a run directory (or its results.json) with member
/// curves from the CSVs, recomputes the aggregates and checks them against
/// the stored ones.
inline std::vector<EnsembleResult> load_run(const fs::path& where) {
  const fs::path file = fs::is_directory(where) ? where / "results.json" : where;
  const fs::path dir = file.parent_path();
  const json doc = read_json_file(file);
  if (doc.value("format", "") != "modelyap-results") {
    throw ResultsError(file.string() + " is not a results file");
  }
  std::vector<EnsembleResult> out;
  try {
    const RunConfig rc = [&] {
      const json& c = doc.at("config");
      RunConfig r;
      const json& cj = c.at("cipher");
      r.base.cipher = cipher_from_config(cj.at("name").get<std::string>(),
                                         cj.at("rounds").get<unsigned>(),
                                         cj.at("block_bits").get<std::size_t>(),
                                         cj.value("toy_seed", std::uint64_t{0}));
      r.base.blocks = c.at("blocks").get<std::size_t>();
      r.base.ensemble_size = c.at("ensemble_size").get<std::size_t>();
      r.base.steps = c.at("steps").get<std::size_t>();
      r.base.seed = c.at("seed").get<std::uint64_t>();
      return r;
    }();
    for (const auto& e : doc.at("ensembles")) {
      EnsembleResult r;
      r.config = rc.base;
      r.config.mode = mode_from_name(e.at("mode").get<std::string>());
      r.config.iv_schedule = e.at("iv_schedule").get<std::string>() == "chained"
                                 ? IvSchedule::chained
                                 : IvSchedule::refreshed;
      r.lambda_m = e.at("lambda_m").get<double>();
      const fs::path mdir = dir / "members" / mode_name(r.config.mode);
      for (std::size_t i = 0; i < r.config.ensemble_size; ++i) {
        std::ifstream is(mdir / member_file_name(i));
        if (!is) throw ResultsError("missing member curve " + (mdir / member_file_name(i)).string());
        const TraceTable table = read_trace_csv(is);
        LyapunovTrace tr;
        tr.lambda_m = r.lambda_m;
        tr.lambda = table.lambda;
        tr.epsilon_log = table.ln_epsilon;
        for (std::size_t t = 0; t < tr.lambda.size(); ++t) {
          if (std::isinf(tr.lambda[t]) && tr.lambda[t] < 0) tr.extinct_at = t + 1;
        }
        if (!tr.extinct()) tr.converged_at = convergence_step(tr.lambda);
        r.members.push_back(std::move(tr));
      }
      aggregate(r);
      if (r.mean_lambda != e.at("mean_lambda").get<std::vector<double>>() ||
          r.sigma != e.at("sigma").get<double>() || r.delta != e.at("delta").get<double>()) {
        throw ResultsError("member curves under " + mdir.string() +
                           " do not reproduce the stored aggregates");
      }
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ResultsError(file.string() + ": " + e.what());
  }
  return out;
}

}  // namespace modelyap
