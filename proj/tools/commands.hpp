#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modelyap/classify.hpp"
#include "modelyap/ensemble.hpp"
#include "modelyap/kat.hpp"
#include "modelyap/plot.hpp"
#include "modelyap/results_io.hpp"

namespace modelyap::cli {

inline constexpr const char* tool_version = "1.0.0";

enum ExitCode : int { ok = 0, failure = 1, usage = 2 };

/// Thrown for bad input: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// UTC ISO-8601 time; SOURCE_DATE_EPOCH pins it for reproducible manifests.
inline std::string manifest_timestamp() {
  std::time_t now = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) now = std::strtoll(sde, nullptr, 10);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_manifest(const fs::path& dir, const std::string& command,
                           const std::string& config_path, const json& flags,
                           const json& resolved) {
  json m = {{"tool", "modelyap"},
            {"version", tool_version},
            {"command", command},
            {"config_path", config_path},
            {"output_dir", dir.string()},
            {"flags", flags},
            {"resolved_config", resolved},
            {"timestamp", manifest_timestamp()}};
  fs::create_directories(dir);
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

// ---- kat

inline int cmd_kat(const std::string& path, std::ostream& out, std::ostream& err) {
  std::ifstream is(path);
  if (!is) {
    err << "error: cannot open " << path << "\n";
    return usage;
  }
  std::vector<KatRecord> records;
  try {
    records = parse_kat(is);
  } catch (const KatParseError& e) {
    err << path << ":" << e.line() << ": " << e.what() << "\n";
    return usage;
  }
  if (records.empty()) {
    err << "warning: 0 vectors in " << path << "\n";
    out << "0 vectors, 0 failures\n";
    return ok;
  }
  const KatReport report = verify_kat(records);
  for (const auto& f : report.failures) {
    out << "FAIL line " << f.line << " " << f.cipher << ": expected " << f.expected_hex
        << ", got " << f.actual_hex << "\n";
  }
  out << report.vectors << " vectors, " << report.failures.size() << " failures\n";
  return report.ok() ? ok : failure;
}

// ---- run

struct RunOverrides {
  std::optional<std::string> cipher;
  std::optional<unsigned> rounds;
  std::vector<std::string> modes;
  std::optional<long long> blocks;
  std::optional<long long> ensemble_size;
  std::optional<long long> steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> iv_schedule;

  json as_json() const {
    json j = json::object();
    if (cipher) j["cipher"] = *cipher;
    if (rounds) j["rounds"] = *rounds;
    if (!modes.empty()) j["modes"] = modes;
    if (blocks) j["blocks"] = *blocks;
    if (ensemble_size) j["ensemble_size"] = *ensemble_size;
    if (steps) j["steps"] = *steps;
    if (seed) j["seed"] = *seed;
    if (iv_schedule) j["iv_schedule"] = *iv_schedule;
    return j;
  }
};

/// Config file, then MODELYAP_SEED, then command-line flags.
inline RunConfig resolve_config(const std::string& config_path, const RunOverrides& o) {
  json j = json::object();
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw UsageError("cannot open config " + config_path);
    try {
      j = json::parse(is);
    } catch (const json::exception& e) {
      throw UsageError(config_path + ": " + e.what());
    }
    if (!j.is_object()) throw UsageError(config_path + ": config must be a JSON object");
  }
  if (const char* env = std::getenv("MODELYAP_SEED")) {
    try {
      std::size_t used = 0;
      const std::string s(env);
      j["seed"] = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError("MODELYAP_SEED is not an unsigned integer");
    }
  }
  const json flags = o.as_json();
  for (const auto& [k, v] : flags.items()) j[k] = v;
  if (!o.modes.empty()) j.erase("mode");
  return run_config_from_json(j);
}

inline std::vector<EnsembleResult> run_all_modes(const RunConfig& rc, std::size_t jobs) {
  std::vector<EnsembleResult> results;
  for (ModeId m : rc.modes) {
    results.push_back(run_ensemble(rc.for_mode(m), jobs));
    const auto& r = results.back();
    if (!r.excluded.empty()) {
      std::cerr << "warning: " << mode_name(m) << ": " << r.excluded.size()
                << " extinct member(s) excluded from the mean\n";
    }
  }
  return results;
}

inline int cmd_run(const std::string& config_path, const RunOverrides& o, const fs::path& out_dir,
                   std::size_t jobs, bool exact_epsilon, std::ostream& out) {
  const RunConfig rc = resolve_config(config_path, o);
  const std::vector<EnsembleResult> results = run_all_modes(rc, jobs);
  json flags = o.as_json();
  flags["exact_epsilon"] = exact_epsilon;
  write_manifest(out_dir, "run", config_path, flags, run_config_to_json(rc));
  write_run(out_dir, rc, results, exact_epsilon);
  for (const auto& r : results) {
    char line[160];
    std::snprintf(line, sizeof line, "%-5s lambda(T)=%.6f lambda/lambda_m=%.6f sigma=%.3e delta=%.3e%s\n",
                  mode_name(r.config.mode).c_str(), r.mean_final(), r.mean_final() / r.lambda_m,
                  r.sigma, r.delta, r.converged ? " converged" : "");
    out << line;
  }
  return ok;
}

// ---- plot

inline int cmd_plot(const std::vector<std::string>& inputs, const fs::path& output,
                    const std::string& title, std::ostream& out) {
  std::vector<PlotSeries> series;
  for (const auto& in : inputs) {
    for (const auto& r : load_run(in)) {
      series.push_back({cipher_name(r.config.cipher.id) + " " + mode_name(r.config.mode),
                        r.config.mode, r.normalized_mean()});
    }
  }
  const std::string svg = render_svg(series, title);
  if (!output.parent_path().empty()) fs::create_directories(output.parent_path());
  write_text(output, svg);
  out << "wrote " << series.size() << " curve(s) to " << output.string() << "\n";
  return ok;
}

// ---- profiles build

inline int cmd_profiles_build(const std::vector<std::string>& inputs, const fs::path& output,
                              std::ostream& out) {
  std::vector<EnsembleResult> all;
  for (const auto& in : inputs) {
    for (auto& r : load_run(in)) all.push_back(std::move(r));
  }
  const auto profiles = build_profiles(all);
  if (!output.parent_path().empty()) fs::create_directories(output.parent_path());
  write_text(output, profiles_to_json(profiles).dump(2) + "\n");
  out << "wrote " << profiles.size() << " profile(s) to " << output.string() << "\n";
  return ok;
}

// ---- classify

inline json verdict_to_json(const Verdict& v, std::span<const ModeProfile> profiles) {
  json predicted = json::array();
  for (ModeId m : v.predicted) predicted.push_back(mode_name(m));
  return {{"predicted", predicted},
          {"family", family_name(v.family)},
          {"distance", v.distance},
          {"runner_up_margin", v.runner_up_margin},
          {"profile", {{"mode", mode_name(profiles[v.profile_index].mode)},
                       {"family", family_name(profiles[v.profile_index].family)}}}};
}

inline int cmd_classify(const fs::path& store, const fs::path& trace_file,
                        const std::optional<fs::path>& json_out, std::ostream& out) {
  const auto profiles = profiles_from_json(read_json_file(store));
  std::ifstream is(trace_file);
  if (!is) throw UsageError("cannot open trace " + trace_file.string());
  const TraceTable table = read_trace_csv(is);
  const Verdict v = classify_trace(table.normalized, profiles);
  std::string modes;
  for (ModeId m : v.predicted) modes += (modes.empty() ? "" : "|") + mode_name(m);
  char line[200];
  std::snprintf(line, sizeof line, "mode %s family %s distance %.6g margin %.6g\n", modes.c_str(),
                family_name(v.family).c_str(), v.distance, v.runner_up_margin);
  out << line;
  const json j = verdict_to_json(v, profiles);
  if (json_out) {
    if (json_out->string() == "-") {
      out << j.dump(2) << "\n";
    } else {
      write_text(*json_out, j.dump(2) + "\n");
    }
  }
  return ok;
}

// ---- sweep-blocks

inline const std::vector<std::size_t> default_sweep_blocks = {2, 4, 8, 12, 16, 20};

struct SweepOutcome {
  std::vector<ModeId> modes;
  std::vector<std::size_t> blocks;
  std::vector<std::vector<double>> mean_final;  // [mode][block index]
  std::vector<std::optional<RegressionFit>> fits;
};

inline SweepOutcome run_sweep(const RunConfig& rc, const std::vector<std::size_t>& blocks,
                              std::size_t jobs, const std::optional<fs::path>& out_dir) {
  SweepOutcome s;
  s.modes = rc.modes;
  s.blocks = blocks;
  s.mean_final.assign(rc.modes.size(), {});
  for (std::size_t b : blocks) {
    RunConfig at = rc;
    at.base.blocks = b;
    const auto results = run_all_modes(at, jobs);
    for (std::size_t i = 0; i < results.size(); ++i) {
      s.mean_final[i].push_back(results[i].mean_final());
    }
    if (out_dir) {
      char name[32];
      std::snprintf(name, sizeof name, "b_%02zu", b);
      write_run(*out_dir / name, at, results, false);
    }
  }
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    std::vector<BlockPoint> pts;
    for (std::size_t k = 0; k < blocks.size(); ++k) pts.push_back({blocks[k], s.mean_final[i][k]});
    try {
      s.fits.push_back(fit_lambda_vs_blocks(pts));
    } catch (const FitError&) {
      s.fits.push_back(std::nullopt);
    }
  }
  return s;
}

inline json sweep_to_json(const RunConfig& rc, const SweepOutcome& s) {
  json modes = json::array();
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    const auto& v = s.mean_final[i];
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    bool nondecreasing = true;
    for (std::size_t k = 1; k < v.size(); ++k) nondecreasing = nondecreasing && v[k] >= v[k - 1];
    json fit = nullptr;
    if (s.fits[i]) {
      fit = {{"alpha", s.fits[i]->alpha},
             {"beta", s.fits[i]->beta},
             {"r_squared", s.fits[i]->r_squared}};
    }
    modes.push_back({{"mode", mode_name(s.modes[i])},
                     {"mean_final_lambda", v},
                     {"spread", *hi - *lo},
                     {"nondecreasing", nondecreasing},
                     {"fit", fit}});
  }
  return {{"format", "modelyap-sweep"},
          {"version", results_version},
          {"config", run_config_to_json(rc)},
          {"blocks", s.blocks},
          {"modes", modes}};
}

inline int cmd_sweep_blocks(const std::string& config_path, const RunOverrides& o,
                            const std::vector<std::size_t>& blocks, const fs::path& out_dir,
                            std::size_t jobs, std::ostream& out) {
  const RunConfig rc = resolve_config(config_path, o);
  for (std::size_t b : blocks) {
    if (b == 0) throw ConfigError("block counts must be positive");
  }
  const SweepOutcome s = run_sweep(rc, blocks, jobs, out_dir);
  json flags = o.as_json();
  flags["blocks_list"] = blocks;
  write_manifest(out_dir, "sweep-blocks", config_path, flags, run_config_to_json(rc));
  write_text(out_dir / "sweep.json", sweep_to_json(rc, s).dump(2) + "\n");
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    char line[160];
    if (s.fits[i]) {
      std::snprintf(line, sizeof line, "%-5s alpha=%.4f beta=%.4f R2=%.4f\n",
                    mode_name(s.modes[i]).c_str(), s.fits[i]->alpha, s.fits[i]->beta,
                    s.fits[i]->r_squared);
    } else {
      std::snprintf(line, sizeof line, "%-5s no fit (fewer than 3 block counts)\n",
                    mode_name(s.modes[i]).c_str());
    }
    out << line;
  }
  return ok;
}

/// Maps exceptions escaping a command to the stable exit codes.
template <class Fn>
int guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const std::invalid_argument& e) {  // config, cipher, mode, dimension errors
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const TraceFormatError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const ProfileError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const ResultsError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const FitError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return failure;
  }
}

}  // namespace modelyap::cli
