#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modelyap/cipher.hpp"
#include "modelyap/ensemble.hpp"
#include "modelyap/mode.hpp"

namespace modelyap {

class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// OFB and CTR are indistinguishable by their exponent curves.
inline bool is_pair_mode(ModeId m) { return m == ModeId::OFB || m == ModeId::CTR; }

inline ModeId pair_partner(ModeId m) { return m == ModeId::OFB ? ModeId::CTR : ModeId::OFB; }

struct ModeProfile {
  ModeId mode = ModeId::ECB;
  Family family = Family::bits64;
  std::vector<double> mean_curve;  // lambda(t) / lambda_m
  std::vector<double> band_lo;
  std::vector<double> band_hi;
  std::vector<std::string> source_ciphers;
  bool paired = false;

  std::size_t steps() const noexcept { return mean_curve.size(); }
};

/// Pools every member curve of every result sharing (mode, family). The
/// profile mean is the mean over pooled members, so a single result gives
/// exactly its own normalized mean curve.
inline std::vector<ModeProfile> build_profiles(std::span<const EnsembleResult> results) {
  if (results.empty()) throw ProfileError("no ensemble results to build profiles from");
  const std::size_t T = results.front().steps();
  std::map<std::pair<int, int>, std::vector<const EnsembleResult*>> groups;
  for (const auto& r : results) {
    if (r.steps() != T) throw DimensionError("ensemble results differ in T");
    groups[{static_cast<int>(family_of(r.config.cipher)), static_cast<int>(r.config.mode)}]
        .push_back(&r);
  }

  std::vector<std::string> gaps;
  std::set<int> families;
  for (const auto& [key, _] : groups) families.insert(key.first);
  for (int f : families) {
    for (ModeId m : all_modes) {
      if (!groups.count({f, static_cast<int>(m)})) {
        gaps.push_back(family_name(static_cast<Family>(f)) + "/" + mode_name(m));
      }
    }
  }
  if (!gaps.empty()) {
    std::string msg = "profile set lacks";
    for (const auto& g : gaps) msg += " " + g;
    throw ProfileError(msg);
  }

  std::vector<ModeProfile> out;
  for (const auto& [key, group] : groups) {
    ModeProfile p;
    p.family = static_cast<Family>(key.first);
    p.mode = static_cast<ModeId>(key.second);
    p.paired = is_pair_mode(p.mode);
    p.mean_curve.assign(T, 0.0);
    p.band_lo.assign(T, INFINITY);
    p.band_hi.assign(T, -INFINITY);
    std::size_t count = 0;
    for (const auto* r : group) {
      const std::string name = cipher_name(r->config.cipher.id);
      if (std::find(p.source_ciphers.begin(), p.source_ciphers.end(), name) ==
          p.source_ciphers.end()) {
        p.source_ciphers.push_back(name);
      }
      for (const auto& curve : member_curves(*r)) {
        for (std::size_t t = 0; t < T; ++t) {
          const double v = curve[t] / r->lambda_m;
          p.mean_curve[t] += v;
          p.band_lo[t] = std::min(p.band_lo[t], v);
          p.band_hi[t] = std::max(p.band_hi[t], v);
        }
        ++count;
      }
    }
    if (group.size() == 1) {
      p.mean_curve = group.front()->normalized_mean();
    } else {
      for (double& v : p.mean_curve) v /= static_cast<double>(count);
    }
    // Keep the band closed around the mean despite rounding.
    for (std::size_t t = 0; t < T; ++t) {
      p.band_lo[t] = std::min(p.band_lo[t], p.mean_curve[t]);
      p.band_hi[t] = std::max(p.band_hi[t], p.mean_curve[t]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct Verdict {
  std::vector<ModeId> predicted;
  Family family = Family::bits64;
  double distance = 0.0;
  double runner_up_margin = 0.0;
  std::size_t profile_index = 0;
  std::vector<double> distances;  // one per profile, same order
};

/// RMS difference over t in [T/4, T], T being the profile length.
inline double profile_distance(std::span<const double> normalized, const ModeProfile& p) {
  const std::size_t T = p.steps();
  if (normalized.size() < T) {
    throw DimensionError("trace has " + std::to_string(normalized.size()) +
                         " steps, profile needs " + std::to_string(T));
  }
  const std::size_t first = transient_cut(T);
  double ss = 0.0;
  for (std::size_t t = first; t < T; ++t) {
    const double d = normalized[t] - p.mean_curve[t];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(T - first));
}

inline Verdict classify_trace(std::span<const double> normalized,
                              std::span<const ModeProfile> profiles) {
  if (profiles.empty()) throw ProfileError("no profiles to classify against");
  Verdict v;
  v.distances.reserve(profiles.size());
  for (const auto& p : profiles) v.distances.push_back(profile_distance(normalized, p));
  const std::size_t best = static_cast<std::size_t>(
      std::min_element(v.distances.begin(), v.distances.end()) - v.distances.begin());
  v.profile_index = best;
  v.distance = v.distances[best];
  v.family = profiles[best].family;
  v.predicted = {profiles[best].mode};

  std::optional<std::size_t> partner;
  if (profiles[best].paired) {
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      if (profiles[i].family == profiles[best].family &&
          profiles[i].mode == pair_partner(profiles[best].mode)) {
        partner = i;
      }
    }
  }
  double outside = INFINITY;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (i == best || (partner && i == *partner)) continue;
    outside = std::min(outside, v.distances[i]);
  }
  if (partner && v.distances[*partner] < outside) {
    v.predicted = {ModeId::OFB, ModeId::CTR};
  } else if (partner) {
    outside = std::min(outside, v.distances[*partner]);
  }
  v.runner_up_margin = std::isinf(outside) ? 0.0 : outside - v.distance;

  for (double d : v.distances) {
    if (d < v.distance) throw std::logic_error("verdict is not the nearest profile");
  }
  return v;
}

inline Verdict classify_trace(const LyapunovTrace& trace, std::span<const ModeProfile> profiles) {
  return classify_trace(trace.normalized(), profiles);
}

/// Confusion classes: OFB and CTR share one.
enum class ModeClass { ECB, CBC, CFB, PCBC, OFB_CTR };
inline constexpr std::array<ModeClass, 5> all_mode_classes = {
    ModeClass::ECB, ModeClass::CBC, ModeClass::CFB, ModeClass::PCBC, ModeClass::OFB_CTR};

inline ModeClass mode_class(ModeId m) {
  switch (m) {
    case ModeId::ECB: return ModeClass::ECB;
    case ModeId::CBC: return ModeClass::CBC;
    case ModeId::CFB: return ModeClass::CFB;
    case ModeId::PCBC: return ModeClass::PCBC;
    default: return ModeClass::OFB_CTR;
  }
}

inline std::string mode_class_name(ModeClass c) {
  switch (c) {
    case ModeClass::ECB: return "ECB";
    case ModeClass::CBC: return "CBC";
    case ModeClass::CFB: return "CFB";
    case ModeClass::PCBC: return "PCBC";
    case ModeClass::OFB_CTR: return "OFB|CTR";
  }
  return "?";
}

struct LabeledTrace {
  ModeId mode = ModeId::ECB;
  Family family = Family::bits64;
  std::vector<double> normalized;
};

struct ConfusionMatrix {
  std::array<std::array<std::size_t, 5>, 5> modes{};     // [true][predicted]
  std::array<std::array<std::size_t, 2>, 2> families{};  // 64-bit, 128-bit
  std::size_t total = 0;

  std::size_t mode_correct() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < 5; ++i) s += modes[i][i];
    return s;
  }
  std::size_t family_correct() const { return families[0][0] + families[1][1]; }
  bool mode_diagonal() const { return mode_correct() == total; }
};

inline std::size_t family_index(Family f) {
  if (f == Family::toy) throw ProfileError("toy traces have no family class");
  return f == Family::bits64 ? 0 : 1;
}

inline ConfusionMatrix confusion_matrix(std::span<const LabeledTrace> traces,
                                        std::span<const ModeProfile> profiles) {
  ConfusionMatrix cm;
  for (const auto& lt : traces) {
    const Verdict v = classify_trace(lt.normalized, profiles);
    const auto truth = static_cast<std::size_t>(mode_class(lt.mode));
    const auto pred = static_cast<std::size_t>(mode_class(profiles[v.profile_index].mode));
    ++cm.modes[truth][pred];
    ++cm.families[family_index(lt.family)][family_index(v.family)];
    ++cm.total;
  }
  return cm;
}

inline void write_confusion_csv(std::ostream& os, const ConfusionMatrix& cm) {
  os << "true\\predicted";
  for (ModeClass c : all_mode_classes) os << ',' << mode_class_name(c);
  os << '\n';
  for (std::size_t i = 0; i < 5; ++i) {
    os << mode_class_name(all_mode_classes[i]);
    for (std::size_t j = 0; j < 5; ++j) os << ',' << cm.modes[i][j];
    os << '\n';
  }
}

inline constexpr int profile_store_version = 1;

inline nlohmann::json profiles_to_json(std::span<const ModeProfile> profiles) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : profiles) {
    arr.push_back({{"mode", mode_name(p.mode)},
                   {"family", family_name(p.family)},
                   {"paired", p.paired},
                   {"steps", p.steps()},
                   {"source_ciphers", p.source_ciphers},
                   {"mean", p.mean_curve},
                   {"band_lo", p.band_lo},
                   {"band_hi", p.band_hi}});
  }
  return {{"format", "modelyap-profiles"}, {"version", profile_store_version}, {"profiles", arr}};
}

inline std::vector<ModeProfile> profiles_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "modelyap-profiles") {
    throw ProfileError("not a profile store");
  }
  if (j.value("version", 0) != profile_store_version) {
    throw ProfileError("unsupported profile store version");
  }
  std::vector<ModeProfile> out;
  try {
    for (const auto& e : j.at("profiles")) {
      ModeProfile p;
      p.mode = mode_from_name(e.at("mode").get<std::string>());
      p.family = family_from_name(e.at("family").get<std::string>());
      p.paired = e.at("paired").get<bool>();
      p.source_ciphers = e.at("source_ciphers").get<std::vector<std::string>>();
      p.mean_curve = e.at("mean").get<std::vector<double>>();
      p.band_lo = e.at("band_lo").get<std::vector<double>>();
      p.band_hi = e.at("band_hi").get<std::vector<double>>();
      if (p.band_lo.size() != p.steps() || p.band_hi.size() != p.steps()) {
        throw ProfileError("profile arrays differ in length");
      }
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProfileError(std::string("malformed profile store: ") + e.what());
  }
  if (out.empty()) throw ProfileError("profile store is empty");
  return out;
}

}  // namespace modelyap
