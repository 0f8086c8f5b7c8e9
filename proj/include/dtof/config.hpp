#pragma once

// Run configuration, stored as JSON:
//
//   {
//     "seed": 42,
//     "sensor":     { "dtof_rows": 30, "dtof_cols": 40, "fov_fraction": 1.0, ... },
//     "simulation": { "region_count": [0, 2], "region_area": [0.02, 0.1],
//                     "error_policy": "uniform" | "multiplicative", ... },
//     "detector":   { "delta": 0.5, ..., "threshold_mode": "adaptive" | "otsu",
//                     "components": "both" | "region" | "rank" },
//     "fit":        { "domain": "inverse" | "depth", "robust": false, "residuals": false },
//     "paths":      { "gt": "...", "rel": "...", ... }
//   }
//
// Every key is optional; unknown keys are errors.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <system_error>
#include <type_traits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtof/align.hpp"
#include "dtof/anomaly.hpp"
#include "dtof/core.hpp"
#include "dtof/dtof_sim.hpp"
#include "dtof/error.hpp"
#include "dtof/io.hpp"

namespace dtof {

struct RunPaths {
  std::string gt;
  std::string rel;
  std::string points;
  std::string labels;
  std::string out;
  std::string report;

  bool operator==(const RunPaths&) const = default;
};

struct RunConfig {
  SimConfig sim;  // carries the sensor spec and the seed
  DetectorConfig detector;
  FitDomain fit_domain = FitDomain::kInverseDepth;
  bool robust = false;
  bool residuals = false;
  RunPaths paths;

  void validate() const {
    sim.validate();
    detector.validate();
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

using nlohmann::json;

class JsonSection {
 public:
  JsonSection(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer() && !it->is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else {
        if (!it->is_string()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + path(key) + "' has the wrong type");
    }
  }

  void read_range(const char* key, double& lo, double& hi) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
      throw ConfigError("config key '" + path(key) + "' must be a [min, max] pair of numbers");
    lo = (*it)[0].get<double>();
    hi = (*it)[1].get<double>();
  }

  void read_range(const char* key, int& lo, int& hi) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() || !(*it)[1].is_number_integer())
      throw ConfigError("config key '" + path(key) + "' must be a [min, max] pair of integers");
    lo = (*it)[0].get<int>();
    hi = (*it)[1].get<int>();
  }

  std::optional<json> section(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return std::optional<json>(std::in_place, *it);
  }

  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  /// Throws naming every key that no read() asked for.
  void reject_unknown() const {
    std::string unknown;
    for (const auto& [key, value] : j_.items()) {
      if (seen_.count(key)) continue;
      if (!unknown.empty()) unknown += ", ";
      unknown += "'" + path(key) + "'";
    }
    if (!unknown.empty()) throw ConfigError("unknown config key(s): " + unknown);
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

template <typename Enum, std::size_t N>
Enum enum_from(const std::string& text, const std::pair<const char*, Enum> (&names)[N], const std::string& key) {
  for (const auto& [name, value] : names)
    if (text == name) return value;
  std::string allowed;
  for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  throw ConfigError("config key '" + key + "' has unknown value '" + text + "' (allowed: " + allowed + ")");
}

template <typename Enum, std::size_t N>
const char* enum_name(Enum value, const std::pair<const char*, Enum> (&names)[N]) {
  for (const auto& [name, v] : names)
    if (v == value) return name;
  return names[0].first;
}

inline constexpr std::pair<const char*, ErrorPolicy> kErrorPolicyNames[] = {
    {"uniform", ErrorPolicy::kUniformRedraw}, {"multiplicative", ErrorPolicy::kMultiplicative}};
inline constexpr std::pair<const char*, ThresholdMode> kThresholdModeNames[] = {
    {"adaptive", ThresholdMode::kAdaptive}, {"otsu", ThresholdMode::kOtsuOnly}};
inline constexpr std::pair<const char*, ScoreComponents> kComponentNames[] = {
    {"both", ScoreComponents::kBoth}, {"region", ScoreComponents::kRegionOnly}, {"rank", ScoreComponents::kRankOnly}};
inline constexpr std::pair<const char*, FitDomain> kFitDomainNames[] = {
    {"inverse", FitDomain::kInverseDepth}, {"depth", FitDomain::kDepth}};

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  detail::JsonSection top(root, "");
  top.read("seed", cfg.sim.seed);

  if (auto s = top.section("sensor")) {
    detail::JsonSection sec(*s, "sensor");
    SensorSpec& spec = cfg.sim.spec;
    sec.read("dtof_rows", spec.dtof_rows);
    sec.read("dtof_cols", spec.dtof_cols);
    sec.read("fov_fraction", spec.fov_fraction);
    sec.read("d_min", spec.d_min);
    sec.read("d_max", spec.d_max);
    sec.read("noise_rate", spec.noise_rate);
    sec.read("blank_rate", spec.blank_rate);
    sec.read("background_percentile", spec.background_percentile);
    sec.read("max_shift_dtof_px", spec.max_shift_dtof_px);
    sec.reject_unknown();
  }
  if (auto s = top.section("simulation")) {
    detail::JsonSection sec(*s, "simulation");
    SimConfig& sim = cfg.sim;
    sec.read_range("region_count", sim.region_count_min, sim.region_count_max);
    sec.read_range("region_area", sim.region_area_min, sim.region_area_max);
    sec.read("error_region_probability", sim.error_region_probability);
    std::string policy = detail::enum_name(sim.error_policy, detail::kErrorPolicyNames);
    sec.read("error_policy", policy);
    sim.error_policy = detail::enum_from(policy, detail::kErrorPolicyNames, "simulation.error_policy");
    sec.read_range("error_scale", sim.error_scale_min, sim.error_scale_max);
    sec.read("jitter", sim.jitter);
    sec.read("max_translation", sim.max_translation);
    sec.read("max_rotation_deg", sim.max_rotation_deg);
    sec.reject_unknown();
  }
  if (auto s = top.section("detector")) {
    detail::JsonSection sec(*s, "detector");
    DetectorConfig& det = cfg.detector;
    sec.read("delta", det.delta);
    sec.read("alpha", det.alpha);
    sec.read("epsilon", det.epsilon);
    sec.read("p", det.p);
    sec.read("k", det.k);
    sec.read("u", det.u);
    sec.read("gamma_hi", det.gamma_hi);
    sec.read("gamma_lo", det.gamma_lo);
    sec.read("otsu_bins", det.otsu_bins);
    std::string mode = detail::enum_name(det.threshold_mode, detail::kThresholdModeNames);
    sec.read("threshold_mode", mode);
    det.threshold_mode = detail::enum_from(mode, detail::kThresholdModeNames, "detector.threshold_mode");
    std::string comp = detail::enum_name(det.components, detail::kComponentNames);
    sec.read("components", comp);
    det.components = detail::enum_from(comp, detail::kComponentNames, "detector.components");
    sec.reject_unknown();
  }
  if (auto s = top.section("fit")) {
    detail::JsonSection sec(*s, "fit");
    std::string domain = detail::enum_name(cfg.fit_domain, detail::kFitDomainNames);
    sec.read("domain", domain);
    cfg.fit_domain = detail::enum_from(domain, detail::kFitDomainNames, "fit.domain");
    sec.read("robust", cfg.robust);
    sec.read("residuals", cfg.residuals);
    sec.reject_unknown();
  }
  if (auto s = top.section("paths")) {
    detail::JsonSection sec(*s, "paths");
    sec.read("gt", cfg.paths.gt);
    sec.read("rel", cfg.paths.rel);
    sec.read("points", cfg.paths.points);
    sec.read("labels", cfg.paths.labels);
    sec.read("out", cfg.paths.out);
    sec.read("report", cfg.paths.report);
    sec.reject_unknown();
  }
  top.reject_unknown();
  cfg.validate();
  return cfg;
}

inline std::string serialize_run_config(const RunConfig& cfg) {
  using detail::json;
  json root = json::object();
  root["seed"] = cfg.sim.seed;
  const SensorSpec& spec = cfg.sim.spec;
  root["sensor"] = {{"dtof_rows", spec.dtof_rows},
                    {"dtof_cols", spec.dtof_cols},
                    {"fov_fraction", spec.fov_fraction},
                    {"d_min", spec.d_min},
                    {"d_max", spec.d_max},
                    {"noise_rate", spec.noise_rate},
                    {"blank_rate", spec.blank_rate},
                    {"background_percentile", spec.background_percentile},
                    {"max_shift_dtof_px", spec.max_shift_dtof_px}};
  const SimConfig& sim = cfg.sim;
  root["simulation"] = {{"region_count", {sim.region_count_min, sim.region_count_max}},
                        {"region_area", {sim.region_area_min, sim.region_area_max}},
                        {"error_region_probability", sim.error_region_probability},
                        {"error_policy", detail::enum_name(sim.error_policy, detail::kErrorPolicyNames)},
                        {"error_scale", {sim.error_scale_min, sim.error_scale_max}},
                        {"jitter", sim.jitter},
                        {"max_translation", sim.max_translation},
                        {"max_rotation_deg", sim.max_rotation_deg}};
  const DetectorConfig& det = cfg.detector;
  root["detector"] = {{"delta", det.delta},
                      {"alpha", det.alpha},
                      {"epsilon", det.epsilon},
                      {"p", det.p},
                      {"k", det.k},
                      {"u", det.u},
                      {"gamma_hi", det.gamma_hi},
                      {"gamma_lo", det.gamma_lo},
                      {"otsu_bins", det.otsu_bins},
                      {"threshold_mode", detail::enum_name(det.threshold_mode, detail::kThresholdModeNames)},
                      {"components", detail::enum_name(det.components, detail::kComponentNames)}};
  root["fit"] = {{"domain", detail::enum_name(cfg.fit_domain, detail::kFitDomainNames)},
                 {"robust", cfg.robust},
                 {"residuals", cfg.residuals}};
  root["paths"] = {{"gt", cfg.paths.gt},         {"rel", cfg.paths.rel}, {"points", cfg.paths.points},
                   {"labels", cfg.paths.labels}, {"out", cfg.paths.out}, {"report", cfg.paths.report}};
  return root.dump(2) + "\n";
}

inline RunConfig load_run_config(const std::string& path) {
  const std::vector<std::uint8_t> bytes = io::read_file(path);
  try {
    return parse_run_config(std::string(bytes.begin(), bytes.end()));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Seed precedence: explicit flag, then DTOF_SEED, then the config value.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed,
                                  const char* env = std::getenv("DTOF_SEED")) {
  if (flag) return *flag;
  if (env && *env) {
    std::uint64_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto r = std::from_chars(env, end, v);
    if (r.ec != std::errc{} || r.ptr != end) throw ConfigError(std::string("DTOF_SEED is not an unsigned integer: ") + env);
    return v;
  }
  return config_seed;
}

}  // namespace dtof
