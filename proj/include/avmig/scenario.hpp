#ifndef AVMIG_SCENARIO_HPP_
#define AVMIG_SCENARIO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "avmig/env.hpp"
#include "avmig/forecast.hpp"
#include "avmig/mappo.hpp"
#include "avmig/trace_io.hpp"
#include "avmig/world.hpp"

namespace avmig {

enum class Dimension {
  kBits,
  kRate,           // bits/s
  kFrequency,      // Hz, also cycles/s
  kCycles,
  kCyclesPerBit,
  kPower,          // W
  kTime,           // s
  kLength,         // m
  kSpeed,          // m/s
  kDimensionless,
};

// Numbers are taken in internal units; strings carry a unit suffix, e.g.
// "20 GHz", "800 Mbps", "150 MB", "0.5 Gcycles/MB", "23 dBm".
// Throws ConfigError naming `what` on a bad value or unit.
double parse_quantity(const nlohmann::json& value, Dimension dim, const std::string& what);

struct Scenario {
  WorldConfig world;
  EnvConfig env;
  std::vector<RouteConfig> routes;  // one per vehicle when traces are synthetic
  std::uint64_t mobility_seed = 0;
  std::optional<std::filesystem::path> trace_csv;
  GeoReference geo;
  ForecastConfig forecast;
  MappoConfig mappo;
  std::vector<double> fraction_grid;
  int eval_episodes = 10;
};

// Resolves relative paths against `base_dir`.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

// Synthetic routes, or the trace CSV (one trace per listed vehicle id).
std::vector<MobilityTrace> build_traces(const Scenario& scenario);

// Replaces the value at a dotted path; `[*]` fans out over array elements,
// `[k]` selects one. Example: "rsus[*].gpu_capacity".
void apply_override(nlohmann::json& doc, const std::string& path, const nlohmann::json& value);

// FNV-1a over the canonical (sorted-key, compact) serialization.
std::string fingerprint(const nlohmann::json& doc);

}  // namespace avmig

#endif  // AVMIG_SCENARIO_HPP_
