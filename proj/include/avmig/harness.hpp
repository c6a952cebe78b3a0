#ifndef AVMIG_HARNESS_HPP_
#define AVMIG_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "avmig/baselines.hpp"
#include "avmig/env.hpp"
#include "avmig/mappo.hpp"
#include "avmig/scenario.hpp"

namespace avmig {

struct Sweep {
  std::string path;  // see apply_override
  std::vector<nlohmann::json> values;
};

struct ExperimentConfig {
  nlohmann::json scenario;
  std::filesystem::path scenario_dir;  // for relative trace paths
  std::vector<PolicyKind> policies;
  std::vector<bool> prediction{false};
  std::vector<std::uint64_t> seeds;
  std::optional<Sweep> sweep;
  std::filesystem::path output_dir;

  // Per-cell extras.
  bool write_episode_log = false;
  bool save_checkpoint = false;
  std::optional<std::filesystem::path> checkpoint;  // skip training, load this
  std::optional<int> eval_episodes;                  // overrides the scenario
};

// Experiment file: {"scenario": <object or path>, "policy": name or [names],
// "prediction": "on"|"off"|"both", "seeds": [...], "sweep": {"path", "values"},
// "output_dir": path}. A file without "scenario" is itself the scenario.
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct ComponentMeans {
  double upload = 0.0;
  double processing = 0.0;  // max(local, pre-migrated)
  double migration = 0.0;
  double cloud = 0.0;
  double download = 0.0;
};

struct MetricsRecord {
  std::string fingerprint;       // resolved scenario (after the sweep override)
  std::string base_fingerprint;  // scenario before the sweep override
  std::string policy;            // label, e.g. "hybrid-mappo+pred"
  bool prediction = false;
  std::uint64_t seed = 0;
  nlohmann::json sweep_value;    // null without a sweep
  double mean_episode_reward = 0.0;
  double mean_latency = 0.0;     // per vehicle-slot
  ComponentMeans components;
  double infeasibility_rate = 0.0;
  double max_load_ratio = 0.0;   // max over slots and RSUs of L_m / L_m^max
  int eval_episodes = 0;
  std::vector<CurvePoint> curve;
  double wall_clock_seconds = 0.0;  // not part of to_json()

  nlohmann::json to_json() const;
  static MetricsRecord from_json(const nlohmann::json& j);
};

std::string policy_label(PolicyKind kind, bool prediction);

struct EpisodeStats {
  double mean_return = 0.0;  // mean over agents
  double mean_latency = 0.0;
  ComponentMeans components;
  double infeasibility_rate = 0.0;
  double max_load_ratio = 0.0;
};

using JointPolicy = std::function<std::vector<HybridAction>(
    const Environment& env, const std::vector<Eigen::VectorXd>& obs)>;

EpisodeStats run_episode(Environment& env, std::uint64_t seed, const JointPolicy& policy,
                         std::vector<nlohmann::json>* log = nullptr);

// Evaluation episode seeds depend only on (cell seed, k), so every policy of
// a cell faces the same episodes.
std::uint64_t eval_seed(std::uint64_t cell_seed, int k);

// Trains the scenario's forecaster on its own traces.
std::shared_ptr<ForecastModel> train_scenario_forecaster(const Scenario& sc,
                                                         const std::vector<MobilityTrace>& traces);

// Runs every (sweep value, policy, prediction, seed) cell and writes
// per-cell files plus metrics.csv and records.jsonl under output_dir.
// Throws ConfigError before any work on invalid configs.
struct RunResult {
  std::vector<MetricsRecord> records;
  std::vector<std::string> failures;
};
RunResult run(const ExperimentConfig& cfg);

std::vector<MetricsRecord> load_records(const std::filesystem::path& dir);

struct RankingRow {
  std::string policy;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  int seeds = 0;
};
struct Comparison {
  std::vector<RankingRow> ranking;  // best first
  // improvement[a][b] = (reward_a - reward_b) / |reward_b|
  std::map<std::string, std::map<std::string, double>> improvement;
};

double improvement(double reward_a, double reward_b);
// All records must share one fingerprint (ContractViolation otherwise).
Comparison compare(const std::vector<MetricsRecord>& records);
void write_comparison(const Comparison& c, const std::filesystem::path& dir);

// Figures: reward-curve (mean return per training episode) and the sweeps
// task-size, wireless-bw, migration-bw, edge-compute, cloud-compute (mean
// latency per swept value). Writes <dir>/<figure>.csv with a mean and a
// sample-std column per policy; throws ValidationError listing missing
// (policy, x) cells.
std::filesystem::path emit_plot_data(const std::vector<MetricsRecord>& records,
                                     const std::string& figure,
                                     const std::filesystem::path& dir);

// Shortest round-trip text for a double.
std::string format_double(double x);

}  // namespace avmig

#endif  // AVMIG_HARNESS_HPP_
