#ifndef AVMIG_ENV_HPP_
#define AVMIG_ENV_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"

#include "avmig/forecast.hpp"
#include "avmig/latency.hpp"
#include "avmig/units.hpp"
#include "avmig/world.hpp"

namespace avmig {

// Task generation. Inputs are drawn per vehicle-slot; each vehicle's
// expansion factor (task = factor * input) is drawn once per episode.
struct TaskGenConfig {
  double input_min = units::megabytes(12.0);
  double input_max = units::megabytes(20.0);
  double expansion_min = 50.0 / 12.0;
  double expansion_max = 12.5;
  // When set, every task has exactly this size (bits); inputs still vary.
  std::optional<double> fixed_task_size;

  double mean_task_size() const;
};

struct EnvConfig {
  int horizon = 50;
  int candidate_slots = 3;
  double t_clip = 100.0;  // s
  std::uint64_t seed = 0;
  bool prediction = false;
  double result_compression = 1.0;
  latency::ChannelParams channel;
  latency::CloudSpec cloud;
  TaskGenConfig tasks;
  // Initial L_m as a share of L_m^max, unless per-RSU values are given.
  double initial_workload_fraction = 0.0;
  std::vector<double> initial_workloads;
  // Cycles per predicted vehicle; defaults to mean task size * mean e_v.
  std::optional<double> zeta;
  // Each episode starts at a seeded uniform trace slot in [1, 1 + start_offset_max].
  int start_offset_max = 0;
};

struct HybridAction {
  int discrete = 0;        // 0 = no pre-migration, k = k-th candidate
  double continuous = 0.0; // pre-migrated fraction
};

struct EnforcedAction {
  HybridAction action;
  bool flagged = false;
};

struct StepResult {
  std::vector<Eigen::VectorXd> observations;
  std::vector<double> rewards;
  std::vector<latency::LatencyBreakdown> breakdowns;
  std::vector<HybridAction> applied;
  std::vector<int> targets;  // pre-migration RSU id, -1 for none
  std::vector<bool> infeasible;
  Eigen::VectorXd arrival_workloads;  // after this slot's arrivals, before drain
  bool done = false;
};

// Outcome of one slot for a joint action, without advancing anything.
struct SlotOutcome {
  std::vector<latency::LatencyBreakdown> breakdowns;
  std::vector<HybridAction> applied;
  std::vector<int> targets;
  std::vector<bool> infeasible;
  Eigen::VectorXd workloads;  // after arrivals, before drain
  double total_latency() const;
};

// Multi-agent pre-migration environment. One agent per vehicle, ordered by
// ascending vehicle id. Observation layout:
//   [x, y, serving load, candidate loads (candidate_slots), last latency]
// with positions normalized to the map, loads as shares of L^max (padded
// with 1.0) and the previous slot's total latency clipped to [0, t_clip].
class Environment {
 public:
  Environment(std::shared_ptr<const World> world, EnvConfig config,
              std::shared_ptr<const PositionForecaster> forecaster = nullptr);

  // Starts a new episode at slot 1. `seed` overrides the configured seed.
  std::vector<Eigen::VectorXd> reset(std::optional<std::uint64_t> seed = {});
  StepResult step(std::span<const HybridAction> joint);

  std::size_t num_agents() const { return world_->vehicles().size(); }
  int obs_dim() const { return 4 + config_.candidate_slots; }
  int num_discrete() const { return 1 + config_.candidate_slots; }
  // Per-entry divisors that bring every observation entry into [0,1].
  Eigen::VectorXd observation_scale() const;

  const World& world() const { return *world_; }
  const EnvConfig& config() const { return config_; }
  const WorldState& state() const { return state_; }
  bool done() const { return done_; }
  int slot() const { return state_.slot; }
  // Trace slot read at episode slot t is t + start_offset().
  int start_offset() const { return start_offset_; }
  double zeta() const { return zeta_; }

  // Candidates of `agent` in the current slot, at most candidate_slots.
  const std::vector<int>& candidates(std::size_t agent) const { return candidates_[agent]; }
  const latency::TaskSpec& task(std::size_t agent) const { return tasks_[agent]; }

  Eigen::VectorXd observe(std::size_t agent) const;
  std::vector<Eigen::VectorXd> observe_all() const;
  // Workload estimates fed to observations (current or predicted), per RSU.
  const Eigen::VectorXd& workload_estimates() const { return estimates_; }

  // Repairs `a` against `workloads`: out-of-range or link-less targets become
  // no pre-migration, fractions are clamped to [0,1] and reduced so the
  // target stays within L^max. `flagged` reports any repair beyond forcing
  // the fraction of a no-migrate action to 0.
  EnforcedAction enforce_constraints(std::size_t agent, HybridAction a,
                                     const Eigen::VectorXd& workloads) const;
  EnforcedAction enforce_constraints(std::size_t agent, HybridAction a) const {
    return enforce_constraints(agent, a, state_.rsu_workloads);
  }

  // Applies one agent's arrival to `workloads` and returns its latency.
  latency::LatencyBreakdown apply_agent(std::size_t agent, const HybridAction& a,
                                        Eigen::VectorXd& workloads,
                                        EnforcedAction* enforced = nullptr,
                                        int* target = nullptr) const;
  // Processes agents in ascending id order against running workloads.
  SlotOutcome simulate_slot(std::span<const HybridAction> joint,
                            const Eigen::VectorXd& workloads) const;
  SlotOutcome simulate_slot(std::span<const HybridAction> joint) const {
    return simulate_slot(joint, state_.rsu_workloads);
  }

 private:
  void enter_slot();
  void draw_tasks();
  void refresh_estimates();

  std::shared_ptr<const World> world_;
  EnvConfig config_;
  std::shared_ptr<const PositionForecaster> forecaster_;
  std::mt19937_64 rng_;
  double zeta_ = 0.0;
  int start_offset_ = 0;

  WorldState state_;
  bool done_ = true;
  std::vector<double> expansion_;
  std::vector<latency::TaskSpec> tasks_;
  std::vector<std::vector<int>> candidates_;
  std::vector<double> last_latency_;
  Eigen::VectorXd estimates_;
  mutable std::map<int, std::vector<Position>> forecast_cache_;
};

struct EpisodeReturn {
  std::vector<double> per_agent;
  double mean = 0.0;
};

// rewards[t][v]; sums over slots per agent and averages over agents.
EpisodeReturn episode_return(const std::vector<std::vector<double>>& rewards);

// One JSON-lines record per agent for a finished step.
std::vector<nlohmann::json> step_records(const Environment& env, int slot,
                                         const StepResult& result);

}  // namespace avmig

#endif  // AVMIG_ENV_HPP_
