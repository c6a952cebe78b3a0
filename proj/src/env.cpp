#include "avmig/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avmig/errors.hpp"

namespace avmig {

double TaskGenConfig::mean_task_size() const {
  if (fixed_task_size) return *fixed_task_size;
  return 0.25 * (input_min + input_max) * (expansion_min + expansion_max);
}

double SlotOutcome::total_latency() const {
  double sum = 0.0;
  for (const auto& b : breakdowns) sum += b.total;
  return sum;
}

Environment::Environment(std::shared_ptr<const World> world, EnvConfig config,
                         std::shared_ptr<const PositionForecaster> forecaster)
    : world_(std::move(world)), config_(std::move(config)), forecaster_(std::move(forecaster)) {
  if (!world_) throw ConfigError("environment needs a world");
  if (world_->vehicles().empty()) throw ConfigError("environment needs at least one vehicle");
  if (world_->rsus().empty()) throw ConfigError("environment needs at least one RSU");
  if (config_.horizon < 1) throw ConfigError("horizon must be at least 1");
  if (config_.start_offset_max < 0) throw ConfigError("start_offset_max must be non-negative");
  if (config_.candidate_slots < 1) throw ConfigError("candidate_slots must be at least 1");
  if (!(config_.t_clip > 0.0)) throw ConfigError("t_clip must be positive");
  if (config_.result_compression < 0.0) throw ConfigError("result compression must be >= 0");
  const auto& t = config_.tasks;
  if (!(t.input_min >= 0.0 && t.input_max >= t.input_min && t.expansion_min > 0.0 &&
        t.expansion_max >= t.expansion_min)) {
    throw ConfigError("invalid task generation ranges");
  }
  if (!config_.initial_workloads.empty() &&
      config_.initial_workloads.size() != world_->rsus().size()) {
    throw ConfigError("initial_workloads needs one value per RSU");
  }
  if (config_.prediction && !forecaster_) {
    throw ConfigError("prediction is enabled but no forecaster was supplied");
  }
  for (const auto& v : world_->vehicles()) {
    if (!(v.transmit_power > 0.0) || !(v.cycles_per_bit > 0.0)) {
      throw ConfigError("vehicle " + std::to_string(v.id) + ": power and e_v must be positive");
    }
  }
  if (config_.zeta) {
    if (*config_.zeta < 0.0) throw ConfigError("zeta must be >= 0");
    zeta_ = *config_.zeta;
  } else {
    double e = 0.0;
    for (const auto& v : world_->vehicles()) e += v.cycles_per_bit;
    zeta_ = config_.tasks.mean_task_size() * e / static_cast<double>(world_->vehicles().size());
  }
}

Eigen::VectorXd Environment::observation_scale() const {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(obs_dim());
  s[obs_dim() - 1] = config_.t_clip;
  return s;
}

std::vector<Eigen::VectorXd> Environment::reset(std::optional<std::uint64_t> seed) {
  rng_.seed(seed.value_or(config_.seed));
  const auto rsus = world_->rsus();
  state_ = WorldState{};
  state_.rsu_workloads.resize(static_cast<Eigen::Index>(rsus.size()));
  for (std::size_t m = 0; m < rsus.size(); ++m) {
    const double init = config_.initial_workloads.empty()
                            ? config_.initial_workload_fraction * rsus[m].max_workload
                            : config_.initial_workloads[m];
    state_.rsu_workloads[m] = std::clamp(init, 0.0, rsus[m].max_workload);
  }
  std::uniform_real_distribution<double> factor(config_.tasks.expansion_min,
                                                config_.tasks.expansion_max);
  expansion_.resize(num_agents());
  for (double& f : expansion_) f = factor(rng_);
  last_latency_.assign(num_agents(), 0.0);
  start_offset_ = 0;
  if (config_.start_offset_max > 0) {
    start_offset_ = std::uniform_int_distribution<int>(0, config_.start_offset_max)(rng_);
  }
  done_ = false;
  world_->place_vehicles(state_, 1 + start_offset_);
  state_.slot = 1;
  enter_slot();
  return observe_all();
}

void Environment::draw_tasks() {
  std::uniform_real_distribution<double> input(config_.tasks.input_min, config_.tasks.input_max);
  tasks_.resize(num_agents());
  for (std::size_t v = 0; v < num_agents(); ++v) {
    tasks_[v].input_size = input(rng_);
    tasks_[v].task_size = config_.tasks.fixed_task_size.value_or(expansion_[v] * tasks_[v].input_size);
  }
}

void Environment::enter_slot() {
  draw_tasks();
  candidates_.resize(num_agents());
  const auto vehicles = world_->vehicles();
  for (std::size_t v = 0; v < num_agents(); ++v) {
    candidates_[v] = world_->candidate_rsus(vehicles[v].id, state_);
    if (static_cast<int>(candidates_[v].size()) > config_.candidate_slots) {
      candidates_[v].resize(static_cast<std::size_t>(config_.candidate_slots));
    }
  }
  refresh_estimates();
}

void Environment::refresh_estimates() {
  estimates_ = state_.rsu_workloads;
  if (!config_.prediction) return;
  const int trace_slot = state_.slot + start_offset_;
  auto it = forecast_cache_.find(trace_slot);
  if (it == forecast_cache_.end()) {
    it = forecast_cache_.emplace(trace_slot, forecaster_->forecast(*world_, trace_slot)).first;
  }
  const auto rsus = world_->rsus();
  const std::vector<int> z = region_count(it->second, rsus);
  for (std::size_t m = 0; m < rsus.size(); ++m) {
    estimates_[m] = predict_workload(state_.rsu_workloads[m], zeta_, z[m], rsus[m].max_workload);
  }
}

Eigen::VectorXd Environment::observe(std::size_t agent) const {
  if (agent >= num_agents()) throw ContractViolation("observe: unknown agent");
  Eigen::VectorXd o(obs_dim());
  o.head<2>() = world_->config().bounds.normalize(state_.vehicle_positions[agent]);
  const auto rsus = world_->rsus();
  const std::size_t mi = world_->rsu_index(state_.serving[agent]);
  o[2] = estimates_[mi] / rsus[mi].max_workload;
  for (int k = 0; k < config_.candidate_slots; ++k) {
    double load = 1.0;
    if (k < static_cast<int>(candidates_[agent].size())) {
      const std::size_t ci = world_->rsu_index(candidates_[agent][k]);
      load = estimates_[ci] / rsus[ci].max_workload;
    }
    o[3 + k] = load;
  }
  o[obs_dim() - 1] = std::clamp(last_latency_[agent], 0.0, config_.t_clip);
  return o;
}

std::vector<Eigen::VectorXd> Environment::observe_all() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(num_agents());
  for (std::size_t v = 0; v < num_agents(); ++v) out.push_back(observe(v));
  return out;
}

EnforcedAction Environment::enforce_constraints(std::size_t agent, HybridAction a,
                                                const Eigen::VectorXd& workloads) const {
  if (agent >= num_agents()) throw ContractViolation("enforce_constraints: unknown agent");
  EnforcedAction out{a, false};
  HybridAction& r = out.action;
  const auto& cands = candidates_[agent];
  if (r.discrete < 0 || r.discrete > static_cast<int>(cands.size())) {
    r.discrete = 0;
    out.flagged = true;
  }
  if (!std::isfinite(r.continuous)) {
    r.continuous = 0.0;
    out.flagged = true;
  }
  if (r.continuous < 0.0 || r.continuous > 1.0) {
    r.continuous = std::clamp(r.continuous, 0.0, 1.0);
    out.flagged = true;
  }
  if (r.discrete > 0) {
    const int serving = state_.serving[agent];
    const int target = cands[r.discrete - 1];
    if (!(world_->rsu(serving).migration_bandwidth(target) > 0.0)) {
      r.discrete = 0;
      out.flagged = true;
    }
  }
  if (r.discrete == 0) {
    r.continuous = 0.0;
    return out;
  }
  const std::size_t ti = world_->rsu_index(cands[r.discrete - 1]);
  const double demand = tasks_[agent].task_size * world_->vehicles()[agent].cycles_per_bit;
  if (demand > 0.0) {
    const double room = std::max(0.0, world_->rsus()[ti].max_workload - workloads[ti]);
    const double fmax = std::min(1.0, room / demand);
    if (r.continuous > fmax) {
      r.continuous = fmax;
      out.flagged = true;
    }
  }
  return out;
}

latency::LatencyBreakdown Environment::apply_agent(std::size_t agent, const HybridAction& a,
                                                   Eigen::VectorXd& workloads,
                                                   EnforcedAction* enforced, int* target) const {
  const EnforcedAction fixed = enforce_constraints(agent, a, workloads);
  if (enforced) *enforced = fixed;
  const auto rsus = world_->rsus();
  const VehicleSpec& veh = world_->vehicles()[agent];
  const Position& pos = state_.vehicle_positions[agent];
  const int serving = state_.serving[agent];
  const std::size_t mi = world_->rsu_index(serving);
  const RsuSpec& rsu = rsus[mi];
  const double e = veh.cycles_per_bit;
  const latency::TaskSpec& task = tasks_[agent];

  latency::SlotInputs in;
  in.channel = config_.channel;
  in.cloud = config_.cloud;
  in.result_compression = config_.result_compression;
  in.transmit_power = veh.transmit_power;
  in.cycles_per_bit = e;
  in.task = task;
  in.dwell = world_->dwell_time(veh.id, serving, state_);
  in.distance_serving = distance(pos, rsu.position);
  in.uplink_bandwidth = rsu.uplink_bandwidth;
  in.downlink_bandwidth = rsu.downlink_bandwidth;
  in.noise_serving = rsu.noise_power;
  in.gpu_serving = rsu.gpu_capacity;
  in.workload_serving = workloads[mi];
  in.cloud_bandwidth = rsu.cloud_uplink_bandwidth;

  std::size_t ti = mi;
  const double f = fixed.action.continuous;
  if (fixed.action.discrete > 0) {
    const int tid = candidates_[agent][fixed.action.discrete - 1];
    ti = world_->rsu_index(tid);
    const RsuSpec& t = rsus[ti];
    in.has_target = true;
    in.fraction = f;
    in.distance_target = distance(pos, t.position);
    in.downlink_bandwidth_target = t.downlink_bandwidth;
    in.noise_target = t.noise_power;
    in.gpu_target = t.gpu_capacity;
    in.workload_target = workloads[ti];
    in.migration_bandwidth = rsu.migration_bandwidth(tid);
    if (target) *target = tid;
  } else if (target) {
    *target = -1;
  }

  const double kept = (1.0 - (in.has_target ? f : 0.0)) * task.task_size;
  const double overflow = workloads[mi] + kept * e - rsu.max_workload;
  in.min_residual = overflow > 0.0 ? overflow / e : 0.0;

  const latency::LatencyBreakdown b = latency::evaluate(in);
  if (in.has_target) {
    workloads[ti] = std::min(rsus[ti].max_workload, workloads[ti] + f * task.task_size * e);
  }
  workloads[mi] = std::clamp(workloads[mi] + (kept - b.cloud_residual) * e, 0.0, rsu.max_workload);
  return b;
}

SlotOutcome Environment::simulate_slot(std::span<const HybridAction> joint,
                                       const Eigen::VectorXd& workloads) const {
  if (joint.size() != num_agents()) {
    throw ContractViolation("expected " + std::to_string(num_agents()) + " actions, got " +
                            std::to_string(joint.size()));
  }
  SlotOutcome out;
  out.workloads = workloads;
  out.breakdowns.resize(num_agents());
  out.applied.resize(num_agents());
  out.targets.resize(num_agents());
  out.infeasible.resize(num_agents());
  for (std::size_t v = 0; v < num_agents(); ++v) {
    EnforcedAction fixed;
    out.breakdowns[v] = apply_agent(v, joint[v], out.workloads, &fixed, &out.targets[v]);
    out.applied[v] = fixed.action;
    out.infeasible[v] = fixed.flagged;
  }
  return out;
}

StepResult Environment::step(std::span<const HybridAction> joint) {
  if (done_) throw ContractViolation("step called on a finished episode");
  SlotOutcome slot = simulate_slot(joint);
  StepResult r;
  r.rewards.resize(num_agents());
  for (std::size_t v = 0; v < num_agents(); ++v) {
    r.rewards[v] = -slot.breakdowns[v].total;
    last_latency_[v] = slot.breakdowns[v].total;
  }
  const auto rsus = world_->rsus();
  for (std::size_t m = 0; m < rsus.size(); ++m) {
    state_.rsu_workloads[m] = std::max(
        0.0, slot.workloads[m] - rsus[m].gpu_capacity * world_->config().slot_duration);
  }
  r.breakdowns = std::move(slot.breakdowns);
  r.applied = std::move(slot.applied);
  r.targets = std::move(slot.targets);
  r.infeasible = std::move(slot.infeasible);
  r.arrival_workloads = std::move(slot.workloads);
  if (state_.slot >= config_.horizon) {
    done_ = true;
    r.done = true;
  } else {
    const int next = state_.slot + 1;
    world_->place_vehicles(state_, next + start_offset_);
    state_.slot = next;
    enter_slot();
  }
  r.observations = observe_all();
  return r;
}

EpisodeReturn episode_return(const std::vector<std::vector<double>>& rewards) {
  EpisodeReturn out;
  for (const auto& slot : rewards) {
    if (out.per_agent.empty()) out.per_agent.assign(slot.size(), 0.0);
    if (slot.size() != out.per_agent.size()) {
      throw ContractViolation("episode_return: agent count changed between slots");
    }
    for (std::size_t v = 0; v < slot.size(); ++v) out.per_agent[v] += slot[v];
  }
  if (!out.per_agent.empty()) {
    out.mean = std::accumulate(out.per_agent.begin(), out.per_agent.end(), 0.0) /
               static_cast<double>(out.per_agent.size());
  }
  return out;
}

std::vector<nlohmann::json> step_records(const Environment& env, int slot,
                                         const StepResult& result) {
  std::vector<nlohmann::json> out;
  const auto vehicles = env.world().vehicles();
  for (std::size_t v = 0; v < result.rewards.size(); ++v) {
    const auto& b = result.breakdowns[v];
    nlohmann::json j;
    j["slot"] = slot;
    j["vehicle"] = vehicles[v].id;
    j["action"] = {{"discrete", result.applied[v].discrete},
                   {"fraction", result.applied[v].continuous},
                   {"target_rsu", result.targets[v] < 0 ? nlohmann::json() : nlohmann::json(result.targets[v])}};
    j["breakdown"] = {{"upload", b.upload},
                      {"local_processing", b.local_processing},
                      {"premigrated_processing", b.premigrated_processing},
                      {"migration", b.migration},
                      {"cloud", b.cloud},
                      {"download", b.download},
                      {"total", b.total},
                      {"cloud_residual_bits", b.cloud_residual}};
    j["reward"] = result.rewards[v];
    j["infeasible"] = static_cast<bool>(result.infeasible[v]);
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace avmig
