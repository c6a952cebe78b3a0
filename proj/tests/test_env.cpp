#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "avmig/baselines.hpp"
#include "avmig/env.hpp"
#include "avmig/errors.hpp"
#include "latency_oracle.hpp"
#include "support.hpp"

using namespace avmig;

namespace {

// Vehicles circling inside a 3-RSU map, so long episodes stay in bounds.
tfx::LineScenario loop_scenario(int vehicles, int horizon) {
  WorldConfig wc;
  wc.bounds = {-1000.0, -1000.0, 1000.0, 1000.0};
  wc.rsus = {tfx::make_rsu(1, -500, 0, 600), tfx::make_rsu(2, 500, 0, 600), tfx::make_rsu(3, 0, 700, 600)};
  tfx::full_mesh(wc.rsus, units::mbps(700.0));
  wc.candidate_radius = 1500.0;
  std::vector<MobilityTrace> traces;
  for (int v = 0; v < vehicles; ++v) {
    wc.vehicles.push_back(tfx::make_vehicle(v + 1));
    MobilityTrace t;
    t.vehicle_id = v + 1;
    const double r = 200.0 + 60.0 * v, w = 0.02 + 0.005 * v;
    for (int k = 0; k < horizon + 2; ++k) {
      t.samples.push_back({static_cast<double>(k), Position(r * std::cos(w * k + v), r * std::sin(w * k + v))});
    }
    traces.push_back(std::move(t));
  }
  tfx::LineScenario s;
  s.world = std::make_shared<const World>(wc, traces);
  s.env.horizon = horizon;
  s.env.candidate_slots = 3;
  s.env.cloud = {units::ghz(60.0), units::mbps(400.0)};
  s.env.initial_workload_fraction = 0.5;
  return s;
}

std::vector<HybridAction> random_joint(const Environment& env, std::mt19937_64& rng) {
  std::vector<HybridAction> out;
  for (std::size_t v = 0; v < env.num_agents(); ++v) out.push_back(random_policy(env.candidates(v).size(), rng));
  return out;
}

// Perfect foresight: next positions straight from the traces.
class TruthForecaster : public PositionForecaster {
 public:
  std::vector<Position> forecast(const World& world, int slot) const override {
    std::vector<Position> out;
    for (std::size_t v = 0; v < world.vehicles().size(); ++v) out.push_back(world.position(v, slot));
    return out;
  }
};

}  // namespace

TEST(Reset, DeterministicAndSized) {
  const auto s = tfx::line_scenario(10);
  Environment a(s.world, s.env), b(s.world, s.env);
  const auto oa = a.reset(7), ob = b.reset(7);
  ASSERT_EQ(oa.size(), 10u);
  for (std::size_t v = 0; v < oa.size(); ++v) {
    EXPECT_EQ(oa[v], ob[v]);
    EXPECT_EQ(oa[v].size(), a.obs_dim());
    EXPECT_EQ(a.task(v).task_size, b.task(v).task_size);
  }
  EXPECT_EQ(a.slot(), 1);
  EXPECT_EQ(a.state().rsu_workloads, Eigen::VectorXd::Constant(2, 0.2 * units::gcycles(300.0)));
}

TEST(Reset, RejectsBadConfig) {
  auto s = tfx::line_scenario();
  auto bad = s.env;
  bad.horizon = 0;
  EXPECT_THROW(Environment(s.world, bad), ConfigError);
  bad = s.env;
  bad.candidate_slots = 0;
  EXPECT_THROW(Environment(s.world, bad), ConfigError);
  bad = s.env;
  bad.prediction = true;
  EXPECT_THROW(Environment(s.world, bad), ConfigError);
  bad = s.env;
  bad.start_offset_max = -1;
  EXPECT_THROW(Environment(s.world, bad), ConfigError);
}

TEST(Reset, StartOffsetShiftsTheTraceWindow) {
  const auto s = loop_scenario(3, 40);
  auto cfg = s.env;
  cfg.horizon = 5;
  cfg.start_offset_max = 20;
  cfg.prediction = true;
  Environment env(s.world, cfg, std::make_shared<TruthForecaster>());
  std::set<int> offsets;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    env.reset(seed);
    const int off = env.start_offset();
    offsets.insert(off);
    ASSERT_GE(off, 0);
    ASSERT_LE(off, 20);
    while (!env.done()) {
      EXPECT_GE(env.slot(), 1);
      for (std::size_t v = 0; v < env.num_agents(); ++v) {
        EXPECT_EQ(env.state().vehicle_positions[v], s.world->position(v, env.slot() + off));
      }
      // A truthful forecast counts the vehicles where they actually are.
      const auto z = region_count(env.state().vehicle_positions, s.world->rsus());
      for (std::size_t m = 0; m < z.size(); ++m) {
        const double expect = predict_workload(env.state().rsu_workloads[static_cast<Eigen::Index>(m)], env.zeta(),
                                               z[m], s.world->rsus()[m].max_workload);
        EXPECT_DOUBLE_EQ(env.workload_estimates()[static_cast<Eigen::Index>(m)], expect);
      }
      env.step(std::vector<HybridAction>(env.num_agents(), npm_policy()));
    }
    env.reset(seed);
    EXPECT_EQ(env.start_offset(), off);
  }
  EXPECT_GT(offsets.size(), 10u);
  Environment fixed(s.world, s.env);
  fixed.reset(5);
  EXPECT_EQ(fixed.start_offset(), 0);
}

TEST(Step, HorizonOneEndsAfterOneStep) {
  const auto s = tfx::line_scenario(2, 1);
  Environment env(s.world, s.env);
  env.reset();
  const std::vector<HybridAction> joint(2, npm_policy());
  EXPECT_TRUE(env.step(joint).done);
  EXPECT_TRUE(env.done());
  EXPECT_THROW(env.step(joint), ContractViolation);
}

TEST(Step, WrongActionCountRejected) {
  const auto s = tfx::line_scenario(2);
  Environment env(s.world, s.env);
  env.reset();
  const std::vector<HybridAction> joint(3, npm_policy());
  EXPECT_THROW(env.step(joint), ContractViolation);
}

TEST(Observe, WithoutPredictionLoadsAreCurrentAndPadded) {
  const auto s = tfx::line_scenario(2, 10, 2);
  auto cfg = s.env;
  cfg.candidate_slots = 3;
  Environment env(s.world, cfg);
  env.reset();
  for (std::size_t v = 0; v < 2; ++v) {
    const auto o = env.observe(v);
    ASSERT_EQ(env.candidates(v), (std::vector<int>{2}));
    EXPECT_DOUBLE_EQ(o[2], 0.2);
    EXPECT_DOUBLE_EQ(o[3], 0.2);
    EXPECT_EQ(o[4], 1.0);
    EXPECT_EQ(o[5], 1.0);
    EXPECT_EQ(o[6], 0.0);  // no previous slot yet
  }
  EXPECT_EQ(env.workload_estimates(), env.state().rsu_workloads);
}

TEST(Observe, RangeScan) {
  const auto s = loop_scenario(4, 100);
  auto cfg = s.env;
  cfg.t_clip = 5.0;  // low enough that clipping is exercised
  Environment env(s.world, cfg, std::make_shared<TruthForecaster>());
  std::mt19937_64 rng(3);
  int scanned = 0;
  bool clipped = false;
  for (std::uint64_t ep = 0; scanned < 10000; ++ep) {
    env.reset(ep);
    while (!env.done()) {
      for (const auto& o : env.step(random_joint(env, rng)).observations) {
        ++scanned;
        ASSERT_TRUE(o.allFinite());
        for (int k = 0; k + 1 < o.size(); ++k) {
          ASSERT_GE(o[k], 0.0);
          ASSERT_LE(o[k], 1.0);
        }
        ASSERT_GE(o[o.size() - 1], 0.0);
        ASSERT_LE(o[o.size() - 1], cfg.t_clip);
        clipped = clipped || o[o.size() - 1] == cfg.t_clip;
      }
    }
  }
  EXPECT_TRUE(clipped);
}

TEST(EnforceConstraints, Examples) {
  const auto s = tfx::line_scenario(1);
  Environment env(s.world, s.env);
  env.reset(1);
  const double lmax = units::gcycles(300.0);
  const double demand = env.task(0).task_size * s.world->vehicles()[0].cycles_per_bit;

  Eigen::VectorXd full(2);
  full << 0.0, lmax;
  const auto sat = env.enforce_constraints(0, {1, 0.7}, full);
  EXPECT_EQ(sat.action.continuous, 0.0);
  EXPECT_TRUE(sat.flagged);

  const auto same = env.enforce_constraints(0, {1, 0.3});
  EXPECT_EQ(same.action.discrete, 1);
  EXPECT_EQ(same.action.continuous, 0.3);
  EXPECT_FALSE(same.flagged);
  const auto npm = env.enforce_constraints(0, {0, 0.0});
  EXPECT_EQ(npm.action.discrete, 0);
  EXPECT_FALSE(npm.flagged);

  Eigen::VectorXd tight(2);
  tight << 0.0, lmax - 0.4 * demand;
  const auto cut = env.enforce_constraints(0, {1, 0.9}, tight);
  EXPECT_EQ(cut.action.discrete, 1);
  EXPECT_NEAR(cut.action.continuous, 0.4, 1e-12);
  EXPECT_TRUE(cut.flagged);

  const auto out_of_range = env.enforce_constraints(0, {2, 0.5});
  EXPECT_EQ(out_of_range.action.discrete, 0);
  EXPECT_EQ(out_of_range.action.continuous, 0.0);
  EXPECT_TRUE(out_of_range.flagged);
}

TEST(EnforceConstraints, OutputIsAFixedPoint) {
  const auto s = loop_scenario(3, 20);
  Environment env(s.world, s.env);
  env.reset(2);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> disc(-1, 5);
  std::uniform_real_distribution<double> frac(-0.5, 1.5), load(0.0, units::gcycles(300.0));
  for (int i = 0; i < 5000; ++i) {
    Eigen::VectorXd w(3);
    for (int m = 0; m < 3; ++m) w[m] = load(rng);
    const std::size_t v = static_cast<std::size_t>(i % 3);
    const auto once = env.enforce_constraints(v, {disc(rng), frac(rng)}, w);
    const auto twice = env.enforce_constraints(v, once.action, w);
    EXPECT_EQ(twice.action.discrete, once.action.discrete);
    EXPECT_EQ(twice.action.continuous, once.action.continuous);
    EXPECT_FALSE(twice.flagged);
    EXPECT_GE(once.action.continuous, 0.0);
    EXPECT_LE(once.action.continuous, 1.0);
  }
}

TEST(Step, NoMigrationRewardsMatchNpmLatency) {
  const auto s = loop_scenario(4, 5);
  Environment env(s.world, s.env);
  env.reset(5);
  while (!env.done()) {
    const std::vector<HybridAction> joint(env.num_agents(), npm_policy());
    const SlotOutcome expect = env.simulate_slot(joint);
    const StepResult r = env.step(joint);
    for (std::size_t v = 0; v < env.num_agents(); ++v) {
      EXPECT_EQ(r.rewards[v], -expect.breakdowns[v].total);
      EXPECT_EQ(r.rewards[v], -r.breakdowns[v].total);
      EXPECT_EQ(r.breakdowns[v].migration, 0.0);
      EXPECT_EQ(r.breakdowns[v].premigrated_processing, 0.0);
    }
  }
}

TEST(Step, SingleVehicleRewardMatchesHandEvaluation) {
  const auto s = tfx::line_scenario(1);
  for (const HybridAction a : {HybridAction{0, 0.0}, HybridAction{1, 0.5}, HybridAction{1, 1.0}}) {
    Environment env(s.world, s.env);
    env.reset(11);
    ASSERT_EQ(env.candidates(0), (std::vector<int>{2}));
    const auto task = env.task(0);

    // Vehicle at (0, 10) heading +x at 15 m/s; RSU 1 at the origin, r = 600.
    latency::SlotInputs in;
    in.channel = s.env.channel;
    in.cloud = s.env.cloud;
    in.result_compression = s.env.result_compression;
    in.transmit_power = 0.2;
    in.cycles_per_bit = units::gcycles_per_mb(0.5);
    in.task = task;
    in.dwell = std::sqrt(600.0 * 600.0 - 100.0) / 15.0;
    in.distance_serving = 10.0;
    in.uplink_bandwidth = 20e6;
    in.downlink_bandwidth = 20e6;
    in.noise_serving = 1e-13;
    in.gpu_serving = 20e9;
    in.workload_serving = 60e9;
    in.cloud_bandwidth = units::mbps(480.0);
    in.has_target = a.discrete == 1;
    in.fraction = a.continuous;
    in.distance_target = std::hypot(1000.0, 10.0);
    in.downlink_bandwidth_target = 20e6;
    in.noise_target = 1e-13;
    in.gpu_target = 20e9;
    in.workload_target = 60e9;
    in.migration_bandwidth = units::mbps(800.0);

    const StepResult r = env.step(std::vector<HybridAction>{a});
    const double expect = tfx::monolithic_total(in);
    EXPECT_NEAR(r.rewards[0], -expect, 1e-12 * expect);
    EXPECT_FALSE(r.infeasible[0]);
    // Arrivals then one slot of drain.
    const double e = in.cycles_per_bit;
    EXPECT_NEAR(env.state().rsu_workloads[1],
                std::max(0.0, 60e9 + a.continuous * task.task_size * e - 20e9), 1e-3);
  }
}

TEST(Step, WorkloadsStayWithinCapacityOverLongEpisode) {
  const auto s = loop_scenario(4, 200);
  auto cfg = s.env;
  cfg.initial_workload_fraction = 0.9;
  Environment env(s.world, cfg);
  env.reset(6);
  std::mt19937_64 rng(7);
  std::vector<std::vector<double>> rewards;
  int slots = 0;
  while (!env.done()) {
    std::vector<HybridAction> joint = random_joint(env, rng);
    if (slots % 3 == 0) {
      for (std::size_t v = 0; v < joint.size(); ++v) joint[v] = fpm_policy(env.candidates(v));
    }
    const StepResult r = env.step(joint);
    ++slots;
    for (std::size_t m = 0; m < 3; ++m) {
      const double lmax = s.world->rsus()[m].max_workload;
      ASSERT_GE(r.arrival_workloads[m], 0.0);
      ASSERT_LE(r.arrival_workloads[m], lmax);
      ASSERT_GE(env.state().rsu_workloads[m], 0.0);
      ASSERT_LE(env.state().rsu_workloads[m], lmax);
    }
    for (std::size_t v = 0; v < r.rewards.size(); ++v) ASSERT_EQ(r.rewards[v], -r.breakdowns[v].total);
    rewards.push_back(r.rewards);
  }
  EXPECT_EQ(slots, 200);
}

TEST(Step, DeterministicForSeedAndActions) {
  const auto s = loop_scenario(3, 30);
  Environment a(s.world, s.env), b(s.world, s.env);
  a.reset(8);
  b.reset(8);
  std::mt19937_64 ra(9), rb(9);
  while (!a.done()) {
    const StepResult x = a.step(random_joint(a, ra));
    const StepResult y = b.step(random_joint(b, rb));
    EXPECT_EQ(x.rewards, y.rewards);
    EXPECT_EQ(x.infeasible, y.infeasible);
    EXPECT_EQ(x.arrival_workloads, y.arrival_workloads);
    for (std::size_t v = 0; v < x.observations.size(); ++v) EXPECT_EQ(x.observations[v], y.observations[v]);
  }
}

TEST(Step, PredictionChangesOnlyObservedWorkloads) {
  const auto s = loop_scenario(4, 40);
  auto on_cfg = s.env;
  on_cfg.prediction = true;
  Environment off(s.world, s.env), on(s.world, on_cfg, std::make_shared<TruthForecaster>());
  off.reset(10);
  on.reset(10);
  std::mt19937_64 rng(11);
  bool differed = false;
  const int n = off.obs_dim();
  while (!off.done()) {
    const auto joint = random_joint(off, rng);
    const StepResult x = off.step(joint);
    const StepResult y = on.step(joint);
    EXPECT_EQ(x.rewards, y.rewards);
    EXPECT_EQ(x.arrival_workloads, y.arrival_workloads);
    EXPECT_EQ(off.state().rsu_workloads, on.state().rsu_workloads);
    for (std::size_t v = 0; v < x.observations.size(); ++v) {
      const auto& a = x.observations[v];
      const auto& b = y.observations[v];
      EXPECT_EQ(a.head<2>(), b.head<2>());
      EXPECT_EQ(a[n - 1], b[n - 1]);
      for (int k = 2; k < n - 1; ++k) {
        EXPECT_GE(b[k], a[k]);  // predicted load adds arrivals to the current one
        differed = differed || b[k] != a[k];
      }
    }
  }
  EXPECT_TRUE(differed);
}

TEST(EpisodeReturn, Examples) {
  EXPECT_EQ(episode_return({{0.0, 0.0}, {0.0, 0.0}}).mean, 0.0);
  const auto r = episode_return({{-3.0}, {-4.0}});
  EXPECT_EQ(r.per_agent, std::vector<double>{-7.0});
  EXPECT_EQ(r.mean, -7.0);
  EXPECT_THROW(episode_return({{1.0}, {1.0, 2.0}}), ContractViolation);
}

TEST(EpisodeReturn, MatchesIndependentAccumulator) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-30.0, 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int agents = 1 + trial % 7, slots = 1 + trial % 50;
    std::vector<std::vector<double>> rewards(slots, std::vector<double>(agents));
    long double objective = 0.0L;  // mean latency over agents, summed over slots
    for (auto& row : rewards) {
      for (double& x : row) {
        x = u(rng);
        objective -= static_cast<long double>(x) / agents;
      }
    }
    EXPECT_NEAR(episode_return(rewards).mean, -static_cast<double>(objective), 1e-9);
  }
}

TEST(StepRecords, OnePerAgentWithFields) {
  const auto s = tfx::line_scenario(2);
  Environment env(s.world, s.env);
  env.reset(1);
  const StepResult r = env.step(std::vector<HybridAction>{{1, 0.5}, {0, 0.0}});
  const auto recs = step_records(env, 1, r);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0]["vehicle"], 1);
  EXPECT_EQ(recs[0]["action"]["target_rsu"], 2);
  EXPECT_TRUE(recs[1]["action"]["target_rsu"].is_null());
  EXPECT_EQ(recs[0]["reward"].get<double>(), r.rewards[0]);
  EXPECT_EQ(recs[1]["breakdown"]["total"].get<double>(), r.breakdowns[1].total);
  EXPECT_FALSE(recs[0]["infeasible"].get<bool>());
}
