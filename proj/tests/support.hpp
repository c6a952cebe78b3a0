#ifndef AVMIG_TESTS_SUPPORT_HPP_
#define AVMIG_TESTS_SUPPORT_HPP_

#include <memory>
#include <random>
#include <vector>

#include "avmig/env.hpp"
#include "avmig/units.hpp"
#include "avmig/world.hpp"

namespace avmig::tfx {

inline RsuSpec make_rsu(int id, double x, double y, double radius = 500.0) {
  RsuSpec r;
  r.id = id;
  r.position = Position(x, y);
  r.coverage_radius = radius;
  r.uplink_bandwidth = 20e6;
  r.downlink_bandwidth = 20e6;
  r.gpu_capacity = units::ghz(20.0);
  r.max_workload = units::gcycles(300.0);
  r.cloud_uplink_bandwidth = units::mbps(480.0);
  r.noise_power = 1e-13;
  return r;
}

inline void full_mesh(std::vector<RsuSpec>& rsus, double bandwidth) {
  for (auto& a : rsus) {
    for (const auto& b : rsus) {
      if (a.id != b.id) a.migration_bandwidth_to[b.id] = bandwidth;
    }
  }
}

inline VehicleSpec make_vehicle(int id, MobilityMode mode = MobilityMode::kUrban) {
  VehicleSpec v;
  v.id = id;
  v.transmit_power = 0.2;
  v.cycles_per_bit = units::gcycles_per_mb(0.5);
  v.mode = mode;
  return v;
}

// Constant-velocity samples at t = 0, dt, 2 dt, ...
inline MobilityTrace line_trace(int id, Position start, Velocity vel, int n, double dt = 1.0) {
  MobilityTrace t;
  t.vehicle_id = id;
  for (int k = 0; k < n; ++k) t.samples.push_back({k * dt, start + vel * (k * dt)});
  return t;
}

// Two RSUs 1 km apart on the x axis and `vehicles` vehicles driving
// eastward from near RSU 1.
struct LineScenario {
  std::shared_ptr<const World> world;
  EnvConfig env;
};

inline LineScenario line_scenario(int vehicles = 2, int horizon = 10, int rsus = 2) {
  WorldConfig wc;
  wc.bounds = {-100.0, -100.0, 1000.0 * rsus, 100.0};
  for (int m = 0; m < rsus; ++m) wc.rsus.push_back(make_rsu(m + 1, 1000.0 * m, 0.0, 600.0));
  full_mesh(wc.rsus, units::mbps(800.0));
  wc.slot_duration = 1.0;
  wc.candidate_radius = 1500.0;
  wc.t_dur_max = 60.0;
  std::vector<MobilityTrace> traces;
  for (int v = 0; v < vehicles; ++v) {
    wc.vehicles.push_back(make_vehicle(v + 1));
    traces.push_back(line_trace(v + 1, Position(20.0 * v, 10.0), Velocity(15.0 + v, 0.0), horizon + 2));
  }
  LineScenario s;
  s.world = std::make_shared<const World>(wc, traces);
  s.env.horizon = horizon;
  s.env.candidate_slots = 2;
  s.env.cloud = {units::ghz(60.0), units::mbps(400.0)};
  s.env.initial_workload_fraction = 0.2;
  return s;
}

}  // namespace avmig::tfx

#endif  // AVMIG_TESTS_SUPPORT_HPP_
