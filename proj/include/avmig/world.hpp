#ifndef AVMIG_WORLD_HPP_
#define AVMIG_WORLD_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace avmig {

// Planar coordinates in meters.
using Position = Eigen::Vector2d;
// Meters per second.
using Velocity = Eigen::Vector2d;

struct MapBounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 1.0;
  double max_y = 1.0;

  // Maps into [0,1]^2; positions outside the bounds are clamped.
  Position normalize(const Position& p) const;
  Position denormalize(const Position& unit) const;
};

struct RsuSpec {
  int id = 0;
  Position position = Position::Zero();
  double coverage_radius = 0.0;         // m
  double uplink_bandwidth = 0.0;        // Hz
  double downlink_bandwidth = 0.0;      // Hz
  double gpu_capacity = 0.0;            // cycles/s
  double max_workload = 0.0;            // cycles
  std::map<int, double> migration_bandwidth_to;  // rsu id -> bits/s
  double cloud_uplink_bandwidth = 0.0;  // bits/s
  double noise_power = 0.0;             // W

  // 0 when no link to `other` is configured.
  double migration_bandwidth(int other) const;
};

enum class MobilityMode { kRemote, kUrban };

struct VehicleSpec {
  int id = 0;
  double transmit_power = 0.0;  // W
  double cycles_per_bit = 0.0;
  MobilityMode mode = MobilityMode::kUrban;
};

struct TraceSample {
  double timestamp = 0.0;  // s
  Position position = Position::Zero();
};

struct MobilityTrace {
  int vehicle_id = 0;
  std::vector<TraceSample> samples;

  // Linear interpolation between samples, clamped to the first/last sample.
  Position position_at(double t) const;
  // Finite difference of the segment that ends at or after `t`; the first
  // sample uses the forward difference. Zero past the last sample.
  Velocity velocity_at(double t) const;
};

enum class RouteEnd { kStop, kBounce, kLoop };

struct RouteConfig {
  std::vector<Position> polyline;
  double speed = 0.0;          // m/s
  int slots = 1;               // number of samples emitted
  double slot_duration = 1.0;  // s
  // Start offset along the polyline, plus a seeded uniform extra in
  // [0, start_jitter].
  double start_offset = 0.0;
  double start_jitter = 0.0;
  // Std-dev of seeded isotropic Gaussian noise added to every sample (m).
  double position_noise = 0.0;
  RouteEnd end = RouteEnd::kStop;
};

double distance(const Position& a, const Position& b);

// Samples one position per slot moving along `route.polyline`.
// Throws ConfigError for a zero-length polyline.
MobilityTrace synth_route(int vehicle_id, const RouteConfig& route,
                          std::uint64_t seed);

// Nearest RSU whose coverage disk contains `p`; nearest overall when none
// covers it. Ties go to the smallest id. `rsus` must be non-empty.
int serving_rsu(const Position& p, std::span<const RsuSpec> rsus);

// Time until a vehicle at `p` moving with `velocity` leaves the coverage
// disk of `rsu`. Zero outside the disk, `t_dur_max` when stationary inside.
double dwell_time(const Position& p, const Velocity& velocity,
                  const RsuSpec& rsu, double t_dur_max);

struct WorldConfig {
  MapBounds bounds;
  std::vector<RsuSpec> rsus;
  std::vector<VehicleSpec> vehicles;
  double slot_duration = 1.0;     // s
  double candidate_radius = 0.0;  // m, urban candidate search radius
  double t_dur_max = 60.0;        // s
  // Trace samples before slot 1 (history available to forecasters).
  int warmup_slots = 0;
};

// Per-vehicle vectors are aligned with World::vehicles(), per-RSU vectors
// with World::rsus() (both sorted by ascending id).
struct WorldState {
  int slot = 1;
  std::vector<Position> vehicle_positions;
  std::vector<Velocity> vehicle_velocities;
  Eigen::VectorXd rsu_workloads;  // cycles, L_m(t)
  std::vector<int> serving;       // rsu id per vehicle
};

// Immutable geometry and mobility. Owns one trace per vehicle; slot t of a
// trace is read at time first_timestamp + (t - 1 + warmup_slots) * slot_duration.
class World {
 public:
  World(WorldConfig config, std::vector<MobilityTrace> traces);

  const WorldConfig& config() const { return config_; }
  std::span<const RsuSpec> rsus() const { return config_.rsus; }
  std::span<const VehicleSpec> vehicles() const { return config_.vehicles; }
  const MobilityTrace& trace(std::size_t vehicle_index) const {
    return traces_[vehicle_index];
  }

  std::size_t rsu_index(int rsu_id) const;
  std::size_t vehicle_index(int vehicle_id) const;
  const RsuSpec& rsu(int rsu_id) const { return config_.rsus[rsu_index(rsu_id)]; }

  Position position(std::size_t vehicle_index, int slot) const;
  Velocity velocity(std::size_t vehicle_index, int slot) const;

  // Positions, velocities and serving RSUs for `slot`; workloads untouched.
  void place_vehicles(WorldState& state, int slot) const;

  // Urban: RSUs within candidate_radius, excluding the serving one,
  // ascending id. Remote: the nearest RSU ahead along the heading, if any.
  std::vector<int> candidate_rsus(int vehicle_id,
                                  const WorldState& state) const;

  double dwell_time(int vehicle_id, int rsu_id, const WorldState& state) const;

 private:
  WorldConfig config_;
  std::vector<MobilityTrace> traces_;
};

}  // namespace avmig

#endif  // AVMIG_WORLD_HPP_
