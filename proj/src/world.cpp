#include "avmig/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "avmig/errors.hpp"

namespace avmig {

Position MapBounds::normalize(const Position& p) const {
  const double sx = max_x - min_x;
  const double sy = max_y - min_y;
  Position u((p.x() - min_x) / sx, (p.y() - min_y) / sy);
  return u.cwiseMax(0.0).cwiseMin(1.0);
}

Position MapBounds::denormalize(const Position& unit) const {
  return Position(min_x + unit.x() * (max_x - min_x),
                  min_y + unit.y() * (max_y - min_y));
}

double RsuSpec::migration_bandwidth(int other) const {
  auto it = migration_bandwidth_to.find(other);
  return it == migration_bandwidth_to.end() ? 0.0 : it->second;
}

Position MobilityTrace::position_at(double t) const {
  if (samples.empty()) throw ContractViolation("empty mobility trace");
  if (t <= samples.front().timestamp) return samples.front().position;
  if (t >= samples.back().timestamp) return samples.back().position;
  auto hi = std::lower_bound(
      samples.begin(), samples.end(), t,
      [](const TraceSample& s, double v) { return s.timestamp < v; });
  auto lo = hi - 1;
  const double w = (t - lo->timestamp) / (hi->timestamp - lo->timestamp);
  return (1.0 - w) * lo->position + w * hi->position;
}

Velocity MobilityTrace::velocity_at(double t) const {
  if (samples.size() < 2) return Velocity::Zero();
  if (t > samples.back().timestamp) return Velocity::Zero();
  auto hi = std::lower_bound(
      samples.begin(), samples.end(), t,
      [](const TraceSample& s, double v) { return s.timestamp < v; });
  if (hi == samples.begin()) ++hi;
  auto lo = hi - 1;
  return (hi->position - lo->position) / (hi->timestamp - lo->timestamp);
}

double distance(const Position& a, const Position& b) { return (a - b).norm(); }

namespace {

double polyline_length(const std::vector<Position>& poly) {
  double len = 0.0;
  for (std::size_t i = 1; i < poly.size(); ++i) len += distance(poly[i - 1], poly[i]);
  return len;
}

Position point_at_arc(const std::vector<Position>& poly, double s) {
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const double seg = distance(poly[i - 1], poly[i]);
    if (s <= seg || i + 1 == poly.size()) {
      if (seg == 0.0) return poly[i];
      const double w = std::clamp(s / seg, 0.0, 1.0);
      return poly[i - 1] + w * (poly[i] - poly[i - 1]);
    }
    s -= seg;
  }
  return poly.back();
}

}  // namespace

MobilityTrace synth_route(int vehicle_id, const RouteConfig& route,
                          std::uint64_t seed) {
  const double length = route.polyline.size() < 2 ? 0.0 : polyline_length(route.polyline);
  if (!(length > 0.0)) throw ConfigError("route polyline has zero length");
  if (route.slots < 1) throw ConfigError("route needs at least one slot");
  if (route.speed < 0.0) throw ConfigError("route speed must be non-negative");

  std::mt19937_64 rng(seed);
  double start = route.start_offset;
  if (route.start_jitter > 0.0) {
    start += std::uniform_real_distribution<double>(0.0, route.start_jitter)(rng);
  }
  std::normal_distribution<double> noise(0.0, 1.0);

  MobilityTrace trace;
  trace.vehicle_id = vehicle_id;
  trace.samples.reserve(static_cast<std::size_t>(route.slots));
  for (int k = 0; k < route.slots; ++k) {
    double s = start + route.speed * route.slot_duration * k;
    switch (route.end) {
      case RouteEnd::kStop:
        s = std::min(s, length);
        break;
      case RouteEnd::kLoop:
        s = std::fmod(s, length);
        break;
      case RouteEnd::kBounce: {
        s = std::fmod(s, 2.0 * length);
        if (s > length) s = 2.0 * length - s;
        break;
      }
    }
    Position p = point_at_arc(route.polyline, s);
    if (route.position_noise > 0.0) {
      const double nx = noise(rng);
      const double ny = noise(rng);
      p += route.position_noise * Position(nx, ny);
    }
    trace.samples.push_back({route.slot_duration * k, p});
  }
  return trace;
}

int serving_rsu(const Position& p, std::span<const RsuSpec> rsus) {
  if (rsus.empty()) throw ContractViolation("serving_rsu: no RSUs");
  bool covered = false;
  int best_cover = 0;
  double best_cover_d = std::numeric_limits<double>::infinity();
  int best_any = rsus.front().id;
  double best_any_d = std::numeric_limits<double>::infinity();
  for (const RsuSpec& r : rsus) {
    const double d = distance(p, r.position);
    if (d < best_any_d || (d == best_any_d && r.id < best_any)) {
      best_any = r.id;
      best_any_d = d;
    }
    if (d <= r.coverage_radius &&
        (!covered || d < best_cover_d || (d == best_cover_d && r.id < best_cover))) {
      covered = true;
      best_cover = r.id;
      best_cover_d = d;
    }
  }
  return covered ? best_cover : best_any;
}

double dwell_time(const Position& p, const Velocity& velocity,
                  const RsuSpec& rsu, double t_dur_max) {
  const Eigen::Vector2d w = p - rsu.position;
  const double r2 = rsu.coverage_radius * rsu.coverage_radius;
  if (w.squaredNorm() > r2) return 0.0;
  const double speed = velocity.norm();
  if (speed == 0.0) return t_dur_max;
  const Eigen::Vector2d u = velocity / speed;
  const double b = w.dot(u);
  const double disc = b * b - (w.squaredNorm() - r2);
  const double exit = -b + std::sqrt(std::max(disc, 0.0));
  return std::max(exit, 0.0) / speed;
}

World::World(WorldConfig config, std::vector<MobilityTrace> traces)
    : config_(std::move(config)) {
  if (config_.rsus.empty()) throw ConfigError("world has no RSUs");
  if (config_.vehicles.empty()) throw ConfigError("world has no vehicles");
  if (!(config_.slot_duration > 0.0)) throw ConfigError("slot_duration must be positive");
  if (!(config_.bounds.max_x > config_.bounds.min_x) ||
      !(config_.bounds.max_y > config_.bounds.min_y)) {
    throw ConfigError("map bounds are empty");
  }
  std::sort(config_.rsus.begin(), config_.rsus.end(),
            [](const RsuSpec& a, const RsuSpec& b) { return a.id < b.id; });
  std::sort(config_.vehicles.begin(), config_.vehicles.end(),
            [](const VehicleSpec& a, const VehicleSpec& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < config_.rsus.size(); ++i) {
    if (config_.rsus[i].id == config_.rsus[i - 1].id) {
      throw ConfigError("duplicate RSU id " + std::to_string(config_.rsus[i].id));
    }
  }
  for (std::size_t i = 1; i < config_.vehicles.size(); ++i) {
    if (config_.vehicles[i].id == config_.vehicles[i - 1].id) {
      throw ConfigError("duplicate vehicle id " + std::to_string(config_.vehicles[i].id));
    }
  }
  for (const RsuSpec& r : config_.rsus) {
    if (!(r.coverage_radius > 0.0) || !(r.uplink_bandwidth > 0.0) ||
        !(r.downlink_bandwidth > 0.0) || !(r.gpu_capacity > 0.0) ||
        !(r.max_workload > 0.0) || !(r.noise_power > 0.0)) {
      throw ConfigError("RSU " + std::to_string(r.id) + " has a non-positive parameter");
    }
  }
  for (const VehicleSpec& v : config_.vehicles) {
    if (!(v.transmit_power > 0.0) || !(v.cycles_per_bit > 0.0)) {
      throw ConfigError("vehicle " + std::to_string(v.id) + " has a non-positive parameter");
    }
  }

  traces_.resize(config_.vehicles.size());
  std::vector<bool> seen(config_.vehicles.size(), false);
  for (MobilityTrace& t : traces) {
    const std::size_t vi = vehicle_index(t.vehicle_id);
    if (t.samples.empty()) {
      throw ConfigError("empty trace for vehicle " + std::to_string(t.vehicle_id));
    }
    seen[vi] = true;
    traces_[vi] = std::move(t);
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw ConfigError("no trace for vehicle " + std::to_string(config_.vehicles[i].id));
    }
  }
}

std::size_t World::rsu_index(int rsu_id) const {
  auto it = std::lower_bound(config_.rsus.begin(), config_.rsus.end(), rsu_id,
                             [](const RsuSpec& r, int id) { return r.id < id; });
  if (it == config_.rsus.end() || it->id != rsu_id) {
    throw ContractViolation("unknown RSU id " + std::to_string(rsu_id));
  }
  return static_cast<std::size_t>(it - config_.rsus.begin());
}

std::size_t World::vehicle_index(int vehicle_id) const {
  auto it = std::lower_bound(
      config_.vehicles.begin(), config_.vehicles.end(), vehicle_id,
      [](const VehicleSpec& v, int id) { return v.id < id; });
  if (it == config_.vehicles.end() || it->id != vehicle_id) {
    throw ContractViolation("unknown vehicle id " + std::to_string(vehicle_id));
  }
  return static_cast<std::size_t>(it - config_.vehicles.begin());
}

Position World::position(std::size_t vehicle_index, int slot) const {
  const MobilityTrace& t = traces_.at(vehicle_index);
  return t.position_at(t.samples.front().timestamp +
                       (slot - 1 + config_.warmup_slots) * config_.slot_duration);
}

Velocity World::velocity(std::size_t vehicle_index, int slot) const {
  const MobilityTrace& t = traces_.at(vehicle_index);
  return t.velocity_at(t.samples.front().timestamp +
                       (slot - 1 + config_.warmup_slots) * config_.slot_duration);
}

void World::place_vehicles(WorldState& state, int slot) const {
  const std::size_t n = config_.vehicles.size();
  state.slot = slot;
  state.vehicle_positions.resize(n);
  state.vehicle_velocities.resize(n);
  state.serving.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    state.vehicle_positions[i] = position(i, slot);
    state.vehicle_velocities[i] = velocity(i, slot);
    state.serving[i] = serving_rsu(state.vehicle_positions[i], rsus());
  }
}

std::vector<int> World::candidate_rsus(int vehicle_id,
                                       const WorldState& state) const {
  const std::size_t vi = vehicle_index(vehicle_id);
  const Position& p = state.vehicle_positions.at(vi);
  const int serving = state.serving.at(vi);
  std::vector<int> out;
  if (config_.vehicles[vi].mode == MobilityMode::kUrban) {
    for (const RsuSpec& r : config_.rsus) {
      if (r.id != serving && distance(p, r.position) <= config_.candidate_radius) {
        out.push_back(r.id);
      }
    }
    return out;
  }
  const Velocity& vel = state.vehicle_velocities.at(vi);
  if (vel.squaredNorm() == 0.0) return out;
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const RsuSpec& r : config_.rsus) {
    if (r.id == serving) continue;
    if ((r.position - p).dot(vel) <= 0.0) continue;
    const double d = distance(p, r.position);
    if (d < best_d) {
      best = r.id;
      best_d = d;
    }
  }
  if (best >= 0) out.push_back(best);
  return out;
}

double World::dwell_time(int vehicle_id, int rsu_id,
                         const WorldState& state) const {
  const std::size_t vi = vehicle_index(vehicle_id);
  return avmig::dwell_time(state.vehicle_positions.at(vi),
                           state.vehicle_velocities.at(vi), rsu(rsu_id),
                           config_.t_dur_max);
}

}  // namespace avmig
