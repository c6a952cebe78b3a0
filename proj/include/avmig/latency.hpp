#ifndef AVMIG_LATENCY_HPP_
#define AVMIG_LATENCY_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "avmig/errors.hpp"

// Per-vehicle, per-slot service latency: wireless up/down links over a
// free-space Rayleigh channel, inter-RSU pre-migration, queueing at the
// serving and pre-migration RSUs, and cloud spill-over of work that cannot
// finish while the vehicle is still in coverage.
//
// All quantities use internal units (bits, seconds, cycles, Hz, watts).
namespace avmig::latency {

inline constexpr double kLightSpeed = 2.99792458e8;

struct ChannelParams {
  double gain_coefficient = 4.11;   // A
  double carrier_frequency = 2e9;   // Hz
  double light_speed = kLightSpeed;
  double min_distance = 1.0;        // m, clamp for d -> 0
};

struct TaskSpec {
  double input_size = 0.0;  // bits
  double task_size = 0.0;   // bits
};

struct MigrationDecision {
  std::optional<int> target_rsu;
  double fraction = 0.0;
};

struct CloudSpec {
  double gpu_capacity = 0.0;           // cycles/s
  double vehicle_downlink_rate = 0.0;  // bits/s
};

struct LatencyBreakdown {
  double upload = 0.0;
  double local_processing = 0.0;
  double premigrated_processing = 0.0;
  double migration = 0.0;
  double cloud = 0.0;
  double download = 0.0;
  double total = 0.0;
  double cloud_residual = 0.0;  // bits
};

template <typename Scalar>
struct ChannelGain {
  Scalar value;
  bool clamped;
};

// A (l / (4 pi f d))^2, with d clamped below at ch.min_distance.
template <typename Scalar>
ChannelGain<Scalar> channel_gain(Scalar d, const ChannelParams& ch) {
  const bool clamped = !(d >= Scalar(ch.min_distance));
  const Scalar dd = clamped ? Scalar(ch.min_distance) : d;
  const Scalar ratio = Scalar(ch.light_speed) /
                       (Scalar(4) * std::numbers::pi_v<Scalar> *
                        Scalar(ch.carrier_frequency) * dd);
  return {Scalar(ch.gain_coefficient) * ratio * ratio, clamped};
}

// Shannon rate B log2(1 + p h / noise).
template <typename Scalar>
Scalar link_rate(Scalar bandwidth, Scalar power, Scalar gain, Scalar noise) {
  return bandwidth * std::log2(Scalar(1) + power * gain / noise);
}

template <typename Scalar>
Scalar upload_latency(Scalar input_size, Scalar rate) {
  if (!(rate > Scalar(0))) throw InfeasibleLink("upload rate is zero");
  return input_size / rate;
}

template <typename Scalar>
Scalar migration_latency(Scalar migrated_size, Scalar link) {
  if (migrated_size <= Scalar(0)) return Scalar(0);
  if (!(link > Scalar(0))) throw InfeasibleLink("no inter-RSU migration link");
  return migrated_size / link;
}

// Queue wait plus processing of the non-migrated portion at the serving RSU.
template <typename Scalar>
Scalar local_processing_latency(Scalar workload, Scalar task_size,
                                Scalar fraction, Scalar cycles_per_bit,
                                Scalar gpu_capacity) {
  return (workload + (Scalar(1) - fraction) * task_size * cycles_per_bit) /
         gpu_capacity;
}

template <typename Scalar>
Scalar premigrated_processing_latency(Scalar migration, Scalar target_workload,
                                      Scalar migrated_size,
                                      Scalar cycles_per_bit,
                                      Scalar target_capacity) {
  return migration +
         (target_workload + migrated_size * cycles_per_bit) / target_capacity;
}

// Bits left unfinished when the vehicle leaves coverage. The second branch
// is clamped to [0, (1 - fraction) * task_size].
template <typename Scalar>
Scalar cloud_residual(Scalar upload, Scalar local_processing, Scalar dwell,
                      Scalar workload, Scalar task_size, Scalar fraction,
                      Scalar cycles_per_bit, Scalar gpu_capacity) {
  if (upload + local_processing <= dwell) return Scalar(0);
  const Scalar kept = (Scalar(1) - fraction) * task_size;
  const Scalar raw =
      (workload + kept * cycles_per_bit - gpu_capacity * dwell) / cycles_per_bit;
  return std::clamp(raw, Scalar(0), kept);
}

template <typename Scalar>
Scalar cloud_latency(Scalar residual, Scalar rsu_cloud_bandwidth,
                     Scalar cycles_per_bit, Scalar cloud_capacity) {
  if (residual <= Scalar(0)) return Scalar(0);
  if (!(rsu_cloud_bandwidth > Scalar(0)) || !(cloud_capacity > Scalar(0))) {
    throw InfeasibleLink("no RSU-to-cloud link");
  }
  return residual / rsu_cloud_bandwidth +
         residual * cycles_per_bit / cloud_capacity;
}

// Result download from serving RSU, pre-migration RSU and cloud. Each
// result portion is its task portion scaled by `result_compression`.
template <typename Scalar>
Scalar download_latency(Scalar task_size, Scalar migrated_size,
                        Scalar residual, Scalar rate_serving,
                        Scalar rate_target, Scalar rate_cloud,
                        Scalar result_compression = Scalar(1)) {
  auto part = [](Scalar bits, Scalar rate, const char* which) {
    if (bits <= Scalar(0)) return Scalar(0);
    if (!(rate > Scalar(0))) {
      throw InfeasibleLink(std::string("no downlink from ") + which);
    }
    return bits / rate;
  };
  return part(result_compression * (task_size - migrated_size), rate_serving,
              "serving RSU") +
         part(result_compression * migrated_size, rate_target,
              "pre-migration RSU") +
         part(result_compression * residual, rate_cloud, "cloud");
}

// Upload, then local queueing in parallel with migration + remote
// processing, then cloud spill-over and download.
inline LatencyBreakdown total_latency(double upload, double local_processing,
                                      double premigrated_processing,
                                      double migration, double cloud,
                                      double download, double residual) {
  LatencyBreakdown b;
  b.upload = upload;
  b.local_processing = local_processing;
  b.premigrated_processing = premigrated_processing;
  b.migration = migration;
  b.cloud = cloud;
  b.download = download;
  b.cloud_residual = residual;
  b.total = upload + std::max(local_processing, premigrated_processing) +
            cloud + download;
  return b;
}

// Everything needed to evaluate one vehicle in one slot.
struct SlotInputs {
  ChannelParams channel;
  CloudSpec cloud;
  double result_compression = 1.0;

  // vehicle
  double transmit_power = 0.0;
  double cycles_per_bit = 0.0;
  TaskSpec task;
  double dwell = 0.0;  // s, in the serving RSU's coverage

  // serving RSU
  double distance_serving = 0.0;
  double uplink_bandwidth = 0.0;
  double downlink_bandwidth = 0.0;
  double noise_serving = 0.0;
  double gpu_serving = 0.0;
  double workload_serving = 0.0;
  double cloud_bandwidth = 0.0;  // B_{m,c}

  // pre-migration RSU; ignored when !has_target (fraction must then be 0)
  bool has_target = false;
  double fraction = 0.0;
  double distance_target = 0.0;
  double downlink_bandwidth_target = 0.0;
  double noise_target = 0.0;
  double gpu_target = 0.0;
  double workload_target = 0.0;
  double migration_bandwidth = 0.0;

  // Lower bound on the cloud residual, used when the serving RSU cannot
  // admit the whole kept portion.
  double min_residual = 0.0;
};

inline LatencyBreakdown evaluate(const SlotInputs& in) {
  const double fraction = in.has_target ? in.fraction : 0.0;
  const double e = in.cycles_per_bit;
  const double task = in.task.task_size;

  const double h_serving = channel_gain(in.distance_serving, in.channel).value;
  const double r_up = link_rate(in.uplink_bandwidth, in.transmit_power,
                                h_serving, in.noise_serving);
  const double r_down = link_rate(in.downlink_bandwidth, in.transmit_power,
                                  h_serving, in.noise_serving);
  const double up = upload_latency(in.task.input_size, r_up);

  const double migrated = fraction * task;
  double mig = 0.0;
  double premig = 0.0;
  double r_down_target = 0.0;
  if (in.has_target) {
    mig = migration_latency(migrated, in.migration_bandwidth);
    premig = premigrated_processing_latency(mig, in.workload_target, migrated,
                                            e, in.gpu_target);
    const double h_target = channel_gain(in.distance_target, in.channel).value;
    r_down_target = link_rate(in.downlink_bandwidth_target, in.transmit_power,
                              h_target, in.noise_target);
  }

  const double local = local_processing_latency(in.workload_serving, task,
                                                fraction, e, in.gpu_serving);
  double residual = cloud_residual(up, local, in.dwell, in.workload_serving,
                                   task, fraction, e, in.gpu_serving);
  if (in.min_residual > residual) {
    residual = std::min(in.min_residual, (1.0 - fraction) * task);
  }
  const double cloud = cloud_latency(residual, in.cloud_bandwidth, e,
                                     in.cloud.gpu_capacity);
  const double down = download_latency(task, migrated, residual, r_down,
                                       r_down_target,
                                       in.cloud.vehicle_downlink_rate,
                                       in.result_compression);
  return total_latency(up, local, premig, mig, cloud, down, residual);
}

}  // namespace avmig::latency

#endif  // AVMIG_LATENCY_HPP_
