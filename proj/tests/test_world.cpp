#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "avmig/errors.hpp"
#include "avmig/world.hpp"
#include "support.hpp"

using namespace avmig;
using avmig::tfx::make_rsu;

namespace {

// Brute force: nearest covering RSU, else nearest overall; smallest id on ties.
int serving_oracle(const Position& p, const std::vector<RsuSpec>& rsus) {
  int best = -1;
  double best_d = 0.0;
  bool best_cov = false;
  for (const auto& r : rsus) {
    const double d = std::hypot(p.x() - r.position.x(), p.y() - r.position.y());
    const bool cov = d <= r.coverage_radius;
    const bool better = best < 0 || (cov && !best_cov) ||
                        (cov == best_cov && (d < best_d || (d == best_d && r.id < best)));
    if (better) {
      best = r.id;
      best_d = d;
      best_cov = cov;
    }
  }
  return best;
}

}  // namespace

TEST(Distance, Examples) {
  EXPECT_EQ(distance({0, 0}, {0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(distance({0, 0}, {3, 4}), 5.0);
  EXPECT_NEAR(distance({1.5, 2.5}, {-0.5, 0.5}), 2.0 * std::sqrt(2.0), 1e-15);
}

TEST(Distance, IsAMetric) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const Position a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng));
    EXPECT_GE(distance(a, b), 0.0);
    EXPECT_EQ(distance(a, b), distance(b, a));
    EXPECT_LE(distance(a, c), distance(a, b) + distance(b, c) + 1e-9);
  }
}

TEST(SynthRoute, StraightRoadArithmeticProgression) {
  RouteConfig rc;
  rc.polyline = {{0, 0}, {100, 0}};
  rc.speed = 10.0;
  rc.slots = 5;
  rc.slot_duration = 1.0;
  const MobilityTrace t = synth_route(3, rc, 42);
  ASSERT_EQ(t.samples.size(), 5u);
  EXPECT_EQ(t.vehicle_id, 3);
  for (int k = 0; k < 5; ++k) {
    EXPECT_NEAR(t.samples[k].position.x(), 10.0 * k, 1e-12);
    EXPECT_NEAR(t.samples[k].position.y(), 0.0, 1e-12);
    EXPECT_NEAR(t.samples[k].timestamp, k * 1.0, 1e-12);
  }
}

TEST(SynthRoute, StationaryAndDeterministic) {
  RouteConfig rc;
  rc.polyline = {{5, 5}, {100, 40}, {200, -10}};
  rc.speed = 0.0;
  rc.slots = 6;
  for (const auto& s : synth_route(1, rc, 1).samples) EXPECT_EQ(s.position, Position(5, 5));

  rc.speed = 13.0;
  rc.start_jitter = 30.0;
  rc.position_noise = 2.0;
  rc.end = RouteEnd::kBounce;
  rc.slots = 50;
  const auto a = synth_route(1, rc, 99);
  const auto b = synth_route(1, rc, 99);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    EXPECT_EQ(a.samples[k].position, b.samples[k].position);  // bit-identical
    EXPECT_EQ(a.samples[k].timestamp, b.samples[k].timestamp);
  }
  const auto c = synth_route(1, rc, 100);
  EXPECT_NE(a.samples[3].position, c.samples[3].position);
}

TEST(SynthRoute, ZeroLengthPolylineRejected) {
  RouteConfig rc;
  rc.polyline = {{1, 1}, {1, 1}};
  rc.speed = 1.0;
  EXPECT_THROW(synth_route(1, rc, 0), ConfigError);
  rc.polyline = {{1, 1}};
  EXPECT_THROW(synth_route(1, rc, 0), ConfigError);
}

TEST(ServingRsu, Examples) {
  std::vector<RsuSpec> rsus = {make_rsu(2, -100, 0, 200), make_rsu(5, 100, 0, 200),
                               make_rsu(7, 5000, 0, 10)};
  EXPECT_EQ(serving_rsu({5000, 0}, rsus), 7);
  EXPECT_EQ(serving_rsu({0, 50}, rsus), 2);  // equidistant, both covering
  EXPECT_EQ(serving_rsu({2000, 0}, rsus), serving_oracle({2000, 0}, rsus));
}

TEST(ServingRsu, MatchesBruteForceAndIgnoresOrder) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 3000.0);
  std::uniform_real_distribution<double> rad(100.0, 800.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RsuSpec> rsus;
    for (int m = 0; m < 6; ++m) rsus.push_back(make_rsu(10 + m, u(rng), u(rng), rad(rng)));
    for (int k = 0; k < 20; ++k) {
      const Position p(u(rng), u(rng));
      const int expect = serving_oracle(p, rsus);
      EXPECT_EQ(serving_rsu(p, rsus), expect);
      auto shuffled = rsus;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      EXPECT_EQ(serving_rsu(p, shuffled), expect);
    }
  }
}

TEST(CandidateRsus, UrbanFilterAndSort) {
  WorldConfig wc;
  wc.bounds = {-2000, -2000, 2000, 2000};
  wc.rsus = {make_rsu(3, 0, 0), make_rsu(1, 300, 0), make_rsu(4, 0, -400), make_rsu(9, 1900, 1900)};
  wc.vehicles = {tfx::make_vehicle(1)};
  wc.candidate_radius = 600.0;
  World w(wc, {tfx::line_trace(1, {10, 0}, {0, 0}, 3)});
  WorldState st;
  w.place_vehicles(st, 1);
  ASSERT_EQ(st.serving[0], 3);
  EXPECT_EQ(w.candidate_rsus(1, st), (std::vector<int>{1, 4}));

  wc.candidate_radius = 1.0;
  World w2(wc, {tfx::line_trace(1, {10, 0}, {0, 0}, 3)});
  w2.place_vehicles(st, 1);
  EXPECT_TRUE(w2.candidate_rsus(1, st).empty());
}

TEST(CandidateRsus, RemoteNextAlongHeading) {
  WorldConfig wc;
  wc.bounds = {-2000, -2000, 4000, 2000};
  wc.rsus = {make_rsu(1, 0, 0), make_rsu(2, 1000, 0), make_rsu(3, -1000, 0)};
  wc.vehicles = {tfx::make_vehicle(1, MobilityMode::kRemote)};
  wc.candidate_radius = 5000.0;
  World w(wc, {tfx::line_trace(1, {400, 0}, {10, 0}, 3)});
  WorldState st;
  w.place_vehicles(st, 1);
  EXPECT_EQ(st.serving[0], 1);
  EXPECT_EQ(w.candidate_rsus(1, st), (std::vector<int>{2}));
}

TEST(DwellTime, Examples) {
  const RsuSpec r = make_rsu(1, 0, 0, 500);
  for (double angle : {0.0, 1.0, 2.5, 4.0}) {
    const Velocity v(10 * std::cos(angle), 10 * std::sin(angle));
    EXPECT_NEAR(dwell_time({0, 0}, v, r, 60.0), 50.0, 1e-12);
  }
  EXPECT_NEAR(dwell_time({500, 0}, {10, 0}, r, 60.0), 0.0, 1e-12);
  EXPECT_EQ(dwell_time({100, 100}, {0, 0}, r, 60.0), 60.0);
  EXPECT_EQ(dwell_time({600, 0}, {-10, 0}, r, 60.0), 0.0);
}

TEST(DwellTime, ChordBound) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const RsuSpec r = make_rsu(1, 50, -20, 300);
  for (int i = 0; i < 5000; ++i) {
    Position p(u(rng), u(rng));
    if (p.norm() >= 1.0) continue;
    p = r.position + p * r.coverage_radius;
    const Velocity v(20 * u(rng), 20 * u(rng));
    if (v.norm() < 1e-3) continue;
    const double t = dwell_time(p, v, r, 1e9);
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 2.0 * r.coverage_radius / v.norm() * (1 + 1e-12));
    // The exit point lies on the boundary.
    EXPECT_NEAR(distance(p + v * t, r.position), r.coverage_radius, 1e-6);
  }
}

TEST(World, VelocityUsesForwardDifferenceAtFirstSlot) {
  WorldConfig wc;
  wc.bounds = {0, 0, 1000, 1000};
  wc.rsus = {make_rsu(1, 0, 0)};
  wc.vehicles = {tfx::make_vehicle(1)};
  MobilityTrace t;
  t.vehicle_id = 1;
  t.samples = {{0.0, {0, 0}}, {1.0, {3, 4}}, {2.0, {9, 4}}};
  World w(wc, {t});
  EXPECT_EQ(w.velocity(0, 1), Velocity(3, 4));
  EXPECT_EQ(w.velocity(0, 2), Velocity(3, 4));
  EXPECT_EQ(w.velocity(0, 3), Velocity(6, 0));
  EXPECT_EQ(w.position(0, 3), Position(9, 4));
}

TEST(World, RejectsInconsistentConfig) {
  WorldConfig wc;
  wc.rsus = {make_rsu(1, 0, 0)};
  EXPECT_THROW(World(wc, {}), ConfigError);
}
