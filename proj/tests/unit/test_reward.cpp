#include <cmath>
#include <numeric>

#include <doctest.h>

#include "spikegrasp/reward.hpp"

using namespace spikegrasp;
using namespace spikegrasp::reward;
using arm::GeometryFeatures;

namespace {

RewardWeightSet only_alpha1() {
  RewardWeightSet w;
  w.alpha = {1.0, 0.0, 0.0, 0.0};
  return w;
}

GeometryFeatures perfect_geometry() {
  GeometryFeatures g;
  g.g = 0.054;
  g.g_opt = 0.054;
  g.nu_z = 1.0;
  g.grasped = true;
  return g;
}

template <std::size_t N>
double sum(const std::array<double, N>& a) {
  return std::accumulate(a.begin(), a.end(), 0.0);
}

GeometryFeatures random_geometry(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 0.5);
  GeometryFeatures g;
  g.d = u(rng);
  g.d_lf = u(rng);
  g.d_rf = u(rng);
  g.eps_xy = u(rng);
  g.d_align = g.eps_xy;
  g.z_mid = u(rng);
  g.z_cube = 0.025;
  g.d_mid = std::hypot(g.eps_xy, g.z_mid - g.z_cube);
  g.dx = u(rng);
  g.dy = u(rng);
  g.z_lf = u(rng);
  g.z_rf = u(rng);
  g.g = u(rng) * 0.16;
  g.g_opt = 0.054;
  g.grasped = u(rng) < 0.1;
  return g;
}

Eigen::Quaterniond random_unit_quaternion(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

TEST_SUITE("reward") {

TEST_CASE("proximity and alignment") {
  const RewardScales s;
  GeometryFeatures g;
  const RewardWeightSet w = default_stage1_weights();
  CHECK(prox_align_reward(g, w, s) == doctest::Approx(sum(w.alpha)));
  g.d = g.d_lf = g.d_rf = 1e6;
  g.d_align = g.d_mid = g.dx = g.dy = 1e6;
  CHECK(prox_align_reward(g, w, s) < 1e-12);

  GeometryFeatures h;
  h.d = h.d_lf = h.d_rf = 0.3;
  CHECK(prox_align_reward(h, only_alpha1(), s) == doctest::Approx(1.0 - std::tanh(0.9)));
}

TEST_CASE("gripper geometry") {
  const RewardScales s;
  RewardWeightSet w;
  w.beta = {0.3, 0.2, 0.1};
  GeometryFeatures g;
  g.g = g.g_opt = 0.05;
  CHECK(grip_geom_reward(g, w, s) == doctest::Approx(0.6));
  g.g = 1e6;
  CHECK(grip_geom_reward(g, w, s) == doctest::Approx(0.5));

  RewardScales t;
  t.xi[2] = 10.0;
  RewardWeightSet only_beta3;
  only_beta3.beta = {0.0, 0.0, 1.0};
  GeometryFeatures h;
  h.g = 0.15;
  h.g_opt = 0.05;
  CHECK(grip_geom_reward(h, only_beta3, t) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("task term") {
  CHECK(task_reward(false, 1.0, 10.0) == 0.0);
  CHECK(task_reward(true, 1.0, 10.0) == 10.0);
  CHECK(task_reward(true, 0.0, 10.0) == 0.0);
}

TEST_CASE("pose reward and penalty") {
  const RewardScales s;
  RewardWeightSet w;
  w.delta = {0.4, 0.6};
  const GeometryFeatures g;
  const PoseTerms up = pose_reward_and_penalty(g, Eigen::Quaterniond::Identity(), w, s);
  CHECK(up.reward == doctest::Approx(1.0));
  CHECK(up.penalty == 0.0);
  CHECK(verticality(Eigen::Quaterniond::Identity()) == 1.0);

  RewardScales t;
  t.theta[2] = 1.0;
  const Eigen::Quaterniond tilt(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitX()));
  const PoseTerms side = pose_reward_and_penalty(g, tilt, w, t);
  CHECK(side.penalty == doctest::Approx(-1.0));
  CHECK(side.reward == doctest::Approx(0.6));

  CHECK_THROWS_AS(pose_reward_and_penalty(g, Eigen::Quaterniond(2, 0, 0, 0), w, s),
                  std::invalid_argument);
}

TEST_CASE("perfect grasp closed form") {
  const RewardScales s;
  for (const RewardWeightSet& w : {default_stage1_weights(), default_stage2_weights()}) {
    const RewardBreakdown b =
        total_reward(perfect_geometry(), Eigen::Quaterniond::Identity(), w, s);
    const double closed = sum(w.alpha) + sum(w.beta) + w.gamma * s.success_reward +
                          w.delta[0] + w.delta[1];
    CHECK(std::abs(b.total - closed) < 1e-9);
    CHECK(b.penalty == 0.0);
  }
  RewardWeightSet zero;
  CHECK(total_reward(perfect_geometry(), Eigen::Quaterniond::Identity(), zero, s).total == 0.0);
}

TEST_CASE("breakdown sums and bounds on random states") {
  const RewardScales s;
  const RewardWeightSet w = default_stage2_weights();
  const double bound = sum(w.alpha) + sum(w.beta) + w.delta[0] + w.delta[1];
  Rng rng(4);
  for (int n = 0; n < 10000; ++n) {
    const GeometryFeatures g = random_geometry(rng);
    const RewardBreakdown b = total_reward(g, random_unit_quaternion(rng), w, s);
    const double parts = b.prox_align + b.grip_geom + b.task + b.pose + b.penalty;
    REQUIRE(std::abs(parts - b.total) <= 1e-12);
    REQUIRE(b.prox_align + b.grip_geom + b.pose <= bound + 1e-12);
    REQUIRE(b.prox_align > 0.0);
  }
}

TEST_CASE("falloff terms decrease strictly with distance") {
  const RewardScales s;
  const RewardWeightSet w = default_stage1_weights();
  double prev = prox_align_reward(GeometryFeatures{}, w, s);
  for (int k = 1; k <= 50; ++k) {
    GeometryFeatures g;
    g.d_mid = 0.01 * k;
    const double r = prox_align_reward(g, w, s);
    CHECK(r < prev);
    CHECK(r > 0.0);
    prev = r;
  }
}

TEST_CASE("validation") {
  RewardScales s;
  s.kappa[0] = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  RewardWeightSet w;
  w.gamma = -1.0;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
}

}  // TEST_SUITE

TEST_SUITE("curriculum") {

TEST_CASE("stage switches exactly at T1") {
  CurriculumSchedule sch;
  sch.t1 = 100;
  const DeadZoneTracker idle;
  CHECK(schedule_weights(99, sch, idle) == sch.stage1);
  CHECK(schedule_weights(100, sch, idle) == sch.stage2);
  CHECK(schedule_weights(0, sch, idle) == sch.stage1);
  CHECK(schedule_weights(100000, sch, idle) == sch.stage2);
  CurriculumSchedule bad;
  bad.t1 = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("active dead zone scales weights") {
  CurriculumSchedule sch;
  sch.stage2.alpha[0] = 0.4;
  DeadZoneTracker t;
  t.active = true;
  t.remaining = 5;
  const RewardWeightSet w = schedule_weights(sch.t1, sch, t);
  CHECK(w.alpha[0] == doctest::Approx(0.6));
  CHECK(w.beta[1] == doctest::Approx(0.4 * 1.5));
  CHECK(w.gamma == doctest::Approx(0.5));
  CHECK(w.delta[0] == doctest::Approx(0.075));
  CHECK(sch.stage(sch.t1 - 1) == 1);
  CHECK(sch.stage(sch.t1) == 2);
}

TEST_CASE("monotone approach never activates") {
  DeadZoneTracker t;
  for (int k = 0; k < 200; ++k) {
    t = deadzone_update(t, 0.5 - 0.002 * k, false, 0.0);
    CHECK_FALSE(t.active);
  }
}

TEST_CASE("regression trace activates then expires") {
  DeadZoneTracker t;
  t.params.window = 5;
  t = deadzone_update(t, 0.10, false, 0.0);
  t = deadzone_update(t, 0.05, false, 0.0);
  CHECK(t.best_d_mid == 0.05);
  t = deadzone_update(t, 0.05 + t.params.hysteresis, false, 0.0);
  CHECK_FALSE(t.active);
  t = deadzone_update(t, 0.05 + t.params.hysteresis + 1e-6, false, 0.0);
  CHECK(t.active);
  CHECK(t.remaining == 5);
  for (int k = 0; k < 4; ++k) {
    t = deadzone_update(t, 0.2, false, 0.0);
    CHECK(t.active);
  }
  t = deadzone_update(t, 0.2, false, 0.0);
  CHECK_FALSE(t.active);
}

TEST_CASE("grasp or task reward clears the flag") {
  DeadZoneTracker t;
  t = deadzone_update(t, 0.05, false, 0.0);
  t = deadzone_update(t, 0.2, false, 0.0);
  REQUIRE(t.active);
  DeadZoneTracker g = deadzone_update(t, 0.2, true, 0.0);
  CHECK_FALSE(g.active);
  CHECK(std::isinf(g.best_d_mid));
  DeadZoneTracker r = deadzone_update(t, 0.2, false, 2.0);
  CHECK_FALSE(r.active);
  DeadZoneTracker fresh;
  CHECK_FALSE(deadzone_update(fresh, 0.3, false, 1.0).active);
}

TEST_CASE("dead zone never moves the stage boundary") {
  CurriculumSchedule sch;
  sch.t1 = 10;
  DeadZoneTracker t;
  t.active = true;
  t.remaining = 3;
  for (long step = 0; step < 20; ++step) {
    const RewardWeightSet w = schedule_weights(step, sch, t);
    const RewardWeightSet& base = step < 10 ? sch.stage1 : sch.stage2;
    CHECK(w.alpha[0] == doctest::Approx(base.alpha[0] * t.params.k_up));
    CHECK(w.gamma == doctest::Approx(base.gamma * t.params.k_down));
  }
}

TEST_CASE("parameter validation") {
  DeadZoneParams p;
  p.k_up = 0.9;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = DeadZoneParams();
  p.k_down = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = DeadZoneParams();
  p.window = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CurriculumSchedule c = constant_schedule(default_stage2_weights());
  CHECK(schedule_weights(0, c, DeadZoneTracker{}) == default_stage2_weights());
  CHECK(c.stage(1000000) == 1);
}

}  // TEST_SUITE
