#include <cmath>

#include <doctest.h>

#include "spikegrasp/arm_env.hpp"
#include "spikegrasp/error.hpp"

using namespace spikegrasp;
using namespace spikegrasp::arm;

namespace {

EnvConfig cfg_with(int n, std::uint64_t seed = 7) {
  EnvConfig c;
  c.num_envs = n;
  c.seed = seed;
  return c;
}

JointVector random_q(Rng& rng) {
  JointVector q;
  for (int i = 0; i < kNumJoints; ++i) {
    q[i] = std::uniform_real_distribution<double>(joint_lower_limits()[i],
                                                  joint_upper_limits()[i])(rng);
  }
  return q;
}

}  // namespace

TEST_SUITE("arm_env") {

TEST_CASE("home pose") {
  const Kinematics k = forward_kinematics(JointVector::Zero(), 0.06);
  CHECK((k.flange - Eigen::Vector3d(0.40, 0.0, 0.17)).norm() < 1e-12);
  CHECK((k.midpoint - Eigen::Vector3d(0.40, 0.0, 0.125)).norm() < 1e-12);
  CHECK(k.rotation(2, 2) == doctest::Approx(-1.0));
  CHECK(std::abs(k.left_finger.z() - k.right_finger.z()) < 1e-12);
  CHECK((k.left_finger - k.right_finger).norm() == doctest::Approx(0.06));
}

TEST_CASE("finger geometry on random poses") {
  Rng rng(5);
  for (int n = 0; n < 500; ++n) {
    const JointVector q = random_q(rng);
    const double g = std::uniform_real_distribution<double>(0.0, 0.08)(rng);
    const Kinematics k = forward_kinematics(q, g);
    CHECK((k.left_finger - k.right_finger).norm() == doctest::Approx(g).epsilon(1e-9));
    CHECK(((k.left_finger + k.right_finger) / 2 - k.midpoint).norm() < 1e-12);
    const Kinematics closed = forward_kinematics(q, 0.0);
    CHECK((closed.left_finger - closed.right_finger).norm() < 1e-15);
    CHECK(std::abs(k.orientation.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("jacobian matches finite differences") {
  Rng rng(9);
  const double h = 1e-6;
  for (int n = 0; n < 20; ++n) {
    const JointVector q = random_q(rng);
    const auto j = grasp_point_jacobian(q);
    for (int i = 0; i < kNumJoints; ++i) {
      JointVector a = q, b = q;
      a[i] += h;
      b[i] -= h;
      const Eigen::Vector3d fd =
          (forward_kinematics(a, 0.0).midpoint - forward_kinematics(b, 0.0).midpoint) / (2 * h);
      CHECK((j.block<3, 1>(0, i) - fd).norm() < 1e-7);
    }
  }
}

TEST_CASE("grasp check boundaries") {
  const EnvConfig c;
  GeometryFeatures g;
  g.g = c.optimal_gap();
  g.g_opt = c.optimal_gap();
  CHECK(grasp_check(g, c));
  g.d_lf = 1.0;
  CHECK_FALSE(grasp_check(g, c));
  g.d_lf = c.tau_finger;
  CHECK_FALSE(grasp_check(g, c));
  g.d_lf = std::nextafter(c.tau_finger, 0.0);
  CHECK(grasp_check(g, c));
  g.d_rf = c.tau_finger;
  CHECK_FALSE(grasp_check(g, c));
  g.d_rf = 0.0;
  g.eps_xy = c.tau_align;
  CHECK_FALSE(grasp_check(g, c));
  g.eps_xy = 0.0;
  g.g = g.g_opt + 0.02;
  CHECK_FALSE(grasp_check(g, c));
}

TEST_CASE("analytic grasp configuration") {
  const EnvConfig c = cfg_with(1);
  ArmState s;
  s.gap = c.optimal_gap();
  s.refresh();
  s.cube = s.eef;
  const GeometryFeatures g = compute_geometry(s, c);
  CHECK(g.d_mid == 0.0);
  CHECK(g.d_lf == doctest::Approx(c.optimal_gap() / 2));
  CHECK(g.grasped);
  const Eigen::VectorXd obs = build_observation(s, g, c);
  CHECK(obs.segment<3>(12).isZero(0.0));
  CHECK(obs[17] == 0.0);
}

TEST_CASE("geometry identities on random states") {
  const EnvConfig c = cfg_with(1);
  Rng rng(11);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int n = 0; n < 2000; ++n) {
    ArmState s;
    s.q = random_q(rng);
    s.gap = 0.04;
    s.cube = Eigen::Vector3d(0.4 + u(rng), u(rng), 0.025);
    s.refresh();
    const GeometryFeatures g = compute_geometry(s, c);
    const double lhs = g.d_mid * g.d_mid;
    const double rhs = g.eps_xy * g.eps_xy + std::pow(g.z_mid - g.z_cube, 2);
    CHECK(std::abs(lhs - rhs) < 1e-9);
    CHECK(g.d_align == g.eps_xy);
    const Eigen::VectorXd obs = build_observation(s, g, c);
    REQUIRE(obs.size() == kObservationDim);
    for (int a = 0; a < 3; ++a) CHECK(obs[12 + a] == s.cube[a] - s.eef[a]);
    CHECK(obs[16] == g.nu_z);
  }
}

TEST_CASE("delta features are zeroed without delta observation") {
  EnvConfig c = cfg_with(1);
  c.delta_observation = false;
  ArmEnvBatch env(c);
  const Eigen::MatrixXd obs = env.reset_all();
  CHECK(obs.row(0).segment(12, 3).isZero(0.0));
  CHECK(obs(0, 17) == 0.0);
}

TEST_CASE("upward action raises the grasp point") {
  ArmEnvBatch env(cfg_with(1));
  env.reset_all();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, kActionDim);
  a(0, 2) = 1.0;
  double z = env.state(0).eef.z();
  for (int t = 0; t < 20; ++t) {
    env.step(a);
    const double nz = env.state(0).eef.z();
    CHECK(nz > z);
    z = nz;
  }
}

TEST_CASE("spawns stay in the spawn box and repeat per seed") {
  ArmEnvBatch env(cfg_with(100, 3));
  ArmEnvBatch twin(cfg_with(100, 3));
  for (int round = 0; round < 100; ++round) {
    env.reset_all();
    twin.reset_all();
    for (int i = 0; i < env.size(); ++i) {
      REQUIRE(env.config().spawn.contains(env.state(i).cube));
      REQUIRE(env.state(i).cube == twin.state(i).cube);
      CHECK_FALSE(env.geometry(i).grasped);
    }
  }
  CHECK(env.spawn_count(0) == 100);
}

TEST_CASE("batched stepping equals individual stepping") {
  const int n = 5;
  ArmEnvBatch batch(cfg_with(n));
  std::vector<ArmEnvBatch> singles;
  for (int i = 0; i < n; ++i) singles.emplace_back(cfg_with(1), i);
  batch.reset_all();
  for (auto& e : singles) e.reset_all();
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 60; ++t) {
    Eigen::MatrixXd a(n, kActionDim);
    for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = u(rng);
    const BatchStep bs = batch.step(a);
    for (int i = 0; i < n; ++i) {
      const BatchStep ss = singles[i].step(a.row(i));
      CHECK(bs.observations.row(i) == ss.observations.row(0));
      CHECK(bs.done[i] == ss.done[0]);
    }
  }
}

TEST_CASE("episodes truncate at the configured length") {
  EnvConfig c = cfg_with(2);
  c.episode_length = 4;
  ArmEnvBatch env(c);
  env.reset_all();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, kActionDim);
  for (int t = 0; t < 3; ++t) CHECK(env.step(a).done[0] == 0);
  const BatchStep last = env.step(a);
  CHECK(last.done[0] == 1);
  CHECK(last.info[0].truncated);
}

TEST_CASE("step validation") {
  ArmEnvBatch env(cfg_with(2));
  env.reset_all();
  CHECK_THROWS_AS(env.step(Eigen::MatrixXd::Zero(3, kActionDim)), ShapeError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, kActionDim);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(env.step(bad), NumericalError);
  EnvConfig c;
  c.num_envs = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = EnvConfig();
  c.spawn.hi.x() = 5.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

}  // TEST_SUITE
