#include "spikegrasp/arm_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spikegrasp/error.hpp"

namespace spikegrasp::arm {
namespace {

using Eigen::AngleAxisd;
using Eigen::Isometry3d;
using Eigen::Vector3d;

struct ChainPose {
  Isometry3d flange;
  std::array<Vector3d, kNumJoints> axes;
  std::array<Vector3d, kNumJoints> origins;
};

ChainPose chain_pose(const JointVector& q) {
  using G = ChainGeometry;
  ChainPose out;
  Isometry3d f = Isometry3d::Identity();
  auto joint = [&](int i, const Vector3d& local_axis) {
    out.axes[i] = f.linear() * local_axis;
    out.origins[i] = f.translation();
    f.rotate(AngleAxisd(q[i], local_axis));
  };
  joint(0, Vector3d::UnitZ());
  f.translate(Vector3d(0, 0, G::kShoulderHeight));
  joint(1, Vector3d::UnitY());
  f.translate(Vector3d(G::kUpperArm, 0, 0));
  joint(2, Vector3d::UnitY());
  f.translate(Vector3d(0, 0, -G::kForearm));
  joint(3, Vector3d::UnitX());
  joint(4, Vector3d::UnitY());
  f.translate(Vector3d(0, 0, -G::kWristToFlange));
  joint(5, Vector3d::UnitZ());
  // Tool frame: approach axis (z) points down at home.
  f.rotate(AngleAxisd(std::numbers::pi, Vector3d::UnitX()));
  out.flange = f;
  return out;
}

}  // namespace

const JointVector& joint_lower_limits() {
  static const JointVector lo =
      (JointVector() << -2.8, -1.5, -2.0, -1.5, -1.5, -2.8).finished();
  return lo;
}

const JointVector& joint_upper_limits() {
  static const JointVector hi =
      (JointVector() << 2.8, 1.5, 2.0, 1.5, 1.5, 2.8).finished();
  return hi;
}

bool Box::contains(const Eigen::Vector3d& p) const {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

void EnvConfig::validate() const {
  if (num_envs < 1) throw std::invalid_argument("num_envs must be >= 1");
  if (episode_length < 1) {
    throw std::invalid_argument("episode_length must be >= 1");
  }
  if ((spawn.hi.array() < spawn.lo.array()).any()) {
    throw std::invalid_argument("spawn box has max < min");
  }
  if (!workspace.contains(spawn.lo) || !workspace.contains(spawn.hi)) {
    throw std::invalid_argument("spawn region must lie inside the workspace");
  }
  if (!(cube_edge > 0.0) || !(gap_allowance >= 0.0)) {
    throw std::invalid_argument("cube edge must be positive");
  }
  if (optimal_gap() > ChainGeometry::kMaxGap) {
    throw std::invalid_argument("optimal gap exceeds the gripper opening");
  }
  if (!(tau_finger > 0) || !(tau_gap > 0) || !(tau_align > 0)) {
    throw std::invalid_argument("grasp thresholds must be positive");
  }
  if (!(max_joint_step > 0) || !(max_linear_step > 0) ||
      !(max_angular_step > 0) || !(gripper_rate > 0) || !(ik_damping > 0)) {
    throw std::invalid_argument("step sizes and IK damping must be positive");
  }
  if (initial_gap < 0 || initial_gap > ChainGeometry::kMaxGap) {
    throw std::invalid_argument("initial_gap outside [0, max gap]");
  }
  if (!(reach_threshold > 0) || reach_hold_steps < 1) {
    throw std::invalid_argument("reach criterion must be positive");
  }
}

Kinematics forward_kinematics(const JointVector& q, double gap) {
  const ChainPose pose = chain_pose(q);
  Kinematics k;
  k.rotation = pose.flange.linear();
  k.orientation = Eigen::Quaterniond(k.rotation).normalized();
  k.flange = pose.flange.translation();
  const Vector3d approach = k.rotation.col(2);
  const Vector3d lateral = k.rotation.col(1);
  k.midpoint = k.flange + ChainGeometry::kFingerLength * approach;
  k.left_finger = k.midpoint + 0.5 * gap * lateral;
  k.right_finger = k.midpoint - 0.5 * gap * lateral;
  return k;
}

Eigen::Matrix<double, 6, 6> grasp_point_jacobian(const JointVector& q) {
  const ChainPose pose = chain_pose(q);
  const Vector3d tip = pose.flange.translation() +
                       ChainGeometry::kFingerLength * pose.flange.linear().col(2);
  Eigen::Matrix<double, 6, 6> j;
  for (int i = 0; i < kNumJoints; ++i) {
    j.block<3, 1>(0, i) = pose.axes[i].cross(tip - pose.origins[i]);
    j.block<3, 1>(3, i) = pose.axes[i];
  }
  return j;
}

void ArmState::refresh() {
  const Kinematics k = forward_kinematics(q, gap);
  eef = k.midpoint;
  q_eef = k.orientation;
}

GeometryFeatures compute_geometry(const ArmState& state, const EnvConfig& cfg) {
  const Kinematics k = forward_kinematics(state.q, state.gap);
  GeometryFeatures g;
  const Vector3d delta = state.cube - k.midpoint;
  g.d = delta.norm();
  g.d_mid = g.d;
  g.d_lf = (state.cube - k.left_finger).norm();
  g.d_rf = (state.cube - k.right_finger).norm();
  g.eps_xy = std::hypot(delta.x(), delta.y());
  g.d_align = g.eps_xy;
  g.dx = std::abs(delta.x());
  g.dy = std::abs(delta.y());
  g.z_lf = k.left_finger.z();
  g.z_rf = k.right_finger.z();
  g.z_mid = k.midpoint.z();
  g.z_cube = state.cube.z();
  g.g = state.gap;
  g.g_opt = cfg.optimal_gap();
  g.nu_z = std::min(1.0, std::abs(k.rotation(2, 2)));
  g.grasped = grasp_check(g, cfg);
  return g;
}

bool grasp_check(const GeometryFeatures& geom, const EnvConfig& cfg) {
  return geom.d_lf < cfg.tau_finger && geom.d_rf < cfg.tau_finger &&
         std::abs(geom.g - geom.g_opt) < cfg.tau_gap &&
         geom.eps_xy < cfg.tau_align;
}

Eigen::VectorXd build_observation(const ArmState& state,
                                  const GeometryFeatures& geom,
                                  const EnvConfig& cfg) {
  Eigen::VectorXd obs(kObservationDim);
  obs.segment<6>(0) = state.q;
  obs.segment<3>(6) = state.eef;
  obs.segment<3>(9) = state.cube;
  if (cfg.delta_observation) {
    obs.segment<3>(12) = state.cube - state.eef;
  } else {
    obs.segment<3>(12).setZero();
  }
  obs[15] = state.gap;
  obs[16] = geom.nu_z;
  obs[17] = cfg.delta_observation ? geom.d_mid : 0.0;
  return obs;
}

encoding::NormalizationBounds observation_bounds(const EnvConfig& cfg) {
  std::vector<double> lo, hi;
  const JointVector& qlo = joint_lower_limits();
  const JointVector& qhi = joint_upper_limits();
  for (int i = 0; i < kNumJoints; ++i) {
    lo.push_back(qlo[i]);
    hi.push_back(qhi[i]);
  }
  for (int a = 0; a < 3; ++a) {
    lo.push_back(cfg.workspace.lo[a]);
    hi.push_back(cfg.workspace.hi[a]);
  }
  constexpr double kSpawnMargin = 0.05;
  for (int a = 0; a < 3; ++a) {
    lo.push_back(cfg.spawn.lo[a] - kSpawnMargin);
    hi.push_back(cfg.spawn.hi[a] + kSpawnMargin);
  }
  constexpr double kDeltaRange = 0.3;
  for (int a = 0; a < 3; ++a) {
    lo.push_back(-kDeltaRange);
    hi.push_back(kDeltaRange);
  }
  lo.push_back(0.0);
  hi.push_back(ChainGeometry::kMaxGap);
  lo.push_back(0.0);
  hi.push_back(1.0);
  lo.push_back(0.0);
  hi.push_back(0.5);
  return encoding::NormalizationBounds(std::move(lo), std::move(hi));
}

ArmEnvBatch::ArmEnvBatch(const EnvConfig& cfg, int first_env_index)
    : cfg_(cfg) {
  cfg_.validate();
  states_.resize(cfg_.num_envs);
  reach_streak_.assign(cfg_.num_envs, 0);
  spawns_.assign(cfg_.num_envs, 0);
  rngs_.reserve(cfg_.num_envs);
  for (int i = 0; i < cfg_.num_envs; ++i) {
    rngs_.push_back(make_rng(cfg_.seed, "env", first_env_index + i));
  }
}

void ArmEnvBatch::reset_one(int i) {
  ArmState& s = states_[i];
  s.q.setZero();
  s.gap = cfg_.initial_gap;
  s.step = 0;
  for (int a = 0; a < 3; ++a) {
    const double lo = cfg_.spawn.lo[a];
    const double hi = cfg_.spawn.hi[a];
    s.cube[a] =
        hi > lo ? std::uniform_real_distribution<double>(lo, hi)(rngs_[i]) : lo;
  }
  s.refresh();
  reach_streak_[i] = 0;
  ++spawns_[i];
}

Eigen::MatrixXd ArmEnvBatch::reset_all() {
  std::vector<int> all(size());
  for (int i = 0; i < size(); ++i) all[i] = i;
  return reset(all);
}

Eigen::MatrixXd ArmEnvBatch::reset(std::span<const int> indices) {
  Eigen::MatrixXd obs(static_cast<Eigen::Index>(indices.size()),
                      kObservationDim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int i = indices[r];
    if (i < 0 || i >= size()) throw std::out_of_range("environment index");
    reset_one(i);
    obs.row(static_cast<Eigen::Index>(r)) = observation(i).transpose();
  }
  return obs;
}

void ArmEnvBatch::set_state(int i, const ArmState& s) {
  states_.at(i) = s;
  states_[i].refresh();
  reach_streak_[i] = 0;
}

GeometryFeatures ArmEnvBatch::geometry(int i) const {
  return compute_geometry(states_.at(i), cfg_);
}

Eigen::VectorXd ArmEnvBatch::observation(int i) const {
  return build_observation(states_.at(i), geometry(i), cfg_);
}

BatchStep ArmEnvBatch::step(const Eigen::MatrixXd& actions) {
  if (actions.rows() != size() || actions.cols() != kActionDim) {
    throw ShapeError("actions must be num_envs x 7");
  }
  if (!actions.allFinite()) throw NumericalError("non-finite action");

  BatchStep out;
  out.observations.resize(size(), kObservationDim);
  out.geometry.resize(size());
  out.done.assign(size(), 0);
  out.info.resize(size());

  const JointVector& qlo = joint_lower_limits();
  const JointVector& qhi = joint_upper_limits();
  const double mu2 = cfg_.ik_damping * cfg_.ik_damping;

  for (int i = 0; i < size(); ++i) {
    ArmState& s = states_[i];
    StepInfo& info = out.info[i];
    const Eigen::Matrix<double, 7, 1> a =
        actions.row(i).transpose().cwiseMax(-1.0).cwiseMin(1.0);

    Eigen::Matrix<double, 6, 1> twist;
    twist.head<3>() = cfg_.max_linear_step * a.head<3>();
    twist.tail<3>() = cfg_.max_angular_step * a.segment<3>(3);
    if (!twist.isZero(0.0)) {
      const Eigen::Matrix<double, 6, 6> j = grasp_point_jacobian(s.q);
      const Eigen::Matrix<double, 6, 6> jjt =
          j * j.transpose() + mu2 * Eigen::Matrix<double, 6, 6>::Identity();
      JointVector dq = j.transpose() * jjt.ldlt().solve(twist);
      const double largest = dq.cwiseAbs().maxCoeff();
      if (largest > cfg_.max_joint_step) dq *= cfg_.max_joint_step / largest;
      const JointVector target = s.q + dq;
      s.q = target.cwiseMax(qlo).cwiseMin(qhi);
      info.joint_clamped = (s.q.array() != target.array()).any();
    }
    s.gap = std::clamp(s.gap + a[6] * cfg_.gripper_rate, 0.0,
                       ChainGeometry::kMaxGap);
    ++s.step;
    s.refresh();

    const GeometryFeatures geom = compute_geometry(s, cfg_);
    reach_streak_[i] =
        geom.d_mid < cfg_.reach_threshold ? reach_streak_[i] + 1 : 0;
    info.reach_streak = reach_streak_[i];
    info.success = geom.grasped;
    info.truncated = !geom.grasped && s.step >= cfg_.episode_length;
    out.done[i] = (info.success || info.truncated) ? 1 : 0;
    out.geometry[i] = geom;
    out.observations.row(i) = build_observation(s, geom, cfg_).transpose();
  }
  return out;
}

}  // namespace spikegrasp::arm
