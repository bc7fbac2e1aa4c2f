#pragma once

// Vectorized kinematic reach-and-grasp environment.
//
// The arm is a 6-joint serial chain (base yaw, shoulder pitch, elbow pitch,
// wrist roll/pitch/yaw) with a coupled parallel gripper. Actions are 7-dim:
// a translational and a rotational twist of the grasp point (tool frame
// origin between the fingertips), plus a gripper opening rate. Twists are
// mapped to joint deltas with damped least squares. There are no dynamics
// or contacts; grasp success is purely geometric.
//
// Home pose (q = 0): flange at (0.40, 0, 0.17) m with the approach axis
// pointing straight down, grasp point at (0.40, 0, 0.125) m.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "spikegrasp/encoding.hpp"
#include "spikegrasp/rng.hpp"

namespace spikegrasp::arm {

inline constexpr int kNumJoints = 6;
inline constexpr int kActionDim = 7;
inline constexpr int kObservationDim = 18;

using JointVector = Eigen::Matrix<double, kNumJoints, 1>;

struct ChainGeometry {
  static constexpr double kShoulderHeight = 0.60;
  static constexpr double kUpperArm = 0.40;
  static constexpr double kForearm = 0.35;
  static constexpr double kWristToFlange = 0.08;
  static constexpr double kFingerLength = 0.045;
  static constexpr double kMaxGap = 0.08;
};

const JointVector& joint_lower_limits();
const JointVector& joint_upper_limits();

struct Box {
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Zero();
  bool contains(const Eigen::Vector3d& p) const;
};

struct EnvConfig {
  int num_envs = 64;
  int episode_length = 300;
  Box spawn{{0.30, -0.15, 0.025}, {0.50, 0.15, 0.025}};
  Box workspace{{0.0, -0.4, -0.1}, {0.8, 0.4, 0.5}};
  double cube_edge = 0.05;
  double gap_allowance = 0.004;  // g* = cube_edge + gap_allowance
  double tau_finger = 0.03;
  double tau_gap = 0.01;
  double tau_align = 0.02;
  double max_joint_step = 0.05;    // rad per control step
  double max_linear_step = 0.01;   // m per step at |action| = 1
  double max_angular_step = 0.05;  // rad per step at |action| = 1
  double gripper_rate = 0.005;     // m per step at |action| = 1
  double ik_damping = 0.05;
  double initial_gap = ChainGeometry::kMaxGap;
  double reach_threshold = 0.05;   // d_mid below this counts as reached
  int reach_hold_steps = 10;
  bool delta_observation = true;   // false: delta and d_mid features zeroed
  std::uint64_t seed = 0;

  double optimal_gap() const { return cube_edge + gap_allowance; }
  // Throws std::invalid_argument.
  void validate() const;
};

struct Kinematics {
  Eigen::Vector3d flange;
  Eigen::Quaterniond orientation;  // tool frame; z = approach, y = lateral
  Eigen::Matrix3d rotation;
  Eigen::Vector3d midpoint;        // grasp point between the fingertips
  Eigen::Vector3d left_finger;
  Eigen::Vector3d right_finger;
};

Kinematics forward_kinematics(const JointVector& q, double gap);

// Geometric Jacobian (rows: linear velocity of the grasp point, angular
// velocity) in the world frame.
Eigen::Matrix<double, 6, 6> grasp_point_jacobian(const JointVector& q);

struct ArmState {
  JointVector q = JointVector::Zero();
  double gap = ChainGeometry::kMaxGap;
  Eigen::Vector3d cube = Eigen::Vector3d::Zero();
  int step = 0;
  // Derived from q and gap; refreshed by refresh().
  Eigen::Vector3d eef = Eigen::Vector3d::Zero();  // grasp point
  Eigen::Quaterniond q_eef = Eigen::Quaterniond::Identity();

  void refresh();
};

struct GeometryFeatures {
  double d = 0, d_lf = 0, d_rf = 0;
  double d_align = 0, d_mid = 0;
  double dx = 0, dy = 0;  // absolute axis offsets
  double z_lf = 0, z_rf = 0, z_mid = 0, z_cube = 0;
  double g = 0, g_opt = 0;
  double eps_xy = 0;
  double nu_z = 0;
  bool grasped = false;
};

GeometryFeatures compute_geometry(const ArmState& state, const EnvConfig& cfg);

// Strict inequalities on every threshold.
bool grasp_check(const GeometryFeatures& geom, const EnvConfig& cfg);

// Raw (unnormalized) observation:
//   [q (6), grasp point (3), cube (3), cube - grasp point (3), gap, nu_z, d_mid]
Eigen::VectorXd build_observation(const ArmState& state,
                                  const GeometryFeatures& geom,
                                  const EnvConfig& cfg);

encoding::NormalizationBounds observation_bounds(const EnvConfig& cfg);

struct StepInfo {
  bool joint_clamped = false;
  bool success = false;
  bool truncated = false;
  int reach_streak = 0;  // consecutive steps with d_mid < reach_threshold
};

struct BatchStep {
  Eigen::MatrixXd observations;  // num_envs x 18, raw
  std::vector<GeometryFeatures> geometry;
  std::vector<std::uint8_t> done;
  std::vector<StepInfo> info;
};

class ArmEnvBatch {
 public:
  // Environment i draws spawns from substream ("env", first_env_index + i)
  // of cfg.seed, so a batch steps identically to the same environments run
  // one at a time.
  explicit ArmEnvBatch(const EnvConfig& cfg, int first_env_index = 0);

  int size() const { return static_cast<int>(states_.size()); }
  const EnvConfig& config() const { return cfg_; }

  Eigen::MatrixXd reset_all();
  // Returns the new raw observations, one row per index.
  Eigen::MatrixXd reset(std::span<const int> indices);

  // actions: num_envs x 7 in [-1, 1]. Done environments are not reset here.
  BatchStep step(const Eigen::MatrixXd& actions);

  const ArmState& state(int i) const { return states_[i]; }
  void set_state(int i, const ArmState& s);
  GeometryFeatures geometry(int i) const;
  Eigen::VectorXd observation(int i) const;
  long spawn_count(int i) const { return spawns_[i]; }

 private:
  void reset_one(int i);

  EnvConfig cfg_;
  std::vector<ArmState> states_;
  std::vector<Rng> rngs_;
  std::vector<int> reach_streak_;
  std::vector<long> spawns_;
};

}  // namespace spikegrasp::arm
