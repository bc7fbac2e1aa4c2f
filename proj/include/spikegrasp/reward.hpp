#pragma once

// Composite grasping reward and its two-stage curriculum.
//
//   r = r_prox_align + r_grip_geom + r_task + r_pose + p_pose
//
// Weights (alpha, beta, gamma, delta) depend on the global update counter:
// stage I before T1, stage II from T1 on. A per-environment dead-zone
// tracker temporarily boosts alignment terms (alpha, beta) and damps grasp
// terms (gamma, delta) when the grasp point drifts away from the cube after
// having been close, without moving T1.

#include <array>
#include <limits>

#include <Eigen/Geometry>

#include "spikegrasp/arm_env.hpp"

namespace spikegrasp::reward {

struct RewardScales {
  std::array<double, 4> kappa{3.0, 5.0, 5.0, 5.0};
  std::array<double, 3> xi{20.0, 20.0, 30.0};
  std::array<double, 3> theta{10.0, 0.5, 0.5};
  double success_reward = 10.0;  // varsigma
  double penalty_scale = 1.0;    // lambda of the pose penalty

  void validate() const;
};

struct RewardWeightSet {
  std::array<double, 4> alpha{};
  std::array<double, 3> beta{};
  double gamma = 0.0;
  std::array<double, 2> delta{};

  void validate() const;
  bool operator==(const RewardWeightSet&) const = default;
};

RewardWeightSet default_stage1_weights();
RewardWeightSet default_stage2_weights();

struct CurriculumSchedule {
  long t1 = 2000;  // first global update of stage II
  RewardWeightSet stage1 = default_stage1_weights();
  RewardWeightSet stage2 = default_stage2_weights();

  int stage(long global_step) const { return global_step < t1 ? 1 : 2; }
  void validate() const;
};

// A constant schedule: the same weight set at every step.
CurriculumSchedule constant_schedule(const RewardWeightSet& weights);

struct DeadZoneParams {
  double hysteresis = 0.02;  // m above the best d_mid that counts as drift
  int window = 50;           // control steps the reweighting stays active
  double k_up = 1.5;
  double k_down = 0.5;

  void validate() const;
};

struct DeadZoneTracker {
  DeadZoneParams params;
  double best_d_mid = std::numeric_limits<double>::infinity();
  bool active = false;
  int remaining = 0;

  void reset() {
    best_d_mid = std::numeric_limits<double>::infinity();
    active = false;
    remaining = 0;
  }
};

// Advances the tracker by one control step.
DeadZoneTracker deadzone_update(const DeadZoneTracker& tracker, double d_mid,
                                bool grasped, double r_task);

RewardWeightSet schedule_weights(long global_step,
                                 const CurriculumSchedule& schedule,
                                 const DeadZoneTracker& tracker);

struct RewardBreakdown {
  double prox_align = 0.0;
  double grip_geom = 0.0;
  double task = 0.0;
  double pose = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

double prox_align_reward(const arm::GeometryFeatures& g,
                         const RewardWeightSet& w, const RewardScales& s);
double grip_geom_reward(const arm::GeometryFeatures& g,
                        const RewardWeightSet& w, const RewardScales& s);
double task_reward(bool grasped, double gamma, double success_reward);

struct PoseTerms {
  double reward = 0.0;
  double penalty = 0.0;
};

// q_eef must be unit norm within 1e-6 (throws std::invalid_argument).
PoseTerms pose_reward_and_penalty(const arm::GeometryFeatures& g,
                                  const Eigen::Quaterniond& q_eef,
                                  const RewardWeightSet& w,
                                  const RewardScales& s);

// |(R(q) * z)_z|
double verticality(const Eigen::Quaterniond& q);

RewardBreakdown total_reward(const arm::GeometryFeatures& g,
                             const Eigen::Quaterniond& q_eef,
                             const RewardWeightSet& w, const RewardScales& s);

}  // namespace spikegrasp::reward
