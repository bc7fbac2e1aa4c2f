#include "spikegrasp/reward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spikegrasp::reward {
namespace {

template <std::size_t N>
void require_positive(const std::array<double, N>& a, const char* what) {
  for (double v : a) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be > 0");
  }
}

template <std::size_t N>
void require_nonnegative(const std::array<double, N>& a, const char* what) {
  for (double v : a) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument(std::string(what) + " must be >= 0");
    }
  }
}

double falloff(double scale, double distance) {
  return 1.0 - std::tanh(scale * distance);
}

}  // namespace

void RewardScales::validate() const {
  require_positive(kappa, "kappa");
  require_positive(xi, "xi");
  require_positive(theta, "theta");
  if (!(success_reward > 0.0) || !(penalty_scale > 0.0)) {
    throw std::invalid_argument("success reward and penalty scale must be > 0");
  }
}

void RewardWeightSet::validate() const {
  require_nonnegative(alpha, "alpha");
  require_nonnegative(beta, "beta");
  require_nonnegative(delta, "delta");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
}

RewardWeightSet default_stage1_weights() {
  return {{0.5, 0.3, 0.3, 0.2}, {0.05, 0.05, 0.05}, 0.2, {0.3, 0.3}};
}

RewardWeightSet default_stage2_weights() {
  return {{0.2, 0.15, 0.15, 0.1}, {0.4, 0.4, 0.4}, 1.0, {0.15, 0.15}};
}

void CurriculumSchedule::validate() const {
  if (t1 <= 0) throw std::invalid_argument("curriculum T1 must be > 0");
  stage1.validate();
  stage2.validate();
}

CurriculumSchedule constant_schedule(const RewardWeightSet& weights) {
  CurriculumSchedule s;
  s.t1 = std::numeric_limits<long>::max();  // never leaves stage I
  s.stage1 = weights;
  s.stage2 = weights;
  return s;
}

void DeadZoneParams::validate() const {
  if (!(hysteresis >= 0.0)) {
    throw std::invalid_argument("dead-zone hysteresis must be >= 0");
  }
  if (window < 1) throw std::invalid_argument("dead-zone window must be >= 1");
  if (!(k_up >= 1.0)) throw std::invalid_argument("dead-zone k_up must be >= 1");
  if (!(k_down > 0.0 && k_down <= 1.0)) {
    throw std::invalid_argument("dead-zone k_down must lie in (0, 1]");
  }
}

DeadZoneTracker deadzone_update(const DeadZoneTracker& tracker, double d_mid,
                                bool grasped, double r_task) {
  DeadZoneTracker next = tracker;
  if (grasped || r_task > 0.0) {
    next.reset();
    return next;
  }
  if (next.active) {
    next.best_d_mid = std::min(next.best_d_mid, d_mid);
    if (--next.remaining <= 0) {
      // Re-arm relative to where the gripper is now.
      next.active = false;
      next.remaining = 0;
      next.best_d_mid = d_mid;
    }
    return next;
  }
  if (d_mid > next.best_d_mid + next.params.hysteresis) {
    next.active = true;
    next.remaining = next.params.window;
  }
  next.best_d_mid = std::min(next.best_d_mid, d_mid);
  return next;
}

RewardWeightSet schedule_weights(long global_step,
                                 const CurriculumSchedule& schedule,
                                 const DeadZoneTracker& tracker) {
  RewardWeightSet w =
      schedule.stage(global_step) == 1 ? schedule.stage1 : schedule.stage2;
  if (!tracker.active) return w;
  const double up = tracker.params.k_up;
  const double down = tracker.params.k_down;
  for (double& a : w.alpha) a *= up;
  for (double& b : w.beta) b *= up;
  w.gamma *= down;
  for (double& d : w.delta) d *= down;
  return w;
}

double prox_align_reward(const arm::GeometryFeatures& g,
                         const RewardWeightSet& w, const RewardScales& s) {
  return w.alpha[0] * falloff(s.kappa[0], (g.d + g.d_lf + g.d_rf) / 3.0) +
         w.alpha[1] * falloff(s.kappa[1], g.d_align) +
         w.alpha[2] * falloff(s.kappa[2], g.d_mid) +
         w.alpha[3] * falloff(s.kappa[3], g.dx + g.dy);
}

double grip_geom_reward(const arm::GeometryFeatures& g,
                        const RewardWeightSet& w, const RewardScales& s) {
  return w.beta[0] * falloff(s.xi[0], std::abs(g.z_lf - g.z_rf)) +
         w.beta[1] * falloff(s.xi[1], std::abs(g.z_mid - g.z_cube)) +
         w.beta[2] * std::exp(-s.xi[2] * std::abs(g.g - g.g_opt));
}

double task_reward(bool grasped, double gamma, double success_reward) {
  return grasped ? gamma * success_reward : 0.0;
}

double verticality(const Eigen::Quaterniond& q) {
  // Third row, third column of the rotation matrix.
  const double zz = 1.0 - 2.0 * (q.x() * q.x() + q.y() * q.y());
  return std::min(1.0, std::abs(zz));
}

PoseTerms pose_reward_and_penalty(const arm::GeometryFeatures& g,
                                  const Eigen::Quaterniond& q_eef,
                                  const RewardWeightSet& w,
                                  const RewardScales& s) {
  if (std::abs(q_eef.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("end-effector quaternion is not unit norm");
  }
  const double nu_z = verticality(q_eef);
  PoseTerms out;
  out.reward = w.delta[0] * nu_z + w.delta[1] * falloff(s.theta[0], g.eps_xy);
  out.penalty = s.theta[1] * g.eps_xy * s.penalty_scale -
                s.theta[2] * (1.0 - nu_z) * s.penalty_scale;
  return out;
}

RewardBreakdown total_reward(const arm::GeometryFeatures& g,
                             const Eigen::Quaterniond& q_eef,
                             const RewardWeightSet& w, const RewardScales& s) {
  RewardBreakdown b;
  b.prox_align = prox_align_reward(g, w, s);
  b.grip_geom = grip_geom_reward(g, w, s);
  b.task = task_reward(g.grasped, w.gamma, s.success_reward);
  const PoseTerms pose = pose_reward_and_penalty(g, q_eef, w, s);
  b.pose = pose.reward;
  b.penalty = pose.penalty;
  b.total = b.prox_align + b.grip_geom + b.task + b.pose + b.penalty;
  return b;
}

}  // namespace spikegrasp::reward
