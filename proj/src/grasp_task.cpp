#include "spikegrasp/grasp_task.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace spikegrasp {

void TaskConfig::validate() const {
  env.validate();
  scales.validate();
  schedule.validate();
  deadzone.validate();
}

TrajectoryWriter::TrajectoryWriter(std::ostream& out) : out_(out) {
  out_ << "step,env,d,d_lf,d_rf,d_align,d_mid,dx,dy,z_lf,z_rf,z_mid,z_cube,"
          "g,g_opt,eps_xy,nu_z,grasped,r_prox_align,r_grip_geom,r_task,"
          "r_pose,p_pose,r_total\n";
}

void TrajectoryWriter::write(long step, int env, const arm::GeometryFeatures& g,
                             const reward::RewardBreakdown& r) {
  fmt::print(out_,
             "{},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},"
             "{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{},{:.9g},"
             "{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n",
             step, env, g.d, g.d_lf, g.d_rf, g.d_align, g.d_mid, g.dx, g.dy,
             g.z_lf, g.z_rf, g.z_mid, g.z_cube, g.g, g.g_opt, g.eps_xy, g.nu_z,
             g.grasped ? 1 : 0, r.prox_align, r.grip_geom, r.task, r.pose,
             r.penalty, r.total);
}

GraspTask::GraspTask(const TaskConfig& cfg, int first_env_index)
    : cfg_(cfg),
      env_(cfg.env, first_env_index),
      bounds_(arm::observation_bounds(cfg.env)) {
  cfg_.validate();
  reward::DeadZoneTracker proto;
  proto.params = cfg_.deadzone;
  trackers_.assign(env_.size(), proto);
  reached_.assign(env_.size(), 0);
  last_rewards_.resize(env_.size());
}

void GraspTask::log_spawn(int i) {
  if (spawn_log_) {
    spawn_log_->push_back({i, env_.spawn_count(i), env_.state(i).cube});
  }
}

Eigen::MatrixXd GraspTask::reset_all() {
  Eigen::MatrixXd obs = env_.reset_all();
  for (int i = 0; i < env_.size(); ++i) {
    trackers_[i].reset();
    reached_[i] = 0;
    log_spawn(i);
  }
  return obs;
}

Eigen::VectorXd GraspTask::reset_env(int i) {
  const int idx[] = {i};
  Eigen::VectorXd obs = env_.reset(idx).row(0).transpose();
  trackers_[i].reset();
  reached_[i] = 0;
  log_spawn(i);
  return obs;
}

ppo::EnvStep GraspTask::step(const Eigen::MatrixXd& actions) {
  last_step_ = env_.step(actions);
  const int n = env_.size();
  ppo::EnvStep out;
  out.observations = last_step_.observations;
  out.rewards.resize(n);
  out.done = last_step_.done;
  out.success.resize(n);
  for (int i = 0; i < n; ++i) {
    const arm::GeometryFeatures& g = last_step_.geometry[i];
    const reward::RewardWeightSet w =
        reward::schedule_weights(global_update_, cfg_.schedule, trackers_[i]);
    const reward::RewardBreakdown r =
        reward::total_reward(g, env_.state(i).q_eef, w, cfg_.scales);
    last_rewards_[i] = r;
    out.rewards[i] = r.total;
    out.success[i] = last_step_.info[i].success ? 1 : 0;

    stats_.steps += 1;
    stats_.reward += r.total;
    stats_.prox_align += r.prox_align;
    stats_.grip_geom += r.grip_geom;
    stats_.task += r.task;
    stats_.pose += r.pose;
    stats_.penalty += r.penalty;
    if (trackers_[i].active) ++stats_.deadzone_active;
    if (out.success[i] ||
        last_step_.info[i].reach_streak >= cfg_.env.reach_hold_steps) {
      reached_[i] = 1;
    }
    if (out.done[i]) {
      ++stats_.episodes;
      if (out.success[i]) ++stats_.successes;
      if (reached_[i]) ++stats_.reached;
    }
    if (cfg_.deadzone_enabled) {
      trackers_[i] = reward::deadzone_update(trackers_[i], g.d_mid, g.grasped,
                                             r.task);
    }
    if (writer_) writer_->write(step_counter_, i, g, r);
  }
  ++step_counter_;
  return out;
}

TaskStats GraspTask::take_stats() {
  TaskStats s = stats_;
  stats_ = TaskStats{};
  return s;
}

}  // namespace spikegrasp
