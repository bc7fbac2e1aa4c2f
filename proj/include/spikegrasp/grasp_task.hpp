#pragma once

#include <array>
#include <ostream>
#include <vector>

#include "spikegrasp/arm_env.hpp"
#include "spikegrasp/ppo.hpp"
#include "spikegrasp/reward.hpp"

namespace spikegrasp {

struct TaskConfig {
  arm::EnvConfig env;
  reward::RewardScales scales;
  reward::CurriculumSchedule schedule;
  reward::DeadZoneParams deadzone;
  bool deadzone_enabled = true;

  void validate() const;
};

// Sums over the steps taken since the last take_stats() call.
struct TaskStats {
  long steps = 0;
  double reward = 0.0;
  double prox_align = 0.0;
  double grip_geom = 0.0;
  double task = 0.0;
  double pose = 0.0;
  double penalty = 0.0;
  long deadzone_active = 0;
  long episodes = 0;
  long successes = 0;
  long reached = 0;  // finished episodes that met the reach criterion
};

struct SpawnRecord {
  int env = 0;
  long spawn = 0;  // 1-based spawn count of that environment
  Eigen::Vector3d cube;
};

// CSV dump of per-step geometry and reward components.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out);
  void write(long step, int env, const arm::GeometryFeatures& g,
             const reward::RewardBreakdown& r);

 private:
  std::ostream& out_;
};

// Arm environment batch with the curriculum reward attached. Rewards use the
// weight set for the current global update, modulated per environment by its
// dead-zone tracker.
class GraspTask : public ppo::VecEnv {
 public:
  explicit GraspTask(const TaskConfig& cfg, int first_env_index = 0);

  int num_envs() const override { return env_.size(); }
  int observation_dim() const override { return arm::kObservationDim; }
  int action_dim() const override { return arm::kActionDim; }
  const encoding::NormalizationBounds& observation_bounds() const override {
    return bounds_;
  }
  Eigen::MatrixXd reset_all() override;
  Eigen::VectorXd reset_env(int i) override;
  ppo::EnvStep step(const Eigen::MatrixXd& actions) override;
  void set_global_update(long update) override { global_update_ = update; }

  long global_update() const { return global_update_; }
  int stage() const { return cfg_.schedule.stage(global_update_); }
  TaskStats take_stats();

  const arm::ArmEnvBatch& arm_env() const { return env_; }
  arm::ArmEnvBatch& arm_env() { return env_; }
  const reward::DeadZoneTracker& tracker(int i) const { return trackers_[i]; }
  const arm::BatchStep& last_step() const { return last_step_; }
  const std::vector<reward::RewardBreakdown>& last_rewards() const {
    return last_rewards_;
  }

  void set_trajectory_writer(TrajectoryWriter* writer) { writer_ = writer; }
  void set_spawn_log(std::vector<SpawnRecord>* log) { spawn_log_ = log; }

 private:
  void log_spawn(int i);

  TaskConfig cfg_;
  arm::ArmEnvBatch env_;
  encoding::NormalizationBounds bounds_;
  std::vector<reward::DeadZoneTracker> trackers_;
  std::vector<std::uint8_t> reached_;
  long global_update_ = 0;
  long step_counter_ = 0;
  TaskStats stats_;
  arm::BatchStep last_step_;
  std::vector<reward::RewardBreakdown> last_rewards_;
  TrajectoryWriter* writer_ = nullptr;
  std::vector<SpawnRecord>* spawn_log_ = nullptr;
};

}  // namespace spikegrasp
