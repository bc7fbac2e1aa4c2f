#pragma once

// Experiment harness: training with metrics/checkpoint output, deterministic
// evaluation, activation-rate measurement and the four-arm comparison.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spikegrasp/config.hpp"
#include "spikegrasp/energy.hpp"
#include "spikegrasp/network.hpp"

namespace spikegrasp {

struct EpisodeRecord {
  int episode = 0;
  Eigen::Vector3d cube = Eigen::Vector3d::Zero();
  long steps = 0;
  double reward = 0.0;  // undiscounted episodic sum
  bool success = false;
  bool reached = false;  // grasp point held within the reach threshold
  double final_d_mid = 0.0;
};

struct EvalResult {
  std::vector<EpisodeRecord> episodes;
  double success_rate = 0.0;
  double reach_rate = 0.0;
  double mean_reward = 0.0;
  Eigen::MatrixXd observations;  // normalized observations seen, one per row
};

// Runs `episodes` deterministic episodes (action = policy mean) in parallel
// with the dead-zone reweighting disabled. Cube positions come from the
// "eval" substream of `seed`, so every call with the same seed sees the same
// cubes. Rewards use the curriculum weights at `global_update`.
EvalResult evaluate(const ActorCritic& agent, const TaskConfig& task,
                    int episodes, std::uint64_t seed, long global_update = 0);

void write_episodes_csv(std::ostream& out, const EvalResult& result);

struct MeasuredRates {
  long batch = 0;
  // SNN: input-layer spike rate and output membrane activation rate.
  double r = 0.0;
  double r_mem = 0.0;
  // ANN: positive-input and positive-hidden fractions.
  double r_in = 0.0;
  double r_out = 0.0;
};

// Activation statistics of the actor over a batch of normalized observations.
MeasuredRates measure_rates(const ActorCritic& agent, const Eigen::MatrixXd& obs);

struct MetricsRow {
  long update = 0;  // 1-based
  long global_env_steps = 0;
  double mean_reward = 0.0;  // per environment step
  double success_rate = 0.0;  // over training episodes finished this update
  double reach_rate = 0.0;
  std::optional<double> eval_success_rate;
  std::optional<double> eval_reach_rate;
  std::optional<double> eval_mean_reward;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double spike_rate_r = 0.0;  // SNN spike rate, ANN hidden activity
  double r_prox_align = 0.0;
  double r_grip_geom = 0.0;
  double r_task = 0.0;
  double r_pose = 0.0;
  double p_pose = 0.0;
  int stage = 1;
  double deadzone_fraction = 0.0;
  long train_episodes = 0;
  long train_successes = 0;
  long train_reached = 0;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

struct TrainOptions {
  std::optional<long> updates;  // overrides ppo.total_updates
  std::function<void(const MetricsRow&)> on_row;
};

struct TrainResult {
  std::vector<MetricsRow> rows;
  ActorCritic agent;
  std::filesystem::path output_dir;
  std::filesystem::path checkpoint;
};

// Writes config.yaml, metrics.csv (one row per update, flushed as written),
// checkpoints and optionally spawns.csv / trajectory.csv under
// cfg.output_dir. On failure the rows written so far stay on disk.
TrainResult train(const ExperimentConfig& cfg, const TrainOptions& options = {});

// Mean training reward over the last tenth of the updates (at least one).
double final_mean_reward(const std::vector<MetricsRow>& rows);

struct ArmRun {
  ModelKind model = ModelKind::kSnn;
  TrainingKind training = TrainingKind::kCrl;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<MetricsRow> rows;
};

std::string arm_name(ModelKind model, TrainingKind training);

struct CompareResult {
  std::vector<ArmRun> runs;
};

// Trains {snn, ann} x {vanilla, crl} for every seed, each under
// out_dir/<arm>/seed_<n>, and writes compare_runs.csv, compare_curves.csv
// and compare_summary.csv into out_dir. A failing run is recorded and the
// rest continue.
CompareResult compare(const ExperimentConfig& base,
                      const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& out_dir,
                      const TrainOptions& options = {});

}  // namespace spikegrasp
