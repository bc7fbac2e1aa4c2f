#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "spikegrasp/arm_env.hpp"
#include "spikegrasp/grasp_task.hpp"
#include "spikegrasp/network.hpp"
#include "spikegrasp/ppo.hpp"
#include "spikegrasp/reward.hpp"

namespace spikegrasp {

enum class TrainingKind { kVanilla, kCrl };

const char* to_string(TrainingKind kind);

struct EvalConfig {
  long interval = 20;  // evaluate every N updates (and after the last one)
  int episodes = 10;
};

struct OutputConfig {
  long checkpoint_interval = 0;  // 0: only the final checkpoint
  bool spawn_log = false;
  long trajectory_updates = 0;   // dump per-step CSV for the first N updates
};

// Everything needed to reproduce a training run. All randomness derives
// from `seed` through named substreams.
struct ExperimentConfig {
  ModelKind model = ModelKind::kSnn;
  TrainingKind training = TrainingKind::kCrl;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  NetworkSpec network;
  arm::EnvConfig env;
  ppo::PpoConfig ppo;
  reward::CurriculumSchedule curriculum;
  reward::RewardWeightSet vanilla_weights = reward::default_stage1_weights();
  bool vanilla_delta_observation = false;
  reward::RewardScales scales;
  reward::DeadZoneParams deadzone;
  bool deadzone_enabled = true;
  EvalConfig eval;
  OutputConfig output;

  ExperimentConfig();

  // Throws ConfigError.
  void validate() const;
  // Vanilla runs use the constant vanilla weight set, no dead-zone
  // reweighting, and (by default) no delta observation.
  TaskConfig task_config() const;
  std::uint64_t env_seed() const;
};

// Throws ConfigError with a 1-based line number where one is known.
ExperimentConfig parse_config(const std::string& text,
                              const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// YAML text that parses back to an identical config.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace spikegrasp
