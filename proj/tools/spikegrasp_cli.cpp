#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "spikegrasp/commands.hpp"

namespace cli = spikegrasp::cli;

int main(int argc, char** argv) {
  CLI::App app{"Spiking actor-critic grasping: training, evaluation, energy audit"};
  app.require_subcommand(1);

  cli::TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train one policy from a config file");
  train_cmd->add_option("--config", train.config, "experiment config (YAML)")->required();
  train_cmd->add_option("--seed", train.seed, "override the root seed");
  train_cmd->add_option("--out-dir", train.out_dir, "override the output directory");
  train_cmd->add_option("--updates", train.updates, "override ppo.total_updates");
  train_cmd->add_flag("--quiet", train.quiet, "no progress output");

  cli::EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "deterministic evaluation of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--config", eval.config,
                       "config describing the task (use the run's config.yaml)");
  eval_cmd->add_option("--episodes", eval.episodes, "number of episodes")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "evaluation seed")->capture_default_str();
  eval_cmd->add_option("--global-update", eval.global_update,
                       "curriculum clock used for the reward weights")
      ->capture_default_str();
  eval_cmd->add_option("--out-dir", eval.out_dir, "write episodes.csv here");

  cli::EnergyArgs energy;
  auto* energy_cmd = app.add_subcommand("energy", "analytical inference energy");
  energy_cmd->add_flag("--reference", energy.reference,
                       "start from the reference operating point (B=8192, T=500, 18-256-7)");
  energy_cmd->add_option("--r", energy.r, "SNN input-layer spike rate");
  energy_cmd->add_option("--r-mem", energy.r_mem, "SNN membrane activation rate");
  energy_cmd->add_option("--r-in", energy.r_in, "ANN input activation rate");
  energy_cmd->add_option("--r-out", energy.r_out, "ANN hidden activation rate");
  energy_cmd->add_option("--batch", energy.batch, "B");
  energy_cmd->add_option("--steps", energy.steps, "T");
  energy_cmd->add_option("--n0", energy.n0, "N0");
  energy_cmd->add_option("--n1", energy.n1, "N1");
  energy_cmd->add_option("--n2", energy.n2, "N2");
  energy_cmd->add_option("--alpha-m", energy.multiply_pj, "pJ per multiply")
      ->capture_default_str();
  energy_cmd->add_option("--alpha-a", energy.add_pj, "pJ per add")->capture_default_str();
  energy_cmd->add_option("--snn-checkpoint", energy.snn_checkpoint,
                         "measure r and r_mem from a trained SNN");
  energy_cmd->add_option("--ann-checkpoint", energy.ann_checkpoint,
                         "measure r_in and r_out from a trained ANN");
  energy_cmd->add_option("--checkpoint", energy.snn_checkpoint, "alias of --snn-checkpoint");
  energy_cmd->add_option("--config", energy.config, "task used for measurement");
  energy_cmd->add_option("--episodes", energy.episodes, "measurement episodes")
      ->capture_default_str();
  energy_cmd->add_option("--seed", energy.seed, "measurement seed")->capture_default_str();
  energy_cmd->add_option("--csv", energy.csv, "CSV output path")->capture_default_str();
  std::optional<std::string> energy_out;
  energy_cmd->add_option("--out-dir", energy_out, "write energy.csv into this directory");

  cli::CompareArgs compare;
  auto* compare_cmd =
      app.add_subcommand("compare", "train {snn, ann} x {vanilla, crl} over shared seeds");
  compare_cmd->add_option("--config", compare.config, "base config")->required();
  compare_cmd->add_option("--seeds", compare.seeds, "root seeds")
      ->delimiter(',')
      ->capture_default_str();
  compare_cmd->add_option("--seed", compare.seeds, "alias of --seeds")->delimiter(',');
  compare_cmd->add_option("--out-dir", compare.out_dir, "output directory");
  compare_cmd->add_option("--updates", compare.updates, "override ppo.total_updates");
  compare_cmd->add_flag("--quiet", compare.quiet, "no progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  if (*train_cmd) return cli::cmd_train(train, std::cout, std::cerr);
  if (*eval_cmd) return cli::cmd_eval(eval, std::cout, std::cerr);
  if (*energy_cmd) {
    if (energy_out) energy.csv = (std::filesystem::path(*energy_out) / "energy.csv").string();
    return cli::cmd_energy(energy, std::cout, std::cerr);
  }
  if (*compare_cmd) return cli::cmd_compare(compare, std::cout, std::cerr);
  return cli::kExitUsage;
}
