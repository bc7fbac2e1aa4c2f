#pragma once

// Command implementations behind the spikegrasp executable. Each returns a
// process exit status.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace spikegrasp::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitRuntime = 3,
};

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<long> updates;
  bool quiet = false;
};

struct EvalArgs {
  std::string checkpoint;
  std::optional<std::string> config;
  int episodes = 10;
  std::uint64_t seed = 0;
  long global_update = 0;
  std::optional<std::string> out_dir;  // episodes.csv goes here
};

struct EnergyArgs {
  bool reference = false;
  std::optional<double> r, r_mem, r_in, r_out;
  std::optional<long> batch, steps, n0, n1, n2;
  double multiply_pj = 4.6;
  double add_pj = 0.9;
  std::optional<std::string> snn_checkpoint;
  std::optional<std::string> ann_checkpoint;
  std::optional<std::string> config;  // task used to measure rates
  int episodes = 10;
  std::uint64_t seed = 0;
  std::string csv = "energy.csv";
};

struct CompareArgs {
  std::string config;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::optional<std::string> out_dir;
  std::optional<long> updates;
  bool quiet = false;
};

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_energy(const EnergyArgs& args, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err);

}  // namespace spikegrasp::cli
