#include "spikegrasp/commands.hpp"

#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "spikegrasp/checkpoint.hpp"
#include "spikegrasp/config.hpp"
#include "spikegrasp/energy.hpp"
#include "spikegrasp/error.hpp"
#include "spikegrasp/trainer.hpp"

namespace spikegrasp::cli {
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitRuntime;
  }
}

ExperimentConfig config_or_default(const std::optional<std::string>& path) {
  return path ? load_config(*path) : ExperimentConfig();
}

void print_row(std::ostream& out, const MetricsRow& row) {
  fmt::print(out, "update {:>6} steps {:>9} reward {:>9.4f} spike {:.3f} stage {}",
             row.update, row.global_env_steps, row.mean_reward,
             row.spike_rate_r, row.stage);
  if (row.eval_success_rate) {
    fmt::print(out, " | eval success {:.2f} reach {:.2f} return {:.2f}",
               *row.eval_success_rate, *row.eval_reach_rate,
               *row.eval_mean_reward);
  }
  out << '\n' << std::flush;
}

struct Measured {
  MeasuredRates rates;
  long steps = 0;
  long n0 = 0, n1 = 0, n2 = 0;
};

Measured measure_checkpoint(const std::string& path, ModelKind expected,
                            const ExperimentConfig& cfg, int episodes,
                            std::uint64_t seed) {
  const ActorCritic agent = load_checkpoint(path);
  if (agent.kind() != expected) {
    throw UsageError(fmt::format("{} holds a {} policy, expected {}", path,
                                 to_string(agent.kind()), to_string(expected)));
  }
  const EvalResult ev = evaluate(agent, cfg.task_config(), episodes, seed);
  Measured m;
  m.rates = measure_rates(agent, ev.observations);
  const NetworkSpec& s = agent.actor_spec();
  m.steps = s.steps;
  m.n0 = s.n0;
  m.n1 = s.n1;
  m.n2 = s.n2;
  return m;
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig cfg = load_config(args.config);
    if (args.seed) cfg.seed = *args.seed;
    if (args.out_dir) cfg.output_dir = *args.out_dir;
    cfg.validate();
    TrainOptions opts;
    opts.updates = args.updates;
    if (!args.quiet) {
      opts.on_row = [&](const MetricsRow& row) {
        if (row.eval_success_rate) print_row(out, row);
      };
    }
    const TrainResult r = train(cfg, opts);
    fmt::print(out, "wrote {} and {}\n", (r.output_dir / "metrics.csv").string(),
               r.checkpoint.string());
    return int(kExitOk);
  });
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.episodes < 1) throw UsageError("--episodes must be >= 1");
    const ExperimentConfig cfg = config_or_default(args.config);
    const ActorCritic agent = load_checkpoint(args.checkpoint);
    const EvalResult ev = evaluate(agent, cfg.task_config(), args.episodes,
                                   args.seed, args.global_update);
    if (args.out_dir) {
      fs::create_directories(*args.out_dir);
      const fs::path path = fs::path(*args.out_dir) / "episodes.csv";
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      if (!f) throw Error("cannot write " + path.string());
      write_episodes_csv(f, ev);
    }
    fmt::print(out, "episodes      {}\nsuccess_rate  {:.4f}\nreach_rate    {:.4f}\n"
               "mean_reward   {:.4f}\n",
               args.episodes, ev.success_rate, ev.reach_rate, ev.mean_reward);
    return int(kExitOk);
  });
}

int cmd_energy(const EnergyArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    energy::EnergyConfig snn = energy::reference_snn_config();
    energy::EnergyConfig ann = energy::reference_ann_config();
    if (!args.reference) {
      snn.r.reset();
      snn.r_mem.reset();
      ann.r_in.reset();
      ann.r_out.reset();
    }
    const bool need_task = args.snn_checkpoint || args.ann_checkpoint;
    const ExperimentConfig cfg =
        need_task ? config_or_default(args.config) : ExperimentConfig();
    if (args.snn_checkpoint) {
      const Measured m = measure_checkpoint(*args.snn_checkpoint, ModelKind::kSnn,
                                            cfg, args.episodes, args.seed);
      snn.r = m.rates.r;
      snn.r_mem = m.rates.r_mem;
      snn.steps = ann.steps = m.steps;
      snn.n0 = ann.n0 = m.n0;
      snn.n1 = ann.n1 = m.n1;
      snn.n2 = ann.n2 = m.n2;
    }
    if (args.ann_checkpoint) {
      const Measured m = measure_checkpoint(*args.ann_checkpoint, ModelKind::kAnn,
                                            cfg, args.episodes, args.seed);
      ann.r_in = m.rates.r_in;
      ann.r_out = m.rates.r_out;
      if (!args.snn_checkpoint) {
        snn.n0 = ann.n0 = m.n0;
        snn.n1 = ann.n1 = m.n1;
        snn.n2 = ann.n2 = m.n2;
      } else if (m.n0 != snn.n0 || m.n1 != snn.n1 || m.n2 != snn.n2) {
        throw UsageError("checkpoints have different layer sizes");
      }
    }
    if (args.r) snn.r = *args.r;
    if (args.r_mem) snn.r_mem = *args.r_mem;
    if (args.r_in) ann.r_in = *args.r_in;
    if (args.r_out) ann.r_out = *args.r_out;
    for (auto* c : {&snn, &ann}) {
      if (args.batch) c->batch = *args.batch;
      if (args.steps) c->steps = *args.steps;
      if (args.n0) c->n0 = *args.n0;
      if (args.n1) c->n1 = *args.n1;
      if (args.n2) c->n2 = *args.n2;
    }
    if (!snn.r || !snn.r_mem || !ann.r_in || !ann.r_out) {
      throw UsageError(
          "give --reference, checkpoints (--snn-checkpoint, --ann-checkpoint) "
          "or all of --r, --r-mem, --r-in, --r-out");
    }
    energy::OpCosts costs{args.multiply_pj, args.add_pj};
    energy::EnergyReport rep;
    try {
      rep = energy::energy_report(snn, ann, costs);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }

    fmt::print(out, "{:<6}{:>10}{:>14}{:>8}{:>7}{:>5}{:>6}{:>5}{:>12}\n", "model",
               "r", "r_mem/r_out", "B", "T", "N0", "N1", "N2", "E (mJ)");
    fmt::print(out, "{:<6}{:>10.4g}{:>14.4g}{:>8}{:>7}{:>5}{:>6}{:>5}{:>12.2f}\n",
               "SNN", *snn.r, *snn.r_mem, snn.batch, snn.steps, snn.n0, snn.n1,
               snn.n2, rep.snn_mj());
    fmt::print(out, "{:<6}{:>10.4g}{:>14.4g}{:>8}{:>7}{:>5}{:>6}{:>5}{:>12.2f}\n",
               "ANN", *ann.r_in, *ann.r_out, ann.batch, ann.steps, ann.n0, ann.n1,
               ann.n2, rep.ann_mj());
    fmt::print(out, "energy saving {:.2f}%\n", 100.0 * rep.saving);

    const fs::path csv(args.csv);
    if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
    std::ofstream f(csv, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + csv.string());
    f << "model,r,r_mem_or_out,B,T,N0,N1,N2,E_mJ,saving\n";
    fmt::print(f, "snn,{:.9g},{:.9g},{},{},{},{},{},{:.9g},{:.9g}\n", *snn.r,
               *snn.r_mem, snn.batch, snn.steps, snn.n0, snn.n1, snn.n2,
               rep.snn_mj(), rep.saving);
    fmt::print(f, "ann,{:.9g},{:.9g},{},{},{},{},{},{:.9g},{:.9g}\n", *ann.r_in,
               *ann.r_out, ann.batch, ann.steps, ann.n0, ann.n1, ann.n2,
               rep.ann_mj(), rep.saving);
    fmt::print(out, "wrote {}\n", csv.string());
    return int(kExitOk);
  });
}

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.seeds.empty()) throw UsageError("--seeds is empty");
    const ExperimentConfig cfg = load_config(args.config);
    const fs::path dir = args.out_dir ? fs::path(*args.out_dir)
                                      : fs::path(cfg.output_dir) / "compare";
    TrainOptions opts;
    opts.updates = args.updates;
    const CompareResult res = compare(cfg, args.seeds, dir, opts);
    int failed = 0;
    for (const ArmRun& r : res.runs) {
      if (r.ok) {
        fmt::print(out, "{:<12} seed {:<4} final reward {:.4f}\n",
                   arm_name(r.model, r.training), r.seed,
                   final_mean_reward(r.rows));
      } else {
        ++failed;
        fmt::print(out, "{:<12} seed {:<4} FAILED: {}\n",
                   arm_name(r.model, r.training), r.seed, r.error);
      }
    }
    fmt::print(out, "wrote {}\n", (dir / "compare_summary.csv").string());
    return failed == 0 ? int(kExitOk) : int(kExitRuntime);
  });
}

}  // namespace spikegrasp::cli
