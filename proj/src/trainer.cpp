#include "spikegrasp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "spikegrasp/checkpoint.hpp"
#include "spikegrasp/error.hpp"
#include "spikegrasp/grasp_task.hpp"

namespace spikegrasp {
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string opt(const std::optional<double>& v) {
  return v ? fmt::format("{:.9g}", *v) : std::string();
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  int n = 0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  m.n = static_cast<int>(xs.size());
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= m.n;
  for (double x : xs) m.std += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(m.std / m.n);
  return m;
}

}  // namespace

EvalResult evaluate(const ActorCritic& agent, const TaskConfig& task,
                    int episodes, std::uint64_t seed, long global_update) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  TaskConfig cfg = task;
  cfg.env.num_envs = episodes;
  cfg.env.seed = substream_seed(seed, "eval");
  cfg.deadzone_enabled = false;
  GraspTask env(cfg);
  env.set_global_update(global_update);

  EvalResult res;
  res.episodes.resize(episodes);
  std::vector<std::uint8_t> done(episodes, 0);
  Eigen::MatrixXd raw = env.reset_all();
  for (int i = 0; i < episodes; ++i) {
    res.episodes[i].episode = i;
    res.episodes[i].cube = env.arm_env().state(i).cube;
  }

  std::vector<Eigen::VectorXd> seen;
  int remaining = episodes;
  const auto& bounds = env.observation_bounds();
  while (remaining > 0) {
    const Eigen::MatrixXd obs = encoding::minmax_normalize_rows(raw, bounds);
    for (int i = 0; i < episodes; ++i) {
      if (!done[i]) seen.push_back(obs.row(i).transpose());
    }
    const Eigen::MatrixXd actions =
        agent.action_means(obs).cwiseMax(-1.0).cwiseMin(1.0);
    const ppo::EnvStep step = env.step(actions);
    const arm::BatchStep& detail = env.last_step();
    for (int i = 0; i < episodes; ++i) {
      if (done[i]) continue;
      EpisodeRecord& ep = res.episodes[i];
      ep.steps += 1;
      ep.reward += step.rewards[i];
      ep.final_d_mid = detail.geometry[i].d_mid;
      if (step.success[i] ||
          detail.info[i].reach_streak >= cfg.env.reach_hold_steps) {
        ep.reached = true;
      }
      if (step.done[i]) {
        ep.success = step.success[i] != 0;
        done[i] = 1;
        --remaining;
      }
    }
    raw = step.observations;
  }

  res.observations.resize(static_cast<Eigen::Index>(seen.size()),
                          env.observation_dim());
  for (std::size_t r = 0; r < seen.size(); ++r) {
    res.observations.row(static_cast<Eigen::Index>(r)) = seen[r].transpose();
  }
  long succ = 0, reach = 0;
  double reward = 0.0;
  for (const EpisodeRecord& ep : res.episodes) {
    succ += ep.success;
    reach += ep.reached;
    reward += ep.reward;
  }
  res.success_rate = double(succ) / episodes;
  res.reach_rate = double(reach) / episodes;
  res.mean_reward = reward / episodes;
  return res;
}

void write_episodes_csv(std::ostream& out, const EvalResult& result) {
  out << "episode,cube_x,cube_y,cube_z,steps,reward,success,reached,final_d_mid\n";
  for (const EpisodeRecord& ep : result.episodes) {
    fmt::print(out, "{},{:.9g},{:.9g},{:.9g},{},{:.9g},{},{},{:.9g}\n",
               ep.episode, ep.cube.x(), ep.cube.y(), ep.cube.z(), ep.steps,
               ep.reward, ep.success ? 1 : 0, ep.reached ? 1 : 0,
               ep.final_d_mid);
  }
}

MeasuredRates measure_rates(const ActorCritic& agent, const Eigen::MatrixXd& obs) {
  if (obs.rows() == 0) throw std::invalid_argument("no observations to measure");
  MeasuredRates m;
  m.batch = obs.rows();
  if (agent.kind() == ModelKind::kSnn) {
    ForwardStats stats;
    agent.action_means(obs, &stats, nullptr);
    m.r = stats.spike_rate();
    double mem = 0.0;
    for (const Eigen::MatrixXd& trace : stats.membrane) {
      mem += energy::membrane_activation_rate(trace.transpose());
    }
    m.r_mem = mem / double(stats.membrane.size());
  } else {
    AnnStats stats;
    ann_forward(agent.actor(), obs, agent.actor_spec(), &stats);
    const energy::AnnRates r = energy::ann_activation_rates(obs, stats.hidden);
    m.r_in = r.r_in;
    m.r_out = r.r_out;
  }
  return m;
}

void write_metrics_header(std::ostream& out) {
  out << "update,global_env_steps,mean_reward,success_rate,reach_rate,"
         "eval_success_rate,eval_reach_rate,eval_mean_reward,actor_loss,"
         "critic_loss,entropy,approx_kl,clip_fraction,spike_rate_r,"
         "r_prox_align,r_grip_geom,r_task,r_pose,p_pose,stage,"
         "deadzone_fraction,train_episodes,train_successes,train_reached\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  fmt::print(out,
             "{},{},{:.9g},{:.9g},{:.9g},{},{},{},{:.9g},{:.9g},{:.9g},{:.9g},"
             "{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{},{:.9g},{},{},"
             "{}\n",
             r.update, r.global_env_steps, r.mean_reward, r.success_rate,
             r.reach_rate, opt(r.eval_success_rate), opt(r.eval_reach_rate),
             opt(r.eval_mean_reward), r.actor_loss, r.critic_loss, r.entropy,
             r.approx_kl, r.clip_fraction, r.spike_rate_r, r.r_prox_align,
             r.r_grip_geom, r.r_task, r.r_pose, r.p_pose, r.stage,
             r.deadzone_fraction, r.train_episodes, r.train_successes,
             r.train_reached);
}

TrainResult train(const ExperimentConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  const long updates = options.updates.value_or(cfg.ppo.total_updates);
  if (updates < 1) throw std::invalid_argument("updates must be >= 1");

  TrainResult result;
  result.output_dir = cfg.output_dir;
  fs::create_directories(result.output_dir);
  {
    std::ofstream snap = open_out(result.output_dir / "config.yaml");
    snap << dump_config(cfg);
  }
  std::ofstream metrics = open_out(result.output_dir / "metrics.csv");
  write_metrics_header(metrics);
  metrics.flush();

  const TaskConfig task_cfg = cfg.task_config();
  GraspTask env(task_cfg);
  std::vector<SpawnRecord> spawns;
  if (cfg.output.spawn_log) env.set_spawn_log(&spawns);
  std::ofstream traj;
  std::optional<TrajectoryWriter> writer;
  if (cfg.output.trajectory_updates > 0) {
    traj = open_out(result.output_dir / "trajectory.csv");
    writer.emplace(traj);
    env.set_trajectory_writer(&*writer);
  }

  ActorCritic agent(cfg.model, cfg.network, substream_seed(cfg.seed, "policy-init"));
  const std::uint64_t eval_seed = substream_seed(cfg.seed, "evaluation");

  auto on_update = [&](const ppo::UpdateContext& ctx) {
    const TaskStats s = env.take_stats();
    MetricsRow row;
    row.update = ctx.update + 1;
    row.global_env_steps = ctx.env_steps;
    const double steps = std::max<long>(s.steps, 1);
    row.mean_reward = s.reward / steps;
    row.r_prox_align = s.prox_align / steps;
    row.r_grip_geom = s.grip_geom / steps;
    row.r_task = s.task / steps;
    row.r_pose = s.pose / steps;
    row.p_pose = s.penalty / steps;
    row.deadzone_fraction = double(s.deadzone_active) / steps;
    row.train_episodes = s.episodes;
    row.train_successes = s.successes;
    row.train_reached = s.reached;
    if (s.episodes > 0) {
      row.success_rate = double(s.successes) / double(s.episodes);
      row.reach_rate = double(s.reached) / double(s.episodes);
    }
    row.actor_loss = ctx.loss->actor_loss;
    row.critic_loss = ctx.loss->critic_loss;
    row.entropy = ctx.loss->entropy;
    row.approx_kl = ctx.loss->approx_kl;
    row.clip_fraction = ctx.loss->clip_fraction;
    row.spike_rate_r = ctx.buffer->activity_rate;
    row.stage = task_cfg.schedule.stage(ctx.update);

    if (row.update % cfg.eval.interval == 0 || row.update == updates) {
      const EvalResult ev =
          evaluate(agent, task_cfg, cfg.eval.episodes, eval_seed, ctx.update);
      row.eval_success_rate = ev.success_rate;
      row.eval_reach_rate = ev.reach_rate;
      row.eval_mean_reward = ev.mean_reward;
    }
    write_metrics_row(metrics, row);
    metrics.flush();
    result.rows.push_back(row);
    if (options.on_row) options.on_row(row);

    if (cfg.output.checkpoint_interval > 0 &&
        row.update % cfg.output.checkpoint_interval == 0) {
      save_checkpoint(agent, result.output_dir /
                                 fmt::format("checkpoint_{:06d}.bin", row.update));
    }
    if (writer && row.update >= cfg.output.trajectory_updates) {
      env.set_trajectory_writer(nullptr);
      writer.reset();
      traj.close();
    }
    return true;
  };

  ppo::train_loop(agent, env, cfg.ppo, cfg.seed, updates, on_update);

  result.checkpoint = result.output_dir / "checkpoint_final.bin";
  save_checkpoint(agent, result.checkpoint);
  if (cfg.output.spawn_log) {
    std::ofstream out = open_out(result.output_dir / "spawns.csv");
    out << "env,spawn,cube_x,cube_y,cube_z\n";
    for (const SpawnRecord& r : spawns) {
      fmt::print(out, "{},{},{:.9g},{:.9g},{:.9g}\n", r.env, r.spawn, r.cube.x(),
                 r.cube.y(), r.cube.z());
    }
  }
  result.agent = std::move(agent);
  return result;
}

double final_mean_reward(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("no metrics rows");
  const std::size_t n = std::max<std::size_t>(1, rows.size() / 10);
  double sum = 0.0;
  for (std::size_t i = rows.size() - n; i < rows.size(); ++i) {
    sum += rows[i].mean_reward;
  }
  return sum / double(n);
}

std::string arm_name(ModelKind model, TrainingKind training) {
  return fmt::format("{}-{}", to_string(model), to_string(training));
}

CompareResult compare(const ExperimentConfig& base,
                      const std::vector<std::uint64_t>& seeds,
                      const fs::path& out_dir, const TrainOptions& options) {
  if (seeds.empty()) throw std::invalid_argument("compare needs at least one seed");
  base.validate();
  fs::create_directories(out_dir);

  const std::pair<ModelKind, TrainingKind> arms[] = {
      {ModelKind::kSnn, TrainingKind::kVanilla},
      {ModelKind::kSnn, TrainingKind::kCrl},
      {ModelKind::kAnn, TrainingKind::kVanilla},
      {ModelKind::kAnn, TrainingKind::kCrl}};

  CompareResult out;
  for (const auto& [model, training] : arms) {
    for (std::uint64_t seed : seeds) {
      ArmRun run;
      run.model = model;
      run.training = training;
      run.seed = seed;
      ExperimentConfig cfg = base;
      cfg.model = model;
      cfg.training = training;
      cfg.seed = seed;
      cfg.output_dir =
          (out_dir / arm_name(model, training) / fmt::format("seed_{}", seed))
              .string();
      try {
        TrainResult r = train(cfg, options);
        run.rows = std::move(r.rows);
        run.ok = true;
      } catch (const std::exception& e) {
        run.error = e.what();
      }
      out.runs.push_back(std::move(run));
    }
  }

  {
    std::ofstream f = open_out(out_dir / "compare_runs.csv");
    f << "arm,model,training,seed,status,updates,global_env_steps,"
         "final_mean_reward,peak_eval_success_rate,peak_eval_reach_rate,"
         "final_eval_success_rate,final_eval_reach_rate,error\n";
    for (const ArmRun& r : out.runs) {
      double peak_s = 0.0, peak_r = 0.0;
      std::optional<double> last_s, last_r;
      for (const MetricsRow& m : r.rows) {
        if (m.eval_success_rate) {
          peak_s = std::max(peak_s, *m.eval_success_rate);
          last_s = m.eval_success_rate;
        }
        if (m.eval_reach_rate) {
          peak_r = std::max(peak_r, *m.eval_reach_rate);
          last_r = m.eval_reach_rate;
        }
      }
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      fmt::print(f, "{},{},{},{},{},{},{},{},{:.9g},{:.9g},{},{},{}\n",
                 arm_name(r.model, r.training), to_string(r.model),
                 to_string(r.training), r.seed, r.ok ? "ok" : "failed",
                 r.rows.size(), r.rows.empty() ? 0 : r.rows.back().global_env_steps,
                 r.ok ? fmt::format("{:.9g}", final_mean_reward(r.rows)) : "",
                 peak_s, peak_r, opt(last_s), opt(last_r), err);
    }
  }

  struct CurvePoint {
    long env_steps = 0;
    std::vector<double> reward, success, reach, eval_success, eval_reach,
        eval_reward;
  };
  std::map<std::string, std::map<long, CurvePoint>> curves;
  std::map<std::string, std::pair<int, int>> counts;  // ok, failed
  std::map<std::string, std::vector<double>> finals;
  for (const ArmRun& r : out.runs) {
    const std::string name = arm_name(r.model, r.training);
    auto& c = counts[name];
    if (!r.ok) {
      ++c.second;
      continue;
    }
    ++c.first;
    finals[name].push_back(final_mean_reward(r.rows));
    for (const MetricsRow& m : r.rows) {
      CurvePoint& p = curves[name][m.update];
      p.env_steps = m.global_env_steps;
      p.reward.push_back(m.mean_reward);
      p.success.push_back(m.success_rate);
      p.reach.push_back(m.reach_rate);
      if (m.eval_success_rate) p.eval_success.push_back(*m.eval_success_rate);
      if (m.eval_reach_rate) p.eval_reach.push_back(*m.eval_reach_rate);
      if (m.eval_mean_reward) p.eval_reward.push_back(*m.eval_mean_reward);
    }
  }

  std::ofstream f = open_out(out_dir / "compare_curves.csv");
  f << "arm,update,global_env_steps,runs,mean_reward_mean,mean_reward_std,"
       "success_rate_mean,success_rate_std,reach_rate_mean,reach_rate_std,"
       "eval_success_rate_mean,eval_success_rate_std,eval_reach_rate_mean,"
       "eval_reach_rate_std,eval_mean_reward_mean,eval_mean_reward_std\n";
  std::ofstream s = open_out(out_dir / "compare_summary.csv");
  s << "arm,runs_ok,runs_failed,final_mean_reward_mean,final_mean_reward_std,"
       "peak_eval_success_rate,peak_success_update,peak_eval_reach_rate,"
       "peak_reach_update\n";
  for (const auto& [model, training] : arms) {
    const std::string name = arm_name(model, training);
    double peak_s = 0.0, peak_r = 0.0;
    long peak_s_at = 0, peak_r_at = 0;
    for (const auto& [update, p] : curves[name]) {
      const MeanStd rw = mean_std(p.reward), sc = mean_std(p.success),
                    rc = mean_std(p.reach), es = mean_std(p.eval_success),
                    er = mean_std(p.eval_reach), ew = mean_std(p.eval_reward);
      auto cell = [](const MeanStd& m) {
        return m.n > 0 ? fmt::format("{:.9g},{:.9g}", m.mean, m.std)
                       : std::string(",");
      };
      fmt::print(f, "{},{},{},{},{},{},{},{},{},{}\n", name, update,
                 p.env_steps, rw.n, cell(rw), cell(sc), cell(rc), cell(es),
                 cell(er), cell(ew));
      if (es.n > 0 && (peak_s_at == 0 || es.mean > peak_s)) {
        peak_s = es.mean;
        peak_s_at = update;
      }
      if (er.n > 0 && (peak_r_at == 0 || er.mean > peak_r)) {
        peak_r = er.mean;
        peak_r_at = update;
      }
    }
    const MeanStd fin = mean_std(finals[name]);
    fmt::print(s, "{},{},{},{},{},{:.9g},{},{:.9g},{}\n", name,
               counts[name].first, counts[name].second,
               fin.n > 0 ? fmt::format("{:.9g}", fin.mean) : "",
               fin.n > 0 ? fmt::format("{:.9g}", fin.std) : "", peak_s,
               peak_s_at, peak_r, peak_r_at);
  }
  return out;
}

}  // namespace spikegrasp
