#include "spikegrasp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <yaml-cpp/yaml.h>

#include "spikegrasp/error.hpp"

namespace spikegrasp {
namespace {

int line_of(const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

// A YAML mapping whose keys must all be consumed.
class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      fail(node_, "expected a mapping");
    }
  }

  bool has(const char* key) const { return node_ && node_[key]; }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!node_) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail(v, fmt::format("'{}' has the wrong type", qualified(key)));
    }
  }

  template <std::size_t N>
  void read_array(const char* key, std::array<double, N>& out) {
    seen_.insert(key);
    if (!node_) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    if (!v.IsSequence() || v.size() != N) {
      fail(v, fmt::format("'{}' must be a list of {} numbers", qualified(key), N));
    }
    for (std::size_t i = 0; i < N; ++i) {
      try {
        out[i] = v[i].as<double>();
      } catch (const YAML::Exception&) {
        fail(v[i], fmt::format("'{}[{}]' is not a number", qualified(key), i));
      }
    }
  }

  void read_vec3(const char* key, Eigen::Vector3d& out) {
    std::array<double, 3> a{out.x(), out.y(), out.z()};
    read_array(key, a);
    out = Eigen::Vector3d(a[0], a[1], a[2]);
  }

  template <typename Enum>
  void read_enum(const char* key, Enum& out,
                 std::initializer_list<std::pair<const char*, Enum>> names) {
    seen_.insert(key);
    if (!node_) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    std::string s;
    try {
      s = v.as<std::string>();
    } catch (const YAML::Exception&) {
      fail(v, fmt::format("'{}' must be a string", qualified(key)));
    }
    std::vector<std::string> allowed;
    for (const auto& [name, value] : names) {
      if (s == name) {
        out = value;
        return;
      }
      allowed.emplace_back(name);
    }
    fail(v, fmt::format("'{}' must be one of: {}", qualified(key),
                        fmt::join(allowed, ", ")));
  }

  Section child(const char* key) {
    seen_.insert(key);
    YAML::Node v = node_ ? node_[key] : YAML::Node();
    return Section(v ? v : YAML::Node(), qualified(key), source_);
  }

  void finish() const {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) {
        fail(kv.first, fmt::format("unknown key '{}'", qualified(key)));
      }
    }
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const int line = line_of(at);
    throw ConfigError(line > 0 ? fmt::format("{}:{}: {}", source_, line, msg)
                               : fmt::format("{}: {}", source_, msg),
                      line);
  }

 private:
  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> seen_;
};

void read_weights(Section s, reward::RewardWeightSet& w) {
  s.read_array("alpha", w.alpha);
  s.read_array("beta", w.beta);
  s.read("gamma", w.gamma);
  s.read_array("delta", w.delta);
  s.finish();
}

template <std::size_t N>
std::string list(const std::array<double, N>& a) {
  return fmt::format("[{}]", fmt::join(a, ", "));
}

std::string list(const Eigen::Vector3d& v) {
  return fmt::format("[{}, {}, {}]", v.x(), v.y(), v.z());
}

std::string weights_block(const reward::RewardWeightSet& w,
                          const char* indent) {
  return fmt::format(
      "{0}alpha: {1}\n{0}beta: {2}\n{0}gamma: {3}\n{0}delta: {4}\n", indent,
      list(w.alpha), list(w.beta), w.gamma, list(w.delta));
}

}  // namespace

const char* to_string(TrainingKind kind) {
  return kind == TrainingKind::kCrl ? "crl" : "vanilla";
}

ExperimentConfig::ExperimentConfig() {
  network.n0 = arm::kObservationDim;
  network.n1 = 256;
  network.n2 = arm::kActionDim;
  network.steps = 8;
  network.init_gain_in = 20.0;
  network.init_gain_out = 1.0;
  ppo.reward_scale = 0.05;
  ppo.total_updates = 976;
}

void ExperimentConfig::validate() const {
  try {
    network.validate();
    if (network.n0 != arm::kObservationDim || network.n2 != arm::kActionDim) {
      throw std::invalid_argument("network must map 18 observations to 7 actions");
    }
    ppo.validate();
    curriculum.validate();
    vanilla_weights.validate();
    scales.validate();
    deadzone.validate();
    env.validate();
    if (eval.interval < 1 || eval.episodes < 1) {
      throw std::invalid_argument("eval interval and episodes must be >= 1");
    }
    if (output.checkpoint_interval < 0 || output.trajectory_updates < 0) {
      throw std::invalid_argument("output intervals must be >= 0");
    }
    if (output_dir.empty()) throw std::invalid_argument("output_dir is empty");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

std::uint64_t ExperimentConfig::env_seed() const {
  return substream_seed(seed, "env");
}

TaskConfig ExperimentConfig::task_config() const {
  TaskConfig t;
  t.env = env;
  t.env.seed = env_seed();
  t.scales = scales;
  t.deadzone = deadzone;
  if (training == TrainingKind::kCrl) {
    t.schedule = curriculum;
    t.deadzone_enabled = deadzone_enabled;
  } else {
    t.schedule = reward::constant_schedule(vanilla_weights);
    t.deadzone_enabled = false;
    t.env.delta_observation = vanilla_delta_observation;
  }
  return t;
}

ExperimentConfig parse_config(const std::string& text,
                              const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(
        fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg),
        e.mark.line + 1);
  }
  ExperimentConfig cfg;
  Section top(root, "", source);
  top.read_enum("model", cfg.model,
                {{"snn", ModelKind::kSnn}, {"ann", ModelKind::kAnn}});
  top.read_enum("training", cfg.training,
                {{"crl", TrainingKind::kCrl}, {"vanilla", TrainingKind::kVanilla}});
  top.read("seed", cfg.seed);
  top.read("output_dir", cfg.output_dir);

  {
    Section s = top.child("network");
    s.read("hidden", cfg.network.n1);
    s.read("steps", cfg.network.steps);
    s.read_enum("encoder", cfg.network.encoder,
                {{"current", encoding::EncoderMode::kCurrent},
                 {"latency", encoding::EncoderMode::kLatency}});
    s.read("lambda", cfg.network.lif.lambda);
    cfg.network.nlif.lambda = cfg.network.lif.lambda;
    s.read("output_lambda", cfg.network.nlif.lambda);
    s.read("resistance", cfg.network.lif.resistance);
    s.read("threshold", cfg.network.lif.threshold);
    s.read("v_clip", cfg.network.nlif.v_clip);
    s.read_enum("surrogate", cfg.network.surrogate.kind,
                {{"rectangular", snn::SurrogateKind::kRectangular},
                 {"fast_sigmoid", snn::SurrogateKind::kFastSigmoid}});
    s.read("surrogate_width", cfg.network.surrogate.width);
    s.read("init_gain_in", cfg.network.init_gain_in);
    s.read("init_gain_out", cfg.network.init_gain_out);
    s.finish();
  }
  {
    Section s = top.child("env");
    arm::EnvConfig& e = cfg.env;
    s.read("num_envs", e.num_envs);
    s.read("episode_length", e.episode_length);
    s.read_vec3("spawn_min", e.spawn.lo);
    s.read_vec3("spawn_max", e.spawn.hi);
    s.read_vec3("workspace_min", e.workspace.lo);
    s.read_vec3("workspace_max", e.workspace.hi);
    s.read("cube_edge", e.cube_edge);
    s.read("gap_allowance", e.gap_allowance);
    s.read("tau_finger", e.tau_finger);
    s.read("tau_gap", e.tau_gap);
    s.read("tau_align", e.tau_align);
    s.read("max_joint_step", e.max_joint_step);
    s.read("max_linear_step", e.max_linear_step);
    s.read("max_angular_step", e.max_angular_step);
    s.read("gripper_rate", e.gripper_rate);
    s.read("ik_damping", e.ik_damping);
    s.read("initial_gap", e.initial_gap);
    s.read("reach_threshold", e.reach_threshold);
    s.read("reach_hold_steps", e.reach_hold_steps);
    s.read("delta_observation", e.delta_observation);
    s.finish();
  }
  {
    Section s = top.child("ppo");
    ppo::PpoConfig& p = cfg.ppo;
    s.read("clip", p.clip);
    s.read("gamma", p.gamma);
    s.read("gae_lambda", p.gae_lambda);
    s.read("learning_rate", p.learning_rate);
    s.read("epochs", p.epochs);
    s.read("minibatches", p.minibatches);
    s.read("value_coef", p.value_coef);
    s.read("entropy_coef", p.entropy_coef);
    s.read("horizon", p.horizon);
    s.read("total_updates", p.total_updates);
    s.read("max_grad_norm", p.max_grad_norm);
    s.read("adam_beta1", p.adam_beta1);
    s.read("adam_beta2", p.adam_beta2);
    s.read("adam_eps", p.adam_eps);
    s.read("reward_scale", p.reward_scale);
    s.finish();
  }
  {
    Section s = top.child("curriculum");
    s.read("t1", cfg.curriculum.t1);
    if (s.has("stage1")) read_weights(s.child("stage1"), cfg.curriculum.stage1);
    if (s.has("stage2")) read_weights(s.child("stage2"), cfg.curriculum.stage2);
    s.child("stage1");
    s.child("stage2");
    s.finish();
  }
  {
    Section s = top.child("vanilla");
    if (s.has("weights")) read_weights(s.child("weights"), cfg.vanilla_weights);
    s.child("weights");
    s.read("delta_observation", cfg.vanilla_delta_observation);
    s.finish();
  }
  {
    Section s = top.child("scales");
    s.read_array("kappa", cfg.scales.kappa);
    s.read_array("xi", cfg.scales.xi);
    s.read_array("theta", cfg.scales.theta);
    s.read("success_reward", cfg.scales.success_reward);
    s.read("penalty_scale", cfg.scales.penalty_scale);
    s.finish();
  }
  {
    Section s = top.child("deadzone");
    s.read("enabled", cfg.deadzone_enabled);
    s.read("hysteresis", cfg.deadzone.hysteresis);
    s.read("window", cfg.deadzone.window);
    s.read("k_up", cfg.deadzone.k_up);
    s.read("k_down", cfg.deadzone.k_down);
    s.finish();
  }
  {
    Section s = top.child("eval");
    s.read("interval", cfg.eval.interval);
    s.read("episodes", cfg.eval.episodes);
    s.finish();
  }
  {
    Section s = top.child("output");
    s.read("checkpoint_interval", cfg.output.checkpoint_interval);
    s.read("spawn_log", cfg.output.spawn_log);
    s.read("trajectory_updates", cfg.output.trajectory_updates);
    s.finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file: " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string dump_config(const ExperimentConfig& c) {
  const auto& n = c.network;
  const auto& e = c.env;
  const auto& p = c.ppo;
  std::string out;
  out += fmt::format("model: {}\ntraining: {}\nseed: {}\noutput_dir: \"{}\"\n",
                     to_string(c.model), to_string(c.training), c.seed,
                     c.output_dir);
  out += fmt::format(
      "network:\n  hidden: {}\n  steps: {}\n  encoder: {}\n  lambda: {}\n"
      "  output_lambda: {}\n  resistance: {}\n  threshold: {}\n  v_clip: {}\n"
      "  surrogate: {}\n  surrogate_width: {}\n  init_gain_in: {}\n"
      "  init_gain_out: {}\n",
      n.n1, n.steps,
      n.encoder == encoding::EncoderMode::kCurrent ? "current" : "latency",
      n.lif.lambda, n.nlif.lambda, n.lif.resistance, n.lif.threshold,
      n.nlif.v_clip,
      n.surrogate.kind == snn::SurrogateKind::kRectangular ? "rectangular"
                                                           : "fast_sigmoid",
      n.surrogate.width, n.init_gain_in, n.init_gain_out);
  out += fmt::format(
      "env:\n  num_envs: {}\n  episode_length: {}\n  spawn_min: {}\n"
      "  spawn_max: {}\n  workspace_min: {}\n  workspace_max: {}\n"
      "  cube_edge: {}\n  gap_allowance: {}\n  tau_finger: {}\n  tau_gap: {}\n"
      "  tau_align: {}\n  max_joint_step: {}\n  max_linear_step: {}\n"
      "  max_angular_step: {}\n  gripper_rate: {}\n  ik_damping: {}\n"
      "  initial_gap: {}\n  reach_threshold: {}\n  reach_hold_steps: {}\n"
      "  delta_observation: {}\n",
      e.num_envs, e.episode_length, list(e.spawn.lo), list(e.spawn.hi),
      list(e.workspace.lo), list(e.workspace.hi), e.cube_edge,
      e.gap_allowance, e.tau_finger, e.tau_gap, e.tau_align, e.max_joint_step,
      e.max_linear_step, e.max_angular_step, e.gripper_rate, e.ik_damping,
      e.initial_gap, e.reach_threshold, e.reach_hold_steps,
      e.delta_observation);
  out += fmt::format(
      "ppo:\n  clip: {}\n  gamma: {}\n  gae_lambda: {}\n  learning_rate: {}\n"
      "  epochs: {}\n  minibatches: {}\n  value_coef: {}\n  entropy_coef: {}\n"
      "  horizon: {}\n  total_updates: {}\n  max_grad_norm: {}\n"
      "  adam_beta1: {}\n  adam_beta2: {}\n  adam_eps: {}\n"
      "  reward_scale: {}\n",
      p.clip, p.gamma, p.gae_lambda, p.learning_rate, p.epochs, p.minibatches,
      p.value_coef, p.entropy_coef, p.horizon, p.total_updates,
      p.max_grad_norm, p.adam_beta1, p.adam_beta2, p.adam_eps,
      p.reward_scale);
  out += fmt::format("curriculum:\n  t1: {}\n  stage1:\n{}  stage2:\n{}",
                     c.curriculum.t1, weights_block(c.curriculum.stage1, "    "),
                     weights_block(c.curriculum.stage2, "    "));
  out += fmt::format("vanilla:\n  delta_observation: {}\n  weights:\n{}",
                     c.vanilla_delta_observation,
                     weights_block(c.vanilla_weights, "    "));
  out += fmt::format(
      "scales:\n  kappa: {}\n  xi: {}\n  theta: {}\n  success_reward: {}\n"
      "  penalty_scale: {}\n",
      list(c.scales.kappa), list(c.scales.xi), list(c.scales.theta),
      c.scales.success_reward, c.scales.penalty_scale);
  out += fmt::format(
      "deadzone:\n  enabled: {}\n  hysteresis: {}\n  window: {}\n  k_up: {}\n"
      "  k_down: {}\n",
      c.deadzone_enabled, c.deadzone.hysteresis, c.deadzone.window,
      c.deadzone.k_up, c.deadzone.k_down);
  out += fmt::format("eval:\n  interval: {}\n  episodes: {}\n", c.eval.interval,
                     c.eval.episodes);
  out += fmt::format(
      "output:\n  checkpoint_interval: {}\n  spawn_log: {}\n"
      "  trajectory_updates: {}\n",
      c.output.checkpoint_interval, c.output.spawn_log,
      c.output.trajectory_updates);
  return out;
}

}  // namespace spikegrasp
