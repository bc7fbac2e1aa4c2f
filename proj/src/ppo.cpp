#include "spikegrasp/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "spikegrasp/error.hpp"

namespace spikegrasp::ppo {

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) {
    throw std::invalid_argument("ppo clip must lie in (0, 1)");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0) ||
      !(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw std::invalid_argument("gamma and gae_lambda must lie in [0, 1]");
  }
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("learning rate must be >= 0");
  }
  if (epochs < 1 || minibatches < 1 || horizon < 1 || total_updates < 1) {
    throw std::invalid_argument(
        "epochs, minibatches, horizon and total_updates must be >= 1");
  }
  if (!(value_coef >= 0.0) || !(entropy_coef >= 0.0)) {
    throw std::invalid_argument("loss coefficients must be >= 0");
  }
  if (!(max_grad_norm > 0.0)) {
    throw std::invalid_argument("max_grad_norm must be > 0");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw std::invalid_argument("invalid Adam moment parameters");
  }
  if (!(reward_scale > 0.0)) {
    throw std::invalid_argument("reward_scale must be > 0");
  }
}

RolloutBuffer collect_rollout(const ActorCritic& agent, VecEnv& env,
                              int horizon, Rng& rng, RolloutState& state) {
  const int n = env.num_envs();
  const int act_dim = env.action_dim();
  if (agent.actor_spec().n2 != act_dim ||
      agent.actor_spec().n0 != env.observation_dim()) {
    throw ShapeError("agent dimensions do not match the environment");
  }
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!state.initialized) {
    state.observations = env.reset_all();
    state.initialized = true;
  }

  RolloutBuffer buf;
  buf.horizon = horizon;
  buf.num_envs = n;
  const int total = horizon * n;
  buf.observations.resize(total, env.observation_dim());
  buf.actions.resize(total, act_dim);
  buf.log_probs.resize(total);
  buf.rewards.resize(total);
  buf.values.resize(total);
  buf.dones.resize(total);

  const auto& bounds = env.observation_bounds();
  const Eigen::VectorXd& log_std = agent.actor().log_std;
  Eigen::MatrixXd clamped(n, act_dim);
  double activity = 0.0;

  for (int t = 0; t < horizon; ++t) {
    const Eigen::MatrixXd obs =
        encoding::minmax_normalize_rows(state.observations, bounds);
    ForwardStats snn_stats;
    AnnStats ann_stats;
    const Eigen::MatrixXd means = agent.action_means(obs, &snn_stats, &ann_stats);
    activity += agent.kind() == ModelKind::kSnn ? snn_stats.spike_rate()
                                                : ann_stats.r_out;
    const Eigen::VectorXd values = agent.values(obs);
    for (int e = 0; e < n; ++e) {
      const int i = RolloutBuffer::index(t, e, n);
      const ActionSample a = sample_action(means.row(e).transpose(), log_std, rng);
      buf.observations.row(i) = obs.row(e);
      buf.actions.row(i) = a.raw.transpose();
      buf.log_probs[i] = a.log_prob;
      buf.values[i] = values[e];
      clamped.row(e) = a.clamped.transpose();
    }
    const EnvStep step = env.step(clamped);
    for (int e = 0; e < n; ++e) {
      const int i = RolloutBuffer::index(t, e, n);
      buf.rewards[i] = step.rewards[e];
      buf.dones[i] = step.done[e] ? 1.0 : 0.0;
      if (step.done[e]) {
        ++buf.episodes_finished;
        if (step.success[e]) ++buf.successes;
        state.observations.row(e) = env.reset_env(e).transpose();
      } else {
        state.observations.row(e) = step.observations.row(e);
      }
    }
  }
  buf.last_values =
      agent.values(encoding::minmax_normalize_rows(state.observations, bounds));
  buf.activity_rate = activity / horizon;
  return buf;
}

GaeResult compute_gae(const Eigen::VectorXd& rewards,
                      const Eigen::VectorXd& values,
                      const Eigen::VectorXd& dones,
                      const Eigen::VectorXd& last_values, int num_envs,
                      double gamma, double lambda) {
  const Eigen::Index total = rewards.size();
  if (num_envs < 1 || values.size() != total || dones.size() != total ||
      last_values.size() != num_envs || total % num_envs != 0) {
    throw ShapeError("compute_gae: inconsistent array shapes");
  }
  const int horizon = static_cast<int>(total / num_envs);
  GaeResult out;
  out.advantages.resize(total);
  for (int e = 0; e < num_envs; ++e) {
    double next_adv = 0.0;
    double next_value = last_values[e];
    for (int t = horizon - 1; t >= 0; --t) {
      const int i = t * num_envs + e;
      const double live = 1.0 - dones[i];
      const double delta = rewards[i] + gamma * next_value * live - values[i];
      next_adv = delta + gamma * lambda * live * next_adv;
      out.advantages[i] = next_adv;
      next_value = values[i];
    }
  }
  out.returns = out.advantages + values;
  return out;
}

Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& adv) {
  if (adv.size() == 0) return adv;
  const double mean = adv.mean();
  Eigen::VectorXd centered = adv.array() - mean;
  const double std = std::sqrt(centered.squaredNorm() / double(adv.size()));
  if (std < 1e-12) return centered;
  return centered / std;
}

Adam::Adam(const PolicyParams& like, double lr, double beta1, double beta2,
           double eps)
    : m_(PolicyParams::zeros_like(like)),
      v_(PolicyParams::zeros_like(like)),
      lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::step(PolicyParams& params, const PolicyParams& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, double(t_));
  const double c2 = 1.0 - std::pow(beta2_, double(t_));
  auto apply = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  apply(params.w_in, grads.w_in, m_.w_in, v_.w_in);
  apply(params.w_out, grads.w_out, m_.w_out, v_.w_out);
  if (params.log_std.size() > 0) {
    apply(params.log_std, grads.log_std, m_.log_std, v_.log_std);
  }
}

double clip_grad_norm(PolicyParams& grads, double max_norm) {
  const double norm = std::sqrt(grads.w_in.squaredNorm() +
                                grads.w_out.squaredNorm() +
                                grads.log_std.squaredNorm());
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    grads.w_in *= scale;
    grads.w_out *= scale;
    grads.log_std *= scale;
  }
  return norm;
}

Optimizers Optimizers::for_agent(const ActorCritic& agent,
                                 const PpoConfig& cfg) {
  return {Adam(agent.actor(), cfg.learning_rate, cfg.adam_beta1,
               cfg.adam_beta2, cfg.adam_eps),
          Adam(agent.critic(), cfg.learning_rate, cfg.adam_beta1,
               cfg.adam_beta2, cfg.adam_eps)};
}

LossStats ppo_update(ActorCritic& agent, const RolloutBuffer& buffer,
                     const GaeResult& gae, const PpoConfig& cfg,
                     Optimizers& opt, Rng& rng) {
  const int total = buffer.size();
  if (total == 0 || gae.advantages.size() != total ||
      gae.returns.size() != total) {
    throw ShapeError("ppo_update: buffer and advantages disagree");
  }
  const NetworkSpec& aspec = agent.actor_spec();
  const NetworkSpec& cspec = agent.critic_spec();
  const ModelKind kind = agent.kind();
  const Eigen::VectorXd adv = normalize_advantages(gae.advantages);
  const int n_mb = std::min(cfg.minibatches, total);

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);

  LossStats stats;
  long updates = 0;
  long clipped = 0;
  long samples_seen = 0;
  double kl_sum = 0.0;
  SampleTrace trace;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int mb = 0; mb < n_mb; ++mb) {
      const int begin = static_cast<int>(long(total) * mb / n_mb);
      const int end = static_cast<int>(long(total) * (mb + 1) / n_mb);
      const double inv = 1.0 / double(end - begin);
      const bool first = epoch == 0 && mb == 0;

      PolicyParams& actor = agent.actor();
      PolicyParams& critic = agent.critic();
      snn::WeightGrads ga =
          snn::WeightGrads::zeros(aspec.n0, aspec.n1, aspec.n2);
      snn::WeightGrads gc =
          snn::WeightGrads::zeros(cspec.n0, cspec.n1, cspec.n2);
      Eigen::VectorXd g_log_std = Eigen::VectorXd::Zero(aspec.n2);
      const Eigen::ArrayXd inv_var = (-2.0 * actor.log_std.array()).exp();

      double actor_loss = 0.0;
      double critic_loss = 0.0;
      double clipped_obj = 0.0;
      double unclipped_obj = 0.0;
      Eigen::VectorXd upstream(aspec.n2);
      Eigen::VectorXd upstream_c(1);

      for (int k = begin; k < end; ++k) {
        const int i = order[k];
        const Eigen::VectorXd x = buffer.observations.row(i).transpose();
        const Eigen::VectorXd raw = net_forward(kind, aspec, actor, x, trace);
        const Eigen::VectorXd mu = raw.array().tanh();
        const Eigen::VectorXd a = buffer.actions.row(i).transpose();
        const double logp = gaussian_log_prob(a, mu, actor.log_std);
        const double ratio = std::exp(logp - buffer.log_probs[i]);
        const double A = adv[i];
        const double surr1 = ratio * A;
        const double surr2 = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * A;
        actor_loss -= std::min(surr1, surr2);
        kl_sum += buffer.log_probs[i] - logp;
        if (std::abs(ratio - 1.0) > cfg.clip) ++clipped;
        ++samples_seen;
        if (first) {
          stats.first_ratio_deviation =
              std::max(stats.first_ratio_deviation, std::abs(ratio - 1.0));
          clipped_obj += std::min(surr1, surr2);
          unclipped_obj += surr1;
        }

        // d(-min(surr1, surr2)) / d logp, averaged over the minibatch.
        const double coef = surr1 <= surr2 ? -ratio * A * inv : 0.0;
        if (coef != 0.0) {
          const Eigen::ArrayXd diff = (a - mu).array();
          upstream = (coef * diff * inv_var * (1.0 - mu.array().square()))
                         .matrix();
          g_log_std.array() += coef * (diff.square() * inv_var - 1.0);
          net_backward(kind, aspec, actor, trace, upstream, ga);
        }

        const double value = net_forward(kind, cspec, critic, x, trace)[0];
        const double err = value - gae.returns[i];
        critic_loss += err * err;
        upstream_c[0] = 2.0 * cfg.value_coef * err * inv;
        net_backward(kind, cspec, critic, trace, upstream_c, gc);
      }
      actor_loss *= inv;
      critic_loss *= inv;
      const double entropy = gaussian_entropy(actor.log_std);
      g_log_std.array() -= cfg.entropy_coef;

      const double total_loss =
          actor_loss + cfg.value_coef * critic_loss - cfg.entropy_coef * entropy;
      if (!std::isfinite(total_loss) || !ga.w_in.allFinite() ||
          !ga.w_out.allFinite() || !gc.w_in.allFinite() ||
          !gc.w_out.allFinite() || !g_log_std.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite PPO loss at epoch " << epoch << ", minibatch " << mb
            << ": actor=" << actor_loss << " critic=" << critic_loss
            << " entropy=" << entropy;
        throw NumericalError(msg.str());
      }

      PolicyParams actor_grads{std::move(ga.w_in), std::move(ga.w_out),
                               std::move(g_log_std)};
      PolicyParams critic_grads{std::move(gc.w_in), std::move(gc.w_out),
                                Eigen::VectorXd()};
      clip_grad_norm(actor_grads, cfg.max_grad_norm);
      clip_grad_norm(critic_grads, cfg.max_grad_norm);
      opt.actor.step(actor, actor_grads);
      opt.critic.step(critic, critic_grads);
      actor.log_std = actor.log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);

      if (first) {
        stats.first_clipped_objective = clipped_obj * inv;
        stats.first_unclipped_objective = unclipped_obj * inv;
      }
      stats.actor_loss += actor_loss;
      stats.critic_loss += critic_loss;
      stats.entropy += entropy;
      ++updates;
    }
  }
  stats.actor_loss /= double(updates);
  stats.critic_loss /= double(updates);
  stats.entropy /= double(updates);
  stats.clip_fraction = double(clipped) / double(samples_seen);
  stats.approx_kl = kl_sum / double(samples_seen);
  return stats;
}

void train_loop(ActorCritic& agent, VecEnv& env, const PpoConfig& cfg,
                std::uint64_t seed, long updates,
                const std::function<bool(const UpdateContext&)>& on_update) {
  cfg.validate();
  Rng action_rng = make_rng(seed, "action-sampling");
  Rng minibatch_rng = make_rng(seed, "minibatch");
  Optimizers opt = Optimizers::for_agent(agent, cfg);
  RolloutState state;
  long env_steps = 0;
  for (long u = 0; u < updates; ++u) {
    env.set_global_update(u);
    const RolloutBuffer buffer =
        collect_rollout(agent, env, cfg.horizon, action_rng, state);
    const GaeResult gae =
        compute_gae(buffer.rewards * cfg.reward_scale, buffer.values,
                    buffer.dones, buffer.last_values, buffer.num_envs,
                    cfg.gamma, cfg.gae_lambda);
    const LossStats loss =
        ppo_update(agent, buffer, gae, cfg, opt, minibatch_rng);
    env_steps += buffer.size();
    UpdateContext ctx{u, env_steps, &buffer, &loss};
    if (on_update && !on_update(ctx)) break;
  }
}

QuadraticToyEnv::QuadraticToyEnv(int num_envs, double target)
    : num_envs_(num_envs), target_(target), bounds_({0.0}, {1.0}) {
  if (num_envs < 1) throw std::invalid_argument("num_envs must be >= 1");
}

Eigen::MatrixXd QuadraticToyEnv::reset_all() {
  return Eigen::MatrixXd::Constant(num_envs_, 1, 0.5);
}

Eigen::VectorXd QuadraticToyEnv::reset_env(int) {
  return Eigen::VectorXd::Constant(1, 0.5);
}

EnvStep QuadraticToyEnv::step(const Eigen::MatrixXd& actions) {
  if (actions.rows() != num_envs_ || actions.cols() != 1) {
    throw ShapeError("toy env expects num_envs x 1 actions");
  }
  EnvStep out;
  out.observations = reset_all();
  out.rewards = -(actions.col(0).array() - target_).square().matrix();
  out.done.assign(num_envs_, 1);
  out.success.assign(num_envs_, 0);
  return out;
}

}  // namespace spikegrasp::ppo
