#pragma once

// Proximal policy optimization with a clipped surrogate objective and
// generalized advantage estimation, over a batch of environments.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "spikegrasp/encoding.hpp"
#include "spikegrasp/network.hpp"
#include "spikegrasp/rng.hpp"

namespace spikegrasp::ppo {

struct PpoConfig {
  double clip = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double learning_rate = 3e-4;
  int epochs = 4;
  int minibatches = 4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  int horizon = 32;
  long total_updates = 1000;
  double max_grad_norm = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Rewards are multiplied by this before advantage estimation so that
  // returns stay inside the critic's membrane range. Logged rewards are raw.
  double reward_scale = 1.0;

  void validate() const;
};

struct EnvStep {
  Eigen::MatrixXd observations;  // raw, num_envs x obs_dim
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> done;
  std::vector<std::uint8_t> success;
};

// Batch of environments driven by the trainer. Observations are raw; the
// trainer normalizes them with observation_bounds().
class VecEnv {
 public:
  virtual ~VecEnv() = default;
  virtual int num_envs() const = 0;
  virtual int observation_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual const encoding::NormalizationBounds& observation_bounds() const = 0;
  virtual Eigen::MatrixXd reset_all() = 0;
  virtual Eigen::VectorXd reset_env(int i) = 0;
  // actions are already clamped to [-1, 1]
  virtual EnvStep step(const Eigen::MatrixXd& actions) = 0;
  // Curriculum clock; the trainer calls this with the update counter.
  virtual void set_global_update(long update) { (void)update; }
};

struct RolloutBuffer {
  int horizon = 0;
  int num_envs = 0;
  Eigen::MatrixXd observations;  // (H * N) x obs_dim, normalized
  Eigen::MatrixXd actions;       // (H * N) x act_dim, pre-clamp samples
  Eigen::VectorXd log_probs;
  Eigen::VectorXd rewards;       // raw environment rewards
  Eigen::VectorXd values;
  Eigen::VectorXd dones;
  Eigen::VectorXd last_values;   // bootstrap V(s_H), one per env
  long episodes_finished = 0;
  long successes = 0;
  double activity_rate = 0.0;    // SNN spike rate or ANN hidden activity

  int size() const { return horizon * num_envs; }
  static int index(int t, int env, int num_envs) { return t * num_envs + env; }
};

// Carries the latest observation between rollouts.
struct RolloutState {
  Eigen::MatrixXd observations;  // raw
  bool initialized = false;
};

// Runs H steps on every environment with stochastic actions. Finished
// environments are reset in place.
RolloutBuffer collect_rollout(const ActorCritic& agent, VecEnv& env, int horizon,
                              Rng& rng, RolloutState& state);

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

// Arrays are laid out t-major (index t * num_envs + env); last_values holds
// V(s_H) per environment.
GaeResult compute_gae(const Eigen::VectorXd& rewards,
                      const Eigen::VectorXd& values,
                      const Eigen::VectorXd& dones,
                      const Eigen::VectorXd& last_values, int num_envs,
                      double gamma, double lambda);

// Zero mean, unit (population) standard deviation.
Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& adv);

class Adam {
 public:
  Adam() = default;
  Adam(const PolicyParams& like, double lr, double beta1, double beta2,
       double eps);
  void step(PolicyParams& params, const PolicyParams& grads);
  long steps() const { return t_; }

 private:
  PolicyParams m_, v_;
  double lr_ = 0, beta1_ = 0, beta2_ = 0, eps_ = 0;
  long t_ = 0;
};

// Scales `grads` in place so that its global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(PolicyParams& grads, double max_norm);

struct LossStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  // max |ratio - 1| over the first minibatch of the first epoch
  double first_ratio_deviation = 0.0;
  // mean of clipped and unclipped surrogate objectives over that minibatch
  double first_clipped_objective = 0.0;
  double first_unclipped_objective = 0.0;
};

struct Optimizers {
  Adam actor;
  Adam critic;

  static Optimizers for_agent(const ActorCritic& agent, const PpoConfig& cfg);
};

LossStats ppo_update(ActorCritic& agent, const RolloutBuffer& buffer,
                     const GaeResult& gae, const PpoConfig& cfg,
                     Optimizers& opt, Rng& rng);

struct UpdateContext {
  long update = 0;  // zero-based index of the update just finished
  long env_steps = 0;
  const RolloutBuffer* buffer = nullptr;
  const LossStats* loss = nullptr;
};

// collect -> GAE -> update, `updates` times. The callback runs after every
// update; returning false stops training early.
void train_loop(ActorCritic& agent, VecEnv& env, const PpoConfig& cfg,
                std::uint64_t seed, long updates,
                const std::function<bool(const UpdateContext&)>& on_update);

// One-step episodes with reward -(a - target)^2 on the first action
// dimension; a fixed observation of 0.5. Used to check that the optimizer
// finds a known optimum.
class QuadraticToyEnv : public VecEnv {
 public:
  explicit QuadraticToyEnv(int num_envs = 16, double target = 0.4);
  int num_envs() const override { return num_envs_; }
  int observation_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  const encoding::NormalizationBounds& observation_bounds() const override {
    return bounds_;
  }
  Eigen::MatrixXd reset_all() override;
  Eigen::VectorXd reset_env(int i) override;
  EnvStep step(const Eigen::MatrixXd& actions) override;

 private:
  int num_envs_;
  double target_;
  encoding::NormalizationBounds bounds_;
};

}  // namespace spikegrasp::ppo
