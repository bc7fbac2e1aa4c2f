#pragma once

// Two-weight-layer actor and critic networks. The spiking variant runs the
// unrolled LIF -> N-LIF network and reads out the final-step membrane; the
// conventional baseline computes W_out^T relu(W_in^T x) with identical
// parameter shapes. Actor means are tanh-bounded, critic values are not.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spikegrasp/encoding.hpp"
#include "spikegrasp/rng.hpp"
#include "spikegrasp/snn.hpp"

namespace spikegrasp {

enum class ModelKind { kSnn, kAnn };

const char* to_string(ModelKind kind);

struct NetworkSpec {
  int n0 = 18;
  int n1 = 256;
  int n2 = 7;
  int steps = 8;  // simulation steps per forward pass
  encoding::EncoderMode encoder = encoding::EncoderMode::kCurrent;
  snn::LifParams lif;
  snn::NlifParams nlif;
  snn::SurrogateSpec surrogate;
  // Weights are U(-g / sqrt(fan_in), g / sqrt(fan_in)) per layer.
  double init_gain_in = 1.0;
  double init_gain_out = 1.0;

  void validate() const;
  snn::UnrollOptions unroll_options() const;
};

struct PolicyParams {
  Eigen::MatrixXd w_in;     // n0 x n1
  Eigen::MatrixXd w_out;    // n1 x n2
  Eigen::VectorXd log_std;  // n2 for actors, empty for critics

  static PolicyParams zeros_like(const PolicyParams& p);
  bool all_finite() const;
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kInitialLogStd = -0.5;

PolicyParams init_params(const NetworkSpec& spec, std::uint64_t seed,
                         bool with_log_std);

struct ForwardStats {
  int batch = 0;
  int steps = 0;
  Eigen::MatrixXi spike_counts;                 // batch x n1, entries in [0, T]
  std::vector<Eigen::MatrixXd> membrane;        // per sample, T x n2

  // Fraction of (sample, step, neuron) slots carrying a spike.
  double spike_rate() const;
};

struct AnnStats {
  Eigen::MatrixXd inputs;  // batch x n0
  Eigen::MatrixXd hidden;  // batch x n1, post-relu
  double r_in = 0.0;
  double r_out = 0.0;
};

// obs rows are normalized observations.
Eigen::MatrixXd actor_forward(const PolicyParams& params,
                              const Eigen::MatrixXd& obs,
                              const NetworkSpec& spec,
                              ForwardStats* stats = nullptr);

Eigen::VectorXd critic_forward(const PolicyParams& params,
                               const Eigen::MatrixXd& obs,
                               const NetworkSpec& spec);

// Raw outputs W_out^T relu(W_in^T x) (no tanh).
Eigen::MatrixXd ann_forward(const PolicyParams& params,
                            const Eigen::MatrixXd& obs,
                            const NetworkSpec& spec, AnnStats* stats = nullptr);

// Single-sample forward/backward used by the trainer. The readout is the
// raw network output: final N-LIF membrane (SNN) or linear output (ANN).
struct SampleTrace {
  snn::UnrollTrace snn;
  Eigen::VectorXd x;
  Eigen::VectorXd hidden_pre;
  Eigen::VectorXd hidden;
};

Eigen::VectorXd net_forward(ModelKind kind, const NetworkSpec& spec,
                            const PolicyParams& params,
                            const Eigen::VectorXd& x, SampleTrace& trace);

void net_backward(ModelKind kind, const NetworkSpec& spec,
                  const PolicyParams& params, const SampleTrace& trace,
                  const Eigen::VectorXd& upstream, snn::WeightGrads& grads);

struct ActionSample {
  Eigen::VectorXd raw;      // pre-clamp Gaussian draw
  Eigen::VectorXd clamped;  // sent to the environment
  double log_prob = 0.0;    // diagonal Gaussian density at `raw`
};

ActionSample sample_action(const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& log_std, Rng& rng);

double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& log_std);

// Sum over dimensions of log_std + 0.5 * ln(2 pi e).
double gaussian_entropy(const Eigen::VectorXd& log_std);

// Actor and critic with identical architecture; only the output width differs.
class ActorCritic {
 public:
  ActorCritic() = default;
  ActorCritic(ModelKind kind, const NetworkSpec& actor_spec,
              std::uint64_t seed);
  ActorCritic(ModelKind kind, const NetworkSpec& actor_spec,
              PolicyParams actor, PolicyParams critic);

  ModelKind kind() const { return kind_; }
  const NetworkSpec& actor_spec() const { return actor_spec_; }
  const NetworkSpec& critic_spec() const { return critic_spec_; }
  PolicyParams& actor() { return actor_; }
  const PolicyParams& actor() const { return actor_; }
  PolicyParams& critic() { return critic_; }
  const PolicyParams& critic() const { return critic_; }

  // tanh-bounded action means, batch x n2.
  Eigen::MatrixXd action_means(const Eigen::MatrixXd& obs,
                               ForwardStats* snn_stats = nullptr,
                               AnnStats* ann_stats = nullptr) const;
  Eigen::VectorXd values(const Eigen::MatrixXd& obs) const;

 private:
  ModelKind kind_ = ModelKind::kSnn;
  NetworkSpec actor_spec_;
  NetworkSpec critic_spec_;
  PolicyParams actor_;
  PolicyParams critic_;
};

NetworkSpec critic_spec_for(const NetworkSpec& actor_spec);

}  // namespace spikegrasp
