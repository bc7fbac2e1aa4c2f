#include "spikegrasp/network.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spikegrasp/error.hpp"

namespace spikegrasp {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2 pi)

void check_obs(const Eigen::MatrixXd& obs, const NetworkSpec& spec) {
  if (obs.cols() != spec.n0) {
    throw ShapeError("observation width " + std::to_string(obs.cols()) +
                     " does not match n0 = " + std::to_string(spec.n0));
  }
}

void check_params(const PolicyParams& p, const NetworkSpec& spec) {
  if (p.w_in.rows() != spec.n0 || p.w_in.cols() != spec.n1 ||
      p.w_out.rows() != spec.n1 || p.w_out.cols() != spec.n2) {
    throw ShapeError("parameter shapes do not match the network spec");
  }
}

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols,
                               double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  // Fill row-major so the draw order does not depend on storage order.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

}  // namespace

const char* to_string(ModelKind kind) {
  return kind == ModelKind::kSnn ? "snn" : "ann";
}

void NetworkSpec::validate() const {
  if (n0 < 1 || n1 < 1 || n2 < 1) {
    throw std::invalid_argument("layer sizes must be at least 1");
  }
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  if (encoder == encoding::EncoderMode::kLatency && steps < 2) {
    throw std::invalid_argument("latency encoding needs at least 2 steps");
  }
  lif.validate();
  nlif.validate();
  if (!(surrogate.width > 0.0)) {
    throw std::invalid_argument("surrogate width must be positive");
  }
  if (!(init_gain_in > 0.0) || !(init_gain_out > 0.0)) {
    throw std::invalid_argument("init gains must be positive");
  }
}

snn::UnrollOptions NetworkSpec::unroll_options() const {
  snn::UnrollOptions opt;
  opt.lif = lif;
  opt.nlif = nlif;
  opt.surrogate = surrogate;
  return opt;
}

NetworkSpec critic_spec_for(const NetworkSpec& actor_spec) {
  NetworkSpec spec = actor_spec;
  spec.n2 = 1;
  return spec;
}

PolicyParams PolicyParams::zeros_like(const PolicyParams& p) {
  return {Eigen::MatrixXd::Zero(p.w_in.rows(), p.w_in.cols()),
          Eigen::MatrixXd::Zero(p.w_out.rows(), p.w_out.cols()),
          Eigen::VectorXd::Zero(p.log_std.size())};
}

bool PolicyParams::all_finite() const {
  return w_in.allFinite() && w_out.allFinite() && log_std.allFinite();
}

PolicyParams init_params(const NetworkSpec& spec, std::uint64_t seed,
                         bool with_log_std) {
  spec.validate();
  Rng rng(seed);
  PolicyParams p;
  p.w_in = uniform_matrix(spec.n0, spec.n1,
                          spec.init_gain_in / std::sqrt(double(spec.n0)), rng);
  p.w_out = uniform_matrix(spec.n1, spec.n2,
                           spec.init_gain_out / std::sqrt(double(spec.n1)), rng);
  if (with_log_std) p.log_std = Eigen::VectorXd::Constant(spec.n2, kInitialLogStd);
  return p;
}

double ForwardStats::spike_rate() const {
  if (batch == 0 || steps == 0 || spike_counts.cols() == 0) return 0.0;
  return double(spike_counts.sum()) /
         (double(batch) * double(steps) * double(spike_counts.cols()));
}

Eigen::MatrixXd actor_forward(const PolicyParams& params,
                              const Eigen::MatrixXd& obs,
                              const NetworkSpec& spec, ForwardStats* stats) {
  check_obs(obs, spec);
  check_params(params, spec);
  const auto opt = spec.unroll_options();
  const Eigen::Index batch = obs.rows();
  Eigen::MatrixXd means(batch, spec.n2);
  if (stats) {
    stats->batch = static_cast<int>(batch);
    stats->steps = spec.steps;
    stats->spike_counts = Eigen::MatrixXi::Zero(batch, spec.n1);
    stats->membrane.assign(batch, Eigen::MatrixXd());
  }
  snn::UnrollTrace trace;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto input =
        encoding::make_input(obs.row(b).transpose(), spec.steps, spec.encoder);
    snn::unroll_forward_into(params.w_in, params.w_out, input, opt, trace);
    means.row(b) = trace.readout().array().tanh().transpose();
    if (stats) {
      stats->spike_counts.row(b) =
          trace.hidden_out.colwise().sum().cast<int>();
      stats->membrane[b] = trace.membrane;
    }
  }
  return means;
}

Eigen::VectorXd critic_forward(const PolicyParams& params,
                               const Eigen::MatrixXd& obs,
                               const NetworkSpec& spec) {
  check_obs(obs, spec);
  check_params(params, spec);
  if (spec.n2 != 1) throw ShapeError("critic must have a single output");
  const auto opt = spec.unroll_options();
  Eigen::VectorXd values(obs.rows());
  snn::UnrollTrace trace;
  for (Eigen::Index b = 0; b < obs.rows(); ++b) {
    const auto input =
        encoding::make_input(obs.row(b).transpose(), spec.steps, spec.encoder);
    snn::unroll_forward_into(params.w_in, params.w_out, input, opt, trace);
    values[b] = trace.readout()[0];
  }
  return values;
}

Eigen::MatrixXd ann_forward(const PolicyParams& params,
                            const Eigen::MatrixXd& obs,
                            const NetworkSpec& spec, AnnStats* stats) {
  check_obs(obs, spec);
  check_params(params, spec);
  const Eigen::MatrixXd hidden = (obs * params.w_in).cwiseMax(0.0);
  Eigen::MatrixXd out = hidden * params.w_out;
  if (stats) {
    stats->inputs = obs;
    stats->hidden = hidden;
    const double n_in = double(obs.size());
    const double n_hidden = double(hidden.size());
    stats->r_in = n_in > 0 ? (obs.array() > 0.0).count() / n_in : 0.0;
    stats->r_out = n_hidden > 0 ? (hidden.array() > 0.0).count() / n_hidden : 0.0;
  }
  if (!out.allFinite()) throw NumericalError("non-finite ANN output");
  return out;
}

Eigen::VectorXd net_forward(ModelKind kind, const NetworkSpec& spec,
                            const PolicyParams& params,
                            const Eigen::VectorXd& x, SampleTrace& trace) {
  if (x.size() != spec.n0) throw ShapeError("sample width does not match n0");
  if (kind == ModelKind::kSnn) {
    const auto input = encoding::make_input(x, spec.steps, spec.encoder);
    snn::unroll_forward_into(params.w_in, params.w_out, input,
                             spec.unroll_options(), trace.snn);
    return trace.snn.readout();
  }
  trace.x = x;
  trace.hidden_pre.noalias() = params.w_in.transpose() * x;
  trace.hidden = trace.hidden_pre.cwiseMax(0.0);
  Eigen::VectorXd out = params.w_out.transpose() * trace.hidden;
  if (!out.allFinite()) throw NumericalError("non-finite ANN output");
  return out;
}

void net_backward(ModelKind kind, const NetworkSpec& spec,
                  const PolicyParams& params, const SampleTrace& trace,
                  const Eigen::VectorXd& upstream, snn::WeightGrads& grads) {
  if (kind == ModelKind::kSnn) {
    snn::unroll_backward_accumulate(params.w_out, trace.snn, upstream,
                                    spec.unroll_options(), grads);
    return;
  }
  grads.w_out.noalias() += trace.hidden * upstream.transpose();
  Eigen::VectorXd d_hidden = params.w_out * upstream;
  for (Eigen::Index j = 0; j < d_hidden.size(); ++j) {
    if (trace.hidden_pre[j] <= 0.0) d_hidden[j] = 0.0;
  }
  grads.w_in.noalias() += trace.x * d_hidden.transpose();
}

double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& log_std) {
  if (x.size() != mean.size() || x.size() != log_std.size()) {
    throw ShapeError("gaussian_log_prob: shape mismatch");
  }
  double lp = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double z = (x[k] - mean[k]) * std::exp(-log_std[k]);
    lp += -0.5 * z * z - log_std[k] - 0.5 * kLog2Pi;
  }
  return lp;
}

double gaussian_entropy(const Eigen::VectorXd& log_std) {
  return log_std.sum() + 0.5 * (kLog2Pi + 1.0) * double(log_std.size());
}

ActionSample sample_action(const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& log_std, Rng& rng) {
  if (mean.size() != log_std.size()) {
    throw ShapeError("sample_action: mean and log_std sizes differ");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample out;
  out.raw.resize(mean.size());
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    out.raw[k] = mean[k] + std::exp(log_std[k]) * normal(rng);
  }
  out.clamped = out.raw.cwiseMax(-1.0).cwiseMin(1.0);
  out.log_prob = gaussian_log_prob(out.raw, mean, log_std);
  return out;
}

ActorCritic::ActorCritic(ModelKind kind, const NetworkSpec& actor_spec,
                         std::uint64_t seed)
    : kind_(kind),
      actor_spec_(actor_spec),
      critic_spec_(critic_spec_for(actor_spec)),
      actor_(init_params(actor_spec_, substream_seed(seed, "actor-init"), true)),
      critic_(init_params(critic_spec_, substream_seed(seed, "critic-init"),
                          false)) {}

ActorCritic::ActorCritic(ModelKind kind, const NetworkSpec& actor_spec,
                         PolicyParams actor, PolicyParams critic)
    : kind_(kind),
      actor_spec_(actor_spec),
      critic_spec_(critic_spec_for(actor_spec)),
      actor_(std::move(actor)),
      critic_(std::move(critic)) {
  actor_spec_.validate();
  check_params(actor_, actor_spec_);
  check_params(critic_, critic_spec_);
  if (actor_.log_std.size() != actor_spec_.n2) {
    throw ShapeError("actor log_std must have n2 entries");
  }
}

Eigen::MatrixXd ActorCritic::action_means(const Eigen::MatrixXd& obs,
                                          ForwardStats* snn_stats,
                                          AnnStats* ann_stats) const {
  if (kind_ == ModelKind::kSnn) {
    return actor_forward(actor_, obs, actor_spec_, snn_stats);
  }
  return ann_forward(actor_, obs, actor_spec_, ann_stats).array().tanh();
}

Eigen::VectorXd ActorCritic::values(const Eigen::MatrixXd& obs) const {
  if (kind_ == ModelKind::kSnn) {
    return critic_forward(critic_, obs, critic_spec_);
  }
  return ann_forward(critic_, obs, critic_spec_).col(0);
}

}  // namespace spikegrasp
