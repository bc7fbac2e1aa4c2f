#include "spikegrasp/snn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spikegrasp/error.hpp"

namespace spikegrasp::snn {
namespace {

void check_current(std::span<const double> current, std::size_t n) {
  if (current.size() != n) {
    throw ShapeError("input current length does not match layer size");
  }
  for (double c : current) {
    if (!std::isfinite(c)) {
      throw NumericalError("non-finite input current (upstream divergence)");
    }
  }
}

}  // namespace

void LifParams::validate() const {
  const double a = leak();
  if (!(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("LIF lambda * dt must lie in (0, 1]");
  }
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("LIF threshold must be positive");
  }
  if (!std::isfinite(resistance)) {
    throw std::invalid_argument("LIF resistance must be finite");
  }
}

void NlifParams::validate() const {
  const double a = leak();
  if (!(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("N-LIF lambda * dt must lie in (0, 1]");
  }
  if (!(v_clip > 0.0)) {
    throw std::invalid_argument("N-LIF v_clip must be positive");
  }
}

LayerState LayerState::zeros(std::size_t n, bool spiking) {
  LayerState s;
  s.v.assign(n, 0.0);
  if (spiking) s.s.assign(n, 0);
  return s;
}

LayerState lif_step(const LayerState& state, std::span<const double> current,
                    const LifParams& p) {
  check_current(current, state.size());
  const double a = p.leak();
  LayerState next;
  next.v.resize(state.size());
  next.s.resize(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    double v = state.v[i] + a * (-state.v[i] + p.resistance * current[i]);
    const bool fire = v >= p.threshold;
    next.s[i] = fire ? 1 : 0;
    next.v[i] = fire ? p.v_reset : v;
  }
  return next;
}

LayerState nlif_step(const LayerState& state, std::span<const double> current,
                     const NlifParams& p) {
  check_current(current, state.size());
  const double a = p.leak();
  LayerState next;
  next.v.resize(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double v = state.v[i] + a * (-state.v[i] + current[i]);
    next.v[i] = std::clamp(v, -p.v_clip, p.v_clip);
  }
  return next;
}

double surrogate_grad(double x, const SurrogateSpec& spec) {
  const double w = spec.width;
  switch (spec.kind) {
    case SurrogateKind::kRectangular:
      return std::abs(x) <= w ? 1.0 / (2.0 * w) : 0.0;
    case SurrogateKind::kFastSigmoid: {
      const double d = 1.0 + w * std::abs(x);
      return 0.5 * w / (d * d);
    }
  }
  return 0.0;
}

std::vector<double> surrogate_grad(std::span<const double> v_minus_theta,
                                   const SurrogateSpec& spec) {
  if (!(spec.width > 0.0)) {
    throw std::invalid_argument("surrogate width must be positive");
  }
  std::vector<double> out(v_minus_theta.size());
  std::transform(v_minus_theta.begin(), v_minus_theta.end(), out.begin(),
                 [&](double x) { return surrogate_grad(x, spec); });
  return out;
}

InputSequence InputSequence::constant(const Eigen::VectorXd& x, int steps) {
  InputSequence seq;
  seq.rows = x.transpose();
  seq.steps = steps;
  return seq;
}

WeightGrads WeightGrads::zeros(Eigen::Index n0, Eigen::Index n1,
                               Eigen::Index n2) {
  return {Eigen::MatrixXd::Zero(n0, n1), Eigen::MatrixXd::Zero(n1, n2)};
}

void unroll_forward_into(const Eigen::MatrixXd& w_in,
                         const Eigen::MatrixXd& w_out,
                         const InputSequence& input, const UnrollOptions& opt,
                         UnrollTrace& trace) {
  const Eigen::Index n0 = w_in.rows();
  const Eigen::Index n1 = w_in.cols();
  const Eigen::Index n2 = w_out.cols();
  const int steps = input.steps;
  if (w_out.rows() != n1) {
    throw ShapeError("w_out rows must equal w_in columns");
  }
  if (input.width() != n0) {
    throw ShapeError("input width does not match w_in rows");
  }
  if (steps < 1 || (!input.is_constant() && input.rows.rows() != steps)) {
    throw ShapeError("input sequence length does not match step count");
  }
  if (!input.rows.allFinite()) {
    throw NumericalError("non-finite network input");
  }

  trace.input = input;
  trace.hidden_pre.resize(steps, n1);
  trace.hidden_out.resize(steps, n1);
  trace.output_pre.resize(steps, n2);
  trace.membrane.resize(steps, n2);

  const double a1 = opt.lif.leak();
  const double a2 = opt.nlif.leak();
  const double gain = a1 * opt.lif.resistance;
  const double theta = opt.lif.threshold;
  const double v_reset = opt.lif.v_reset;
  const double clip = opt.nlif.v_clip;
  const bool spiking = opt.activation == Activation::kSpike;

  Eigen::VectorXd drive = w_in.transpose() * input.step(0).transpose();
  Eigen::VectorXd v1 = Eigen::VectorXd::Zero(n1);
  Eigen::VectorXd v2 = Eigen::VectorXd::Zero(n2);
  Eigen::VectorXd out_current(n2);

  for (int t = 0; t < steps; ++t) {
    if (t > 0 && !input.is_constant()) {
      drive.noalias() = w_in.transpose() * input.step(t).transpose();
    }
    auto pre = trace.hidden_pre.row(t);
    auto out = trace.hidden_out.row(t);
    pre = (v1.array() + a1 * (-v1.array()) + gain * drive.array())
              .matrix()
              .transpose();
    if (spiking) {
      out_current.setZero();
      for (Eigen::Index j = 0; j < n1; ++j) {
        if (pre[j] >= theta) {
          out[j] = 1.0;
          v1[j] = v_reset;
          out_current += w_out.row(j).transpose();
        } else {
          out[j] = 0.0;
          v1[j] = pre[j];
        }
      }
    } else {
      const Eigen::ArrayXd u = pre.transpose().array();
      const Eigen::ArrayXd sig =
          1.0 / (1.0 + (-opt.sigmoid_steepness * (u - theta)).exp());
      out = sig.matrix().transpose();
      v1 = (u * (1.0 - sig) + v_reset * sig).matrix();
      out_current.noalias() = w_out.transpose() * out.transpose();
    }
    for (Eigen::Index k = 0; k < n2; ++k) {
      const double u = v2[k] + a2 * (-v2[k] + out_current[k]);
      trace.output_pre(t, k) = u;
      v2[k] = std::clamp(u, -clip, clip);
      trace.membrane(t, k) = v2[k];
    }
  }
  if (!v2.allFinite()) {
    throw NumericalError("non-finite output membrane");
  }
}

UnrollTrace unroll_forward(const Eigen::MatrixXd& w_in,
                           const Eigen::MatrixXd& w_out,
                           const InputSequence& input,
                           const UnrollOptions& opt) {
  UnrollTrace trace;
  unroll_forward_into(w_in, w_out, input, opt, trace);
  return trace;
}

void unroll_backward_accumulate(const Eigen::MatrixXd& w_out,
                                const UnrollTrace& trace,
                                const Eigen::VectorXd& upstream,
                                const UnrollOptions& opt, WeightGrads& grads) {
  const int steps = trace.steps();
  const Eigen::Index n1 = trace.hidden_pre.cols();
  const Eigen::Index n2 = trace.membrane.cols();
  const Eigen::Index n0 = trace.input.width();
  if (upstream.size() != n2 || w_out.rows() != n1 || w_out.cols() != n2 ||
      trace.hidden_pre.rows() != steps) {
    throw ShapeError("backward inputs do not match the forward trace");
  }
  if (grads.w_in.rows() != n0 || grads.w_in.cols() != n1 ||
      grads.w_out.rows() != n1 || grads.w_out.cols() != n2) {
    throw ShapeError("gradient accumulators have the wrong shape");
  }

  const double a1 = opt.lif.leak();
  const double a2 = opt.nlif.leak();
  const double gain = a1 * opt.lif.resistance;
  const double theta = opt.lif.threshold;
  const double v_reset = opt.lif.v_reset;
  const double clip = opt.nlif.v_clip;
  const bool spiking = opt.activation == Activation::kSpike;
  const double k = opt.sigmoid_steepness;

  // The output layer does not feed back into the hidden layer, so its
  // adjoints for every step can be formed first and contracted in bulk.
  Eigen::MatrixXd d_out_current(steps, n2);
  Eigen::VectorXd dv2 = upstream;
  for (int t = steps - 1; t >= 0; --t) {
    for (Eigen::Index m = 0; m < n2; ++m) {
      const double du = std::abs(trace.output_pre(t, m)) <= clip ? dv2[m] : 0.0;
      d_out_current(t, m) = a2 * du;
      dv2[m] = (1.0 - a2) * du;
    }
  }
  // Explicit axpy loops: these products are too small for blocked GEMM.
  RowMatrix ds = RowMatrix::Zero(steps, n1);
  for (int t = 0; t < steps; ++t) {
    const auto h = trace.hidden_out.row(t).transpose();
    for (Eigen::Index m = 0; m < n2; ++m) {
      const double d = d_out_current(t, m);
      if (d == 0.0) continue;
      grads.w_out.col(m) += d * h;
      ds.row(t) += d * w_out.col(m).transpose();
    }
  }

  Eigen::ArrayXd dv1 = Eigen::ArrayXd::Zero(n1);
  Eigen::ArrayXd fprime(n1);
  RowMatrix d_drive(steps, n1);
  const double w = opt.surrogate.width;
  for (int t = steps - 1; t >= 0; --t) {
    const auto u = trace.hidden_pre.row(t).transpose().array();
    const auto s = trace.hidden_out.row(t).transpose().array();
    if (!spiking) {
      fprime = k * s * (1.0 - s);
    } else if (opt.surrogate.kind == SurrogateKind::kRectangular) {
      fprime = ((u - theta).abs() <= w).cast<double>() * (1.0 / (2.0 * w));
    } else {
      fprime = 0.5 * w / (1.0 + w * (u - theta).abs()).square();
    }
    Eigen::ArrayXd dv_du = 1.0 - s;
    if (!opt.detach_reset) dv_du += (v_reset - u) * fprime;
    const Eigen::ArrayXd du =
        dv1 * dv_du + ds.row(t).transpose().array() * fprime;
    d_drive.row(t) = (gain * du).matrix().transpose();
    dv1 = (1.0 - a1) * du;
  }
  const auto add_outer = [&](const auto& x, const auto& g) {
    const Eigen::VectorXd xv = x.transpose();
    for (Eigen::Index j = 0; j < n1; ++j) {
      if (g[j] != 0.0) grads.w_in.col(j) += g[j] * xv;
    }
  };
  if (trace.input.is_constant()) {
    const Eigen::RowVectorXd sum = d_drive.colwise().sum();
    add_outer(trace.input.step(0), sum);
  } else {
    for (int t = 0; t < steps; ++t) add_outer(trace.input.step(t), d_drive.row(t));
  }
}

WeightGrads unroll_backward(const Eigen::MatrixXd& w_in,
                            const Eigen::MatrixXd& w_out,
                            const UnrollTrace& trace,
                            const Eigen::VectorXd& upstream,
                            const UnrollOptions& opt) {
  if (w_in.cols() != w_out.rows() || w_in.rows() != trace.input.width()) {
    throw ShapeError("weight shapes do not match the forward trace");
  }
  WeightGrads grads = WeightGrads::zeros(w_in.rows(), w_in.cols(), w_out.cols());
  unroll_backward_accumulate(w_out, trace, upstream, opt, grads);
  return grads;
}

}  // namespace spikegrasp::snn
