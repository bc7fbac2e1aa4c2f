#pragma once

// Discrete-time LIF and non-spiking LIF (N-LIF) dynamics, and the two-layer
// unrolled network (input currents -> LIF layer -> N-LIF readout) with
// backpropagation through time using surrogate spike derivatives.
//
// Membrane update (explicit Euler of dv/dt = lambda * (-v + R * I)):
//   v' = v + lambda * dt * (-v + R * I)
// LIF neurons fire when v' >= threshold and are hard-reset to v_reset.
// N-LIF neurons never fire; their membrane is clamped to [-v_clip, v_clip].

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spikegrasp::snn {

struct LifParams {
  double lambda = 0.2;  // 1 / tau, per step
  double resistance = 1.0;
  double threshold = 1.0;
  double dt = 1.0;
  double v_reset = 0.0;

  double leak() const { return lambda * dt; }
  // Throws std::invalid_argument unless lambda * dt in (0, 1] and threshold > 0.
  void validate() const;
};

struct NlifParams {
  double lambda = 0.2;
  double v_clip = 10.0;
  double dt = 1.0;

  double leak() const { return lambda * dt; }
  void validate() const;
};

enum class SurrogateKind { kRectangular, kFastSigmoid };

// `width` is the half window for the rectangular surrogate and the steepness
// k for the fast sigmoid. Both shapes integrate to one.
struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::kRectangular;
  double width = 0.5;
};

struct LayerState {
  std::vector<double> v;
  std::vector<std::uint8_t> s;  // empty for N-LIF layers

  static LayerState zeros(std::size_t n, bool spiking);
  std::size_t size() const { return v.size(); }
};

LayerState lif_step(const LayerState& state, std::span<const double> current,
                    const LifParams& p);

LayerState nlif_step(const LayerState& state, std::span<const double> current,
                     const NlifParams& p);

double surrogate_grad(double v_minus_theta, const SurrogateSpec& spec);
std::vector<double> surrogate_grad(std::span<const double> v_minus_theta,
                                   const SurrogateSpec& spec);

// Hidden-layer nonlinearity of the unrolled network. kSigmoid replaces the
// spike with a genuinely smooth activation sigmoid(k * (u - threshold)); it
// exists so the backward pass can be verified against finite differences.
enum class Activation { kSpike, kSigmoid };

struct UnrollOptions {
  LifParams lif;
  NlifParams nlif;
  SurrogateSpec surrogate;
  Activation activation = Activation::kSpike;
  double sigmoid_steepness = 4.0;
  // When set, the reset multiplication v = u * (1 - s) is treated as constant
  // in s during backprop.
  bool detach_reset = true;
};

// Per-step input to the LIF layer. A single row means the same input at
// every step (current injection); otherwise one row per step.
struct InputSequence {
  Eigen::MatrixXd rows;
  int steps = 0;

  static InputSequence constant(const Eigen::VectorXd& x, int steps);
  bool is_constant() const { return rows.rows() == 1; }
  auto step(int t) const { return rows.row(is_constant() ? 0 : t); }
  Eigen::Index width() const { return rows.cols(); }
};

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Everything the backward pass needs, plus the observable traces.
struct UnrollTrace {
  InputSequence input;
  RowMatrix hidden_pre;         // T x N1, membrane before threshold/reset
  RowMatrix hidden_out;         // T x N1, spikes (0/1) or sigmoid activations
  Eigen::MatrixXd output_pre;   // T x N2, membrane before clamping
  Eigen::MatrixXd membrane;     // T x N2, N-LIF membrane after clamping

  int steps() const { return input.steps; }
  Eigen::VectorXd readout() const {
    return membrane.row(membrane.rows() - 1).transpose();
  }
};

struct WeightGrads {
  Eigen::MatrixXd w_in;   // N0 x N1
  Eigen::MatrixXd w_out;  // N1 x N2

  static WeightGrads zeros(Eigen::Index n0, Eigen::Index n1, Eigen::Index n2);
};

// w_in is N0 x N1, w_out is N1 x N2. The readout is the final-step membrane.
UnrollTrace unroll_forward(const Eigen::MatrixXd& w_in,
                           const Eigen::MatrixXd& w_out,
                           const InputSequence& input,
                           const UnrollOptions& opt);

// Same as above, reusing the storage of `trace`.
void unroll_forward_into(const Eigen::MatrixXd& w_in,
                         const Eigen::MatrixXd& w_out,
                         const InputSequence& input, const UnrollOptions& opt,
                         UnrollTrace& trace);

// Gradients of <upstream, readout> with respect to both weight matrices,
// accumulated into `grads`.
void unroll_backward_accumulate(const Eigen::MatrixXd& w_out,
                                const UnrollTrace& trace,
                                const Eigen::VectorXd& upstream,
                                const UnrollOptions& opt, WeightGrads& grads);

WeightGrads unroll_backward(const Eigen::MatrixXd& w_in,
                            const Eigen::MatrixXd& w_out,
                            const UnrollTrace& trace,
                            const Eigen::VectorXd& upstream,
                            const UnrollOptions& opt);

}  // namespace spikegrasp::snn
