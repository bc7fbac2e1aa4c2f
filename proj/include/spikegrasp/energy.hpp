#pragma once

// Analytical inference energy for the spiking network and the conventional
// baseline, from layer sizes and measured activation statistics.
//
//   E_snn = B T [ N1 r (N0 a_m + (N0 - 1) a_a) + N2 r_mem N1 a_a ]
//   E_ann = B T [ N1 r_in (N0 a_m + (N0 - 1) a_a)
//                 + N2 r_out (N1 a_m + (N1 - 1) a_a) ]
//
// a_m and a_a are the per-operation costs of a multiply and an add in pJ.

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace spikegrasp::energy {

inline constexpr double kPicojoulesPerMillijoule = 1e9;

struct OpCosts {
  double multiply_pj = 4.6;
  double add_pj = 0.9;

  void validate() const;
};

struct EnergyConfig {
  long batch = 1;
  long steps = 1;
  long n0 = 1, n1 = 1, n2 = 1;
  // SNN rates
  std::optional<double> r;
  std::optional<double> r_mem;
  // ANN rates
  std::optional<double> r_in;
  std::optional<double> r_out;

  void validate_dims() const;
};

struct LayerOps {
  double multiplies = 0.0;
  double adds = 0.0;
};

struct EnergyReport {
  double snn_pj = 0.0;
  double ann_pj = 0.0;
  double saving = 0.0;  // 1 - E_snn / E_ann
  std::vector<LayerOps> snn_ops;  // input layer, output layer
  std::vector<LayerOps> ann_ops;

  double snn_mj() const { return snn_pj / kPicojoulesPerMillijoule; }
  double ann_mj() const { return ann_pj / kPicojoulesPerMillijoule; }
};

// Mean of a binary record matrix (rows = samples, cols = LIF neurons).
// Throws std::invalid_argument on empty input or non-binary entries.
double input_spike_rate(const Eigen::MatrixXd& spikes);

// Fraction of output neurons whose trace has any nonzero sample.
// `traces` is N2 x T.
double membrane_activation_rate(const Eigen::MatrixXd& traces);

struct AnnRates {
  double r_in = 0.0;
  double r_out = 0.0;
};

// Fractions of strictly positive entries.
AnnRates ann_activation_rates(const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& hidden);

// Both return pJ. Missing rates throw std::invalid_argument.
double snn_energy(const EnergyConfig& cfg, const OpCosts& costs);
double ann_energy(const EnergyConfig& cfg, const OpCosts& costs);

// Configs must share B, T, N0, N1, N2.
EnergyReport energy_report(const EnergyConfig& snn, const EnergyConfig& ann,
                           const OpCosts& costs);

// The reference operating point: B = 8192, T = 500, 18-256-7 layers, SNN r = 0.31,
// r_mem = 1, ANN r_in = 1, r_out = 0.48.
EnergyConfig reference_snn_config();
EnergyConfig reference_ann_config();

}  // namespace spikegrasp::energy
