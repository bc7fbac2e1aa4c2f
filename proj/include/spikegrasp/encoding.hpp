#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spikegrasp/snn.hpp"

namespace spikegrasp::encoding {

enum class EncoderMode { kCurrent, kLatency };

// Fixed per-feature min/max used to map observations into [0, 1].
class NormalizationBounds {
 public:
  NormalizationBounds() = default;
  // Throws std::invalid_argument if sizes differ or any max <= min.
  NormalizationBounds(std::vector<double> lo, std::vector<double> hi);

  std::size_t size() const { return lo_.size(); }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
};

Eigen::VectorXd minmax_normalize(const Eigen::VectorXd& x,
                                 const NormalizationBounds& bounds);
// Row-wise normalization of a batch (rows = samples).
Eigen::MatrixXd minmax_normalize_rows(const Eigen::MatrixXd& x,
                                      const NormalizationBounds& bounds);

// Binary d x T matrix. In latency mode every row holds exactly one spike.
struct SpikeTensor {
  int features = 0;
  int steps = 0;
  std::vector<std::uint8_t> bits;  // row-major, features x steps

  std::uint8_t at(int i, int t) const { return bits[i * steps + t]; }
  int spike_time(int i) const;  // first spike column of row i, -1 if none
};

// Spike time t_i = floor((1 - x_i) * (T - 1)); larger values spike earlier.
int latency_spike_time(double x_normalized, int steps);
SpikeTensor latency_encode(std::span<const double> x_normalized, int steps);

// The same current vector at every step.
std::vector<std::vector<double>> current_encode(
    std::span<const double> x_normalized, int steps);

// Network input for one normalized observation under the given mode.
snn::InputSequence make_input(const Eigen::VectorXd& x_normalized, int steps,
                              EncoderMode mode);

}  // namespace spikegrasp::encoding
