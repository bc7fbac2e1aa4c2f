#include "spikegrasp/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spikegrasp/error.hpp"

namespace spikegrasp::encoding {

NormalizationBounds::NormalizationBounds(std::vector<double> lo,
                                         std::vector<double> hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) {
    throw std::invalid_argument("normalization bounds: size mismatch");
  }
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!(hi_[i] > lo_[i])) {
      throw std::invalid_argument("normalization bounds: max must exceed min "
                                  "for feature " + std::to_string(i));
    }
  }
}

Eigen::VectorXd minmax_normalize(const Eigen::VectorXd& x,
                                 const NormalizationBounds& bounds) {
  if (static_cast<std::size_t>(x.size()) != bounds.size()) {
    throw ShapeError("observation size does not match normalization bounds");
  }
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double lo = bounds.lo()[i];
    const double hi = bounds.hi()[i];
    out[i] = std::clamp((x[i] - lo) / (hi - lo), 0.0, 1.0);
  }
  return out;
}

Eigen::MatrixXd minmax_normalize_rows(const Eigen::MatrixXd& x,
                                      const NormalizationBounds& bounds) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out.row(r) = minmax_normalize(x.row(r).transpose(), bounds).transpose();
  }
  return out;
}

int SpikeTensor::spike_time(int i) const {
  for (int t = 0; t < steps; ++t) {
    if (at(i, t)) return t;
  }
  return -1;
}

int latency_spike_time(double x, int steps) {
  if (steps < 2) throw std::invalid_argument("latency coding needs T >= 2");
  const double clamped = std::clamp(x, 0.0, 1.0);
  const int t = static_cast<int>(std::floor((1.0 - clamped) * (steps - 1)));
  return std::clamp(t, 0, steps - 1);
}

SpikeTensor latency_encode(std::span<const double> x, int steps) {
  if (steps < 2) throw std::invalid_argument("latency coding needs T >= 2");
  SpikeTensor st;
  st.features = static_cast<int>(x.size());
  st.steps = steps;
  st.bits.assign(x.size() * steps, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    st.bits[i * steps + latency_spike_time(x[i], steps)] = 1;
  }
  return st;
}

std::vector<std::vector<double>> current_encode(std::span<const double> x,
                                                int steps) {
  if (steps < 1) throw std::invalid_argument("current coding needs T >= 1");
  return std::vector<std::vector<double>>(steps,
                                          std::vector<double>(x.begin(), x.end()));
}

snn::InputSequence make_input(const Eigen::VectorXd& x, int steps,
                              EncoderMode mode) {
  if (mode == EncoderMode::kCurrent) {
    if (steps < 1) throw std::invalid_argument("current coding needs T >= 1");
    return snn::InputSequence::constant(x, steps);
  }
  const SpikeTensor st =
      latency_encode(std::span<const double>(x.data(), x.size()), steps);
  snn::InputSequence seq;
  seq.steps = steps;
  seq.rows = Eigen::MatrixXd::Zero(steps, x.size());
  for (int i = 0; i < st.features; ++i) {
    seq.rows(st.spike_time(i), i) = 1.0;
  }
  return seq;
}

}  // namespace spikegrasp::encoding
