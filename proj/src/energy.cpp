#include "spikegrasp/energy.hpp"

#include <stdexcept>

namespace spikegrasp::energy {
namespace {

double require_rate(const std::optional<double>& rate, const char* name) {
  if (!rate) throw std::invalid_argument(std::string("missing rate ") + name);
  if (!(*rate >= 0.0 && *rate <= 1.0)) {
    throw std::invalid_argument(std::string("rate ") + name +
                                " must lie in [0, 1]");
  }
  return *rate;
}

std::vector<LayerOps> snn_ops(const EnergyConfig& c, double r, double r_mem) {
  const double bt = double(c.batch) * double(c.steps);
  return {
      {bt * c.n1 * r * c.n0, bt * c.n1 * r * (c.n0 - 1)},
      {0.0, bt * c.n2 * r_mem * c.n1},
  };
}

std::vector<LayerOps> ann_ops(const EnergyConfig& c, double r_in,
                              double r_out) {
  const double bt = double(c.batch) * double(c.steps);
  return {
      {bt * c.n1 * r_in * c.n0, bt * c.n1 * r_in * (c.n0 - 1)},
      {bt * c.n2 * r_out * c.n1, bt * c.n2 * r_out * (c.n1 - 1)},
  };
}

}  // namespace

void OpCosts::validate() const {
  if (!(multiply_pj > 0.0) || !(add_pj > 0.0)) {
    throw std::invalid_argument("operation costs must be positive");
  }
}

void EnergyConfig::validate_dims() const {
  if (batch < 1 || steps < 1 || n0 < 1 || n1 < 1 || n2 < 1) {
    throw std::invalid_argument("energy config dimensions must be >= 1");
  }
}

double input_spike_rate(const Eigen::MatrixXd& spikes) {
  if (spikes.size() == 0) throw std::invalid_argument("empty spike record");
  if (((spikes.array() != 0.0) && (spikes.array() != 1.0)).any()) {
    throw std::invalid_argument("spike record must be binary");
  }
  return spikes.sum() / double(spikes.size());
}

double membrane_activation_rate(const Eigen::MatrixXd& traces) {
  if (traces.rows() == 0) return 0.0;
  const auto active =
      (traces.cwiseAbs().rowwise().sum().array() > 0.0).count();
  return double(active) / double(traces.rows());
}

AnnRates ann_activation_rates(const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& hidden) {
  AnnRates r;
  if (inputs.size() > 0) {
    r.r_in = double((inputs.array() > 0.0).count()) / double(inputs.size());
  }
  if (hidden.size() > 0) {
    r.r_out = double((hidden.array() > 0.0).count()) / double(hidden.size());
  }
  return r;
}

double snn_energy(const EnergyConfig& cfg, const OpCosts& costs) {
  cfg.validate_dims();
  costs.validate();
  const double r = require_rate(cfg.r, "r");
  const double r_mem = require_rate(cfg.r_mem, "r_mem");
  const double per_step =
      cfg.n1 * r * (cfg.n0 * costs.multiply_pj + (cfg.n0 - 1) * costs.add_pj) +
      cfg.n2 * r_mem * cfg.n1 * costs.add_pj;
  return double(cfg.batch) * double(cfg.steps) * per_step;
}

double ann_energy(const EnergyConfig& cfg, const OpCosts& costs) {
  cfg.validate_dims();
  costs.validate();
  const double r_in = require_rate(cfg.r_in, "r_in");
  const double r_out = require_rate(cfg.r_out, "r_out");
  const double per_step =
      cfg.n1 * r_in *
          (cfg.n0 * costs.multiply_pj + (cfg.n0 - 1) * costs.add_pj) +
      cfg.n2 * r_out *
          (cfg.n1 * costs.multiply_pj + (cfg.n1 - 1) * costs.add_pj);
  return double(cfg.batch) * double(cfg.steps) * per_step;
}

EnergyReport energy_report(const EnergyConfig& snn, const EnergyConfig& ann,
                           const OpCosts& costs) {
  if (snn.batch != ann.batch || snn.steps != ann.steps || snn.n0 != ann.n0 ||
      snn.n1 != ann.n1 || snn.n2 != ann.n2) {
    throw std::invalid_argument(
        "SNN and ANN energy configs must share B, T, N0, N1, N2");
  }
  EnergyReport rep;
  rep.snn_pj = snn_energy(snn, costs);
  rep.ann_pj = ann_energy(ann, costs);
  rep.saving = rep.ann_pj > 0.0 ? 1.0 - rep.snn_pj / rep.ann_pj : 0.0;
  rep.snn_ops = snn_ops(snn, *snn.r, *snn.r_mem);
  rep.ann_ops = ann_ops(ann, *ann.r_in, *ann.r_out);
  return rep;
}

EnergyConfig reference_snn_config() {
  EnergyConfig c;
  c.batch = 8192;
  c.steps = 500;
  c.n0 = 18;
  c.n1 = 256;
  c.n2 = 7;
  c.r = 0.31;
  c.r_mem = 1.0;
  return c;
}

EnergyConfig reference_ann_config() {
  EnergyConfig c;
  c.batch = 8192;
  c.steps = 500;
  c.n0 = 18;
  c.n1 = 256;
  c.n2 = 7;
  c.r_in = 1.0;
  c.r_out = 0.48;
  return c;
}

}  // namespace spikegrasp::energy
