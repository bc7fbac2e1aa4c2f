#include <doctest.h>

#include "spikegrasp/energy.hpp"

using namespace spikegrasp::energy;

namespace {

EnergyConfig tiny(double r, double r_mem) {
  EnergyConfig c;
  c.n0 = 2;
  c.n1 = 2;
  c.n2 = 1;
  c.r = r;
  c.r_mem = r_mem;
  c.r_in = r;
  c.r_out = r_mem;
  return c;
}

// Operation counts multiplied out directly for each layer.
double snn_oracle(const EnergyConfig& c, const OpCosts& k) {
  const double in_layer = double(c.n1) * *c.r * (c.n0 * k.multiply_pj + (c.n0 - 1) * k.add_pj);
  const double out_layer = double(c.n2) * *c.r_mem * c.n1 * k.add_pj;
  return double(c.batch) * double(c.steps) * (in_layer + out_layer);
}

double ann_oracle(const EnergyConfig& c, const OpCosts& k) {
  const double in_layer = double(c.n1) * *c.r_in * (c.n0 * k.multiply_pj + (c.n0 - 1) * k.add_pj);
  const double out_layer = double(c.n2) * *c.r_out * (c.n1 * k.multiply_pj + (c.n1 - 1) * k.add_pj);
  return double(c.batch) * double(c.steps) * (in_layer + out_layer);
}

}  // namespace

TEST_SUITE("energy") {

TEST_CASE("hand arithmetic") {
  const OpCosts k;
  CHECK(snn_energy(tiny(1, 1), k) == doctest::Approx(22.0).epsilon(1e-12));
  CHECK(ann_energy(tiny(1, 1), k) == doctest::Approx(30.3).epsilon(1e-12));
  CHECK(snn_energy(tiny(0, 0), k) == 0.0);
  CHECK(ann_energy(tiny(0, 0), k) == 0.0);
}

TEST_CASE("reference operating point") {
  const OpCosts k;
  const EnergyReport rep = energy_report(reference_snn_config(), reference_ann_config(), k);
  CHECK(rep.snn_mj() == doctest::Approx(38.49).epsilon(0.005));
  CHECK(rep.ann_mj() == doctest::Approx(122.23).epsilon(0.005));
  CHECK(std::abs(rep.saving * 100.0 - 68.51) <= 0.01);
  CHECK(rep.snn_pj == doctest::Approx(snn_oracle(reference_snn_config(), k)).epsilon(1e-12));
  CHECK(rep.ann_pj == doctest::Approx(ann_oracle(reference_ann_config(), k)).epsilon(1e-12));
}

TEST_CASE("linearity in rates and sizes") {
  const OpCosts k;
  EnergyConfig c = reference_snn_config();
  const double full = snn_energy(c, k);
  c.r = *c.r / 2;
  c.r_mem = *c.r_mem / 2;
  CHECK(snn_energy(c, k) == doctest::Approx(full / 2).epsilon(1e-12));
  c = reference_snn_config();
  c.batch *= 3;
  CHECK(snn_energy(c, k) == doctest::Approx(3 * full).epsilon(1e-12));
  for (double r : {0.05, 0.2, 0.77}) {
    EnergyConfig a = reference_ann_config();
    a.r_out = r;
    CHECK(ann_energy(a, k) == doctest::Approx(ann_oracle(a, k)).epsilon(1e-12));
  }
}

TEST_CASE("equal energies give zero saving") {
  OpCosts k;
  EnergyConfig s = tiny(1, 1);
  EnergyConfig a = tiny(22.0 / 30.3, 22.0 / 30.3);
  a.r_in = 22.0 / 30.3;
  a.r_out = 22.0 / 30.3;
  const EnergyReport rep = energy_report(s, a, k);
  CHECK(std::abs(rep.saving) < 1e-12);
}

TEST_CASE("rate measurements") {
  CHECK(input_spike_rate(Eigen::MatrixXd::Zero(3, 4)) == 0.0);
  CHECK(input_spike_rate(Eigen::MatrixXd::Ones(3, 4)) == 1.0);
  Eigen::MatrixXd s(2, 2);
  s << 1, 0, 0, 0;
  CHECK(input_spike_rate(s) == 0.25);
  s(1, 1) = 0.5;
  CHECK_THROWS_AS(input_spike_rate(s), std::invalid_argument);
  CHECK_THROWS_AS(input_spike_rate(Eigen::MatrixXd(0, 0)), std::invalid_argument);

  CHECK(membrane_activation_rate(Eigen::MatrixXd::Zero(4, 5)) == 0.0);
  Eigen::MatrixXd tr = Eigen::MatrixXd::Zero(4, 5);
  tr(0, 3) = 0.1;
  tr(2, 0) = -2.0;
  CHECK(membrane_activation_rate(tr) == 0.5);

  Eigen::MatrixXd hidden(2, 2);
  hidden << 1, -1, 2, 0;
  const AnnRates r = ann_activation_rates(Eigen::MatrixXd::Ones(2, 3), hidden);
  CHECK(r.r_in == 1.0);
  CHECK(r.r_out == 0.5);
  CHECK(ann_activation_rates(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Zero(2, 2)).r_out == 0.0);
}

TEST_CASE("errors") {
  const OpCosts k;
  EnergyConfig c = tiny(1, 1);
  c.r.reset();
  CHECK_THROWS_AS(snn_energy(c, k), std::invalid_argument);
  c = tiny(1, 1);
  c.r_out.reset();
  CHECK_THROWS_AS(ann_energy(c, k), std::invalid_argument);
  c = tiny(1, 1);
  c.n1 = 0;
  CHECK_THROWS_AS(snn_energy(c, k), std::invalid_argument);
  EnergyConfig other = tiny(1, 1);
  other.steps = 2;
  CHECK_THROWS_AS(energy_report(tiny(1, 1), other, k), std::invalid_argument);
  OpCosts bad;
  bad.add_pj = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  c = tiny(1.5, 1);
  CHECK_THROWS_AS(snn_energy(c, k), std::invalid_argument);
}

}  // TEST_SUITE
