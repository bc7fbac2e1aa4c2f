#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spikegrasp/checkpoint.hpp"
#include "spikegrasp/config.hpp"
#include "spikegrasp/encoding.hpp"
#include "spikegrasp/energy.hpp"
#include "spikegrasp/error.hpp"
#include "spikegrasp/reward.hpp"
#include "spikegrasp/snn.hpp"
#include "spikegrasp/trainer.hpp"

namespace py = pybind11;
using namespace spikegrasp;

namespace {

py::dict row_dict(const MetricsRow& r) {
  py::dict d;
  d["update"] = r.update;
  d["global_env_steps"] = r.global_env_steps;
  d["mean_reward"] = r.mean_reward;
  d["success_rate"] = r.success_rate;
  d["reach_rate"] = r.reach_rate;
  d["eval_success_rate"] = r.eval_success_rate;
  d["eval_reach_rate"] = r.eval_reach_rate;
  d["eval_mean_reward"] = r.eval_mean_reward;
  d["actor_loss"] = r.actor_loss;
  d["critic_loss"] = r.critic_loss;
  d["entropy"] = r.entropy;
  d["spike_rate_r"] = r.spike_rate_r;
  d["stage"] = r.stage;
  d["deadzone_fraction"] = r.deadzone_fraction;
  return d;
}

energy::EnergyConfig energy_config(long batch, long steps, long n0, long n1, long n2) {
  energy::EnergyConfig c;
  c.batch = batch;
  c.steps = steps;
  c.n0 = n0;
  c.n1 = n1;
  c.n2 = n2;
  return c;
}

energy::OpCosts costs(double multiply_pj, double add_pj) {
  energy::OpCosts k{multiply_pj, add_pj};
  k.validate();
  return k;
}

}  // namespace

PYBIND11_MODULE(_spikegrasp, m) {
  m.doc() = "Spiking actor-critic grasping core";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  // energy
  m.def(
      "snn_energy_pj",
      [](long batch, long steps, long n0, long n1, long n2, double r, double r_mem,
         double multiply_pj, double add_pj) {
        auto c = energy_config(batch, steps, n0, n1, n2);
        c.r = r;
        c.r_mem = r_mem;
        return energy::snn_energy(c, costs(multiply_pj, add_pj));
      },
      py::arg("batch"), py::arg("steps"), py::arg("n0"), py::arg("n1"), py::arg("n2"),
      py::arg("r"), py::arg("r_mem"), py::arg("multiply_pj") = 4.6, py::arg("add_pj") = 0.9);
  m.def(
      "ann_energy_pj",
      [](long batch, long steps, long n0, long n1, long n2, double r_in, double r_out,
         double multiply_pj, double add_pj) {
        auto c = energy_config(batch, steps, n0, n1, n2);
        c.r_in = r_in;
        c.r_out = r_out;
        return energy::ann_energy(c, costs(multiply_pj, add_pj));
      },
      py::arg("batch"), py::arg("steps"), py::arg("n0"), py::arg("n1"), py::arg("n2"),
      py::arg("r_in"), py::arg("r_out"), py::arg("multiply_pj") = 4.6, py::arg("add_pj") = 0.9);
  m.def("reference_energy", [] {
    const auto rep = energy::energy_report(energy::reference_snn_config(),
                                           energy::reference_ann_config(), energy::OpCosts{});
    py::dict d;
    d["snn_mj"] = rep.snn_mj();
    d["ann_mj"] = rep.ann_mj();
    d["saving"] = rep.saving;
    return d;
  });
  m.def("input_spike_rate", &energy::input_spike_rate, py::arg("spikes"));
  m.def("membrane_activation_rate", &energy::membrane_activation_rate, py::arg("traces"));

  // encoding
  m.def(
      "latency_encode",
      [](const std::vector<double>& x, int steps) {
        const auto s = encoding::latency_encode(x, steps);
        py::array_t<std::uint8_t> out({s.features, s.steps});
        std::copy(s.bits.begin(), s.bits.end(), out.mutable_data());
        return out;
      },
      py::arg("x"), py::arg("steps"));
  m.def("latency_spike_time", &encoding::latency_spike_time, py::arg("x"), py::arg("steps"));
  m.def(
      "minmax_normalize",
      [](const Eigen::VectorXd& x, std::vector<double> lo, std::vector<double> hi) {
        return encoding::minmax_normalize(x, encoding::NormalizationBounds(lo, hi));
      },
      py::arg("x"), py::arg("lo"), py::arg("hi"));

  // neurons
  m.def(
      "lif_step",
      [](std::vector<double> v, const std::vector<double>& current, double lam,
         double threshold) {
        snn::LifParams p;
        p.lambda = lam;
        p.threshold = threshold;
        snn::LayerState s{std::move(v), std::vector<std::uint8_t>()};
        s.s.assign(s.v.size(), 0);
        const auto n = snn::lif_step(s, current, p);
        return py::make_tuple(n.v, std::vector<int>(n.s.begin(), n.s.end()));
      },
      py::arg("v"), py::arg("current"), py::arg("lam") = 0.2, py::arg("threshold") = 1.0);
  m.def(
      "unroll",
      [](const Eigen::MatrixXd& w_in, const Eigen::MatrixXd& w_out, const Eigen::VectorXd& x,
         int steps) {
        const auto tr = snn::unroll_forward(w_in, w_out, snn::InputSequence::constant(x, steps),
                                            snn::UnrollOptions{});
        py::dict d;
        d["readout"] = tr.readout();
        d["spikes"] = Eigen::MatrixXd(tr.hidden_out);
        d["membrane"] = tr.membrane;
        return d;
      },
      py::arg("w_in"), py::arg("w_out"), py::arg("x"), py::arg("steps"));

  // reward
  m.def(
      "perfect_grasp_reward",
      [](int stage) {
        const auto w = stage == 1 ? reward::default_stage1_weights()
                                  : reward::default_stage2_weights();
        arm::GeometryFeatures g;
        g.g = g.g_opt = arm::EnvConfig().optimal_gap();
        g.nu_z = 1.0;
        g.grasped = true;
        const auto b = reward::total_reward(g, Eigen::Quaterniond::Identity(), w,
                                            reward::RewardScales{});
        py::dict d;
        d["prox_align"] = b.prox_align;
        d["grip_geom"] = b.grip_geom;
        d["task"] = b.task;
        d["pose"] = b.pose;
        d["penalty"] = b.penalty;
        d["total"] = b.total;
        return d;
      },
      py::arg("stage") = 2);

  // configuration, training, evaluation
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_property(
          "model", [](const ExperimentConfig& c) { return std::string(to_string(c.model)); },
          [](ExperimentConfig& c, const std::string& s) {
            if (s != "snn" && s != "ann") throw py::value_error("model must be snn or ann");
            c.model = s == "snn" ? ModelKind::kSnn : ModelKind::kAnn;
          })
      .def_property(
          "training",
          [](const ExperimentConfig& c) { return std::string(to_string(c.training)); },
          [](ExperimentConfig& c, const std::string& s) {
            if (s != "crl" && s != "vanilla") throw py::value_error("training must be crl or vanilla");
            c.training = s == "crl" ? TrainingKind::kCrl : TrainingKind::kVanilla;
          })
      .def_property(
          "num_envs", [](const ExperimentConfig& c) { return c.env.num_envs; },
          [](ExperimentConfig& c, int n) { c.env.num_envs = n; })
      .def_property(
          "hidden", [](const ExperimentConfig& c) { return c.network.n1; },
          [](ExperimentConfig& c, int n) { c.network.n1 = n; })
      .def_property(
          "horizon", [](const ExperimentConfig& c) { return c.ppo.horizon; },
          [](ExperimentConfig& c, int n) { c.ppo.horizon = n; })
      .def_property(
          "total_updates", [](const ExperimentConfig& c) { return c.ppo.total_updates; },
          [](ExperimentConfig& c, long n) { c.ppo.total_updates = n; })
      .def("validate", &ExperimentConfig::validate)
      .def("dump", [](const ExperimentConfig& c) { return dump_config(c); });
  m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<config>");
  m.def("load_config", &load_config, py::arg("path"));

  py::class_<ActorCritic>(m, "ActorCritic")
      .def_property_readonly("kind",
                             [](const ActorCritic& a) { return std::string(to_string(a.kind())); })
      .def("action_means",
           [](const ActorCritic& a, const Eigen::MatrixXd& obs) { return a.action_means(obs); })
      .def("values", &ActorCritic::values)
      .def("save", [](const ActorCritic& a, const std::filesystem::path& p) { save_checkpoint(a, p); });
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def(
      "train",
      [](const ExperimentConfig& cfg, std::optional<long> updates) {
        TrainOptions opt;
        opt.updates = updates;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(cfg, opt);
        }
        py::list rows;
        for (const MetricsRow& row : r.rows) rows.append(row_dict(row));
        return py::make_tuple(rows, r.agent);
      },
      py::arg("config"), py::arg("updates") = py::none());

  m.def(
      "evaluate",
      [](const ActorCritic& agent, const ExperimentConfig& cfg, int episodes,
         std::uint64_t seed) {
        const EvalResult ev = evaluate(agent, cfg.task_config(), episodes, seed);
        const MeasuredRates rates = measure_rates(agent, ev.observations);
        py::dict d;
        d["success_rate"] = ev.success_rate;
        d["reach_rate"] = ev.reach_rate;
        d["mean_reward"] = ev.mean_reward;
        d["episodes"] = ev.episodes.size();
        d["observations"] = ev.observations;
        d["r"] = rates.r;
        d["r_mem"] = rates.r_mem;
        d["r_in"] = rates.r_in;
        d["r_out"] = rates.r_out;
        return d;
      },
      py::arg("agent"), py::arg("config"), py::arg("episodes") = 10, py::arg("seed") = 0);
}
