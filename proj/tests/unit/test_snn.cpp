#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "spikegrasp/error.hpp"
#include "spikegrasp/snn.hpp"

using namespace spikegrasp;
using namespace spikegrasp::snn;

namespace {

LifParams lif_with_leak(double a) {
  LifParams p;
  p.lambda = a;
  return p;
}

NlifParams nlif_with(double a, double clip) {
  NlifParams p;
  p.lambda = a;
  p.v_clip = clip;
  return p;
}

// Reference forward pass written directly from the update equations, used
// as an oracle for the readout and for finite differences.
Eigen::VectorXd reference_readout(const Eigen::MatrixXd& w_in,
                                  const Eigen::MatrixXd& w_out,
                                  const Eigen::VectorXd& x, int steps,
                                  const UnrollOptions& opt) {
  const double a1 = opt.lif.lambda * opt.lif.dt;
  const double a2 = opt.nlif.lambda * opt.nlif.dt;
  Eigen::VectorXd v1 = Eigen::VectorXd::Zero(w_in.cols());
  Eigen::VectorXd v2 = Eigen::VectorXd::Zero(w_out.cols());
  for (int t = 0; t < steps; ++t) {
    const Eigen::VectorXd current = w_in.transpose() * x;
    Eigen::VectorXd s(v1.size());
    for (int j = 0; j < v1.size(); ++j) {
      const double u = v1[j] + a1 * (-v1[j] + opt.lif.resistance * current[j]);
      if (opt.activation == Activation::kSpike) {
        s[j] = u >= opt.lif.threshold ? 1.0 : 0.0;
      } else {
        s[j] = 1.0 / (1.0 + std::exp(-opt.sigmoid_steepness * (u - opt.lif.threshold)));
      }
      v1[j] = u * (1.0 - s[j]) + opt.lif.v_reset * s[j];
    }
    const Eigen::VectorXd out_current = w_out.transpose() * s;
    for (int k = 0; k < v2.size(); ++k) {
      const double u = v2[k] + a2 * (-v2[k] + out_current[k]);
      v2[k] = std::clamp(u, -opt.nlif.v_clip, opt.nlif.v_clip);
    }
  }
  return v2;
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

}  // namespace

TEST_SUITE("snn") {

TEST_CASE("lif_step hand examples") {
  const LifParams p = lif_with_leak(0.5);
  LayerState s = LayerState::zeros(1, true);
  std::vector<double> zero{0.0};
  LayerState n = lif_step(s, zero, p);
  CHECK(n.v[0] == 0.0);
  CHECK(n.s[0] == 0);

  s.v[0] = 0.8;
  n = lif_step(s, zero, p);
  CHECK(n.v[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(n.s[0] == 0);

  s.v[0] = 0.0;
  std::vector<double> two{2.0};
  n = lif_step(s, two, p);
  CHECK(n.s[0] == 1);
  CHECK(n.v[0] == 0.0);
}

TEST_CASE("nlif_step hand examples") {
  const NlifParams p = nlif_with(0.5, 1.0);
  LayerState s = LayerState::zeros(1, false);
  std::vector<double> zero{0.0}, four{4.0};
  CHECK(nlif_step(s, zero, p).v[0] == 0.0);
  CHECK(nlif_step(s, four, p).v[0] == 1.0);
  s.v[0] = 0.6;
  CHECK(nlif_step(s, zero, nlif_with(0.5, 10.0)).v[0] == doctest::Approx(0.3));
  CHECK(nlif_step(s, zero, p).s.empty());
}

TEST_CASE("step errors") {
  LayerState s = LayerState::zeros(2, true);
  std::vector<double> one{1.0};
  CHECK_THROWS_AS(lif_step(s, one, LifParams{}), ShapeError);
  std::vector<double> bad{1.0, std::nan("")};
  CHECK_THROWS_AS(lif_step(s, bad, LifParams{}), NumericalError);
  std::vector<double> inf{INFINITY, 0.0};
  CHECK_THROWS_AS(nlif_step(LayerState::zeros(2, false), inf, NlifParams{}),
                  NumericalError);
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(LifParams{}.validate());
  CHECK_THROWS_AS(lif_with_leak(1.5).validate(), std::invalid_argument);
  CHECK_THROWS_AS(lif_with_leak(0.0).validate(), std::invalid_argument);
  LifParams p;
  p.threshold = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(nlif_with(0.2, 0.0).validate(), std::invalid_argument);
  CHECK_NOTHROW(nlif_with(1.0, 10.0).validate());
}

TEST_CASE("surrogate shapes") {
  const SurrogateSpec rect{SurrogateKind::kRectangular, 0.5};
  CHECK(surrogate_grad(0.0, rect) == 1.0);
  CHECK(surrogate_grad(0.5, rect) == 1.0);
  CHECK(surrogate_grad(-0.5000001, rect) == 0.0);
  CHECK(surrogate_grad(10.0, rect) == 0.0);

  const SurrogateSpec fs{SurrogateKind::kFastSigmoid, 2.0};
  const double peak = surrogate_grad(0.0, fs);
  for (double x : {0.01, 0.1, 1.0, 5.0, 100.0}) {
    CHECK(surrogate_grad(x, fs) < peak);
    CHECK(surrogate_grad(x, fs) == surrogate_grad(-x, fs));
    CHECK(surrogate_grad(x, fs) > 0.0);
  }
  CHECK(surrogate_grad(1e6, fs) < 1e-9);

  // Both shapes integrate to one (midpoint rule; the fast sigmoid's tail
  // beyond |x| = L carries 1 / (1 + k L) of the mass).
  for (const SurrogateSpec& spec : {rect, fs}) {
    const double L = 2000.0, h = 1e-3;
    double area = 0.0;
    for (double x = -L + h / 2; x < L; x += h) area += surrogate_grad(x, spec) * h;
    const double tail = spec.kind == SurrogateKind::kFastSigmoid
                            ? 1.0 / (1.0 + spec.width * L)
                            : 0.0;
    CHECK(area + tail == doctest::Approx(1.0).epsilon(1e-4));
  }

  std::vector<double> xs{-1.0, 0.0, 0.25};
  const auto v = surrogate_grad(xs, rect);
  CHECK(v == std::vector<double>{0.0, 1.0, 1.0});
  CHECK_THROWS_AS(surrogate_grad(xs, SurrogateSpec{SurrogateKind::kRectangular, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("unroll with zero weights is silent") {
  UnrollOptions opt;
  const Eigen::MatrixXd w_in = Eigen::MatrixXd::Zero(3, 4);
  const Eigen::MatrixXd w_out = Eigen::MatrixXd::Zero(4, 2);
  const auto tr = unroll_forward(w_in, w_out,
                                 InputSequence::constant(Eigen::Vector3d(1, 2, 3), 5), opt);
  CHECK(tr.hidden_out.isZero());
  CHECK(tr.membrane.isZero());
  CHECK(tr.readout().isZero());
}

TEST_CASE("unroll single neuron hand traces") {
  UnrollOptions opt;
  opt.lif.lambda = 0.5;
  opt.nlif.lambda = 0.5;
  Eigen::MatrixXd w_in(1, 1), w_out(1, 1);
  w_in << 2.0;
  w_out << 3.0;

  SUBCASE("T = 1") {
    // u1 = 0.5 * 2 * 0.6 = 0.6 < 1, no spike, output membrane 0.
    const auto tr = unroll_forward(w_in, w_out,
                                   InputSequence::constant(Eigen::VectorXd::Constant(1, 0.6), 1), opt);
    CHECK(tr.hidden_pre(0, 0) == doctest::Approx(0.6));
    CHECK(tr.hidden_out(0, 0) == 0.0);
    CHECK(tr.readout()[0] == 0.0);
  }
  SUBCASE("spike at t = 0, output rises") {
    // u1(0) = 0.5 * 2 * 1 = 1 >= 1: spike, reset. v2(0) = 0.5 * 3 = 1.5.
    // u1(1) = 0 + 0.5 * 2 = 1: spike again. v2(1) = 1.5 + 0.5 (-1.5 + 3) = 2.25.
    const auto tr = unroll_forward(w_in, w_out,
                                   InputSequence::constant(Eigen::VectorXd::Constant(1, 1.0), 2), opt);
    CHECK(tr.hidden_out(0, 0) == 1.0);
    CHECK(tr.membrane(0, 0) == doctest::Approx(1.5));
    CHECK(tr.membrane(1, 0) == doctest::Approx(2.25));
  }
  SUBCASE("single spike then silence") {
    Eigen::MatrixXd seq(3, 1);
    seq << 1.0, 0.0, 0.0;
    InputSequence in{seq, 3};
    const auto tr = unroll_forward(w_in, w_out, in, opt);
    CHECK(tr.hidden_out.col(0).sum() == 1.0);
    CHECK(tr.hidden_out(0, 0) == 1.0);
    CHECK(tr.membrane(1, 0) == doctest::Approx(0.75));
    CHECK(tr.membrane(2, 0) == doctest::Approx(0.375));
  }
}

TEST_CASE("unroll shape errors") {
  UnrollOptions opt;
  const Eigen::MatrixXd w_in = Eigen::MatrixXd::Zero(3, 4);
  const Eigen::MatrixXd w_out = Eigen::MatrixXd::Zero(5, 2);
  const auto in = InputSequence::constant(Eigen::Vector3d::Zero(), 2);
  CHECK_THROWS_AS(unroll_forward(w_in, w_out, in, opt), ShapeError);
  const auto narrow = InputSequence::constant(Eigen::Vector2d::Zero(), 2);
  CHECK_THROWS_AS(unroll_forward(w_in, Eigen::MatrixXd::Zero(4, 2), narrow, opt),
                  ShapeError);
  InputSequence wrong_len{Eigen::MatrixXd::Zero(3, 3), 5};
  CHECK_THROWS_AS(unroll_forward(w_in, Eigen::MatrixXd::Zero(4, 2), wrong_len, opt),
                  ShapeError);
  const auto tr = unroll_forward(w_in, Eigen::MatrixXd::Zero(4, 2), in, opt);
  CHECK_THROWS_AS(unroll_backward(w_in, Eigen::MatrixXd::Zero(4, 2), tr,
                                  Eigen::VectorXd::Zero(3), opt),
                  ShapeError);
}

TEST_CASE("forward matches reference and is deterministic") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    UnrollOptions opt;
    const Eigen::MatrixXd w_in = Eigen::MatrixXd::NullaryExpr(5, 16, [&] { return 2.0 * u(rng); });
    const Eigen::MatrixXd w_out = Eigen::MatrixXd::NullaryExpr(16, 3, [&] { return u(rng); });
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(5, [&] { return 0.5 + 0.5 * u(rng); });
    const auto in = InputSequence::constant(x, 8);
    const auto a = unroll_forward(w_in, w_out, in, opt);
    const auto b = unroll_forward(w_in, w_out, in, opt);
    CHECK(a.membrane == b.membrane);
    CHECK(a.hidden_out == b.hidden_out);
    CHECK((a.readout() - reference_readout(w_in, w_out, x, 8, opt)).norm() < 1e-12);
    for (int i = 0; i < a.hidden_out.size(); ++i) {
      const double s = a.hidden_out.data()[i];
      CHECK((s == 0.0 || s == 1.0));
    }
  }
}

TEST_CASE("zero upstream gives zero gradients") {
  UnrollOptions opt;
  const Eigen::MatrixXd w_in = Eigen::MatrixXd::Constant(2, 3, 2.0);
  const Eigen::MatrixXd w_out = Eigen::MatrixXd::Constant(3, 2, 0.5);
  const auto tr = unroll_forward(w_in, w_out, InputSequence::constant(Eigen::Vector2d(1, 1), 4), opt);
  const auto g = unroll_backward(w_in, w_out, tr, Eigen::Vector2d::Zero(), opt);
  CHECK(g.w_in.isZero());
  CHECK(g.w_out.isZero());
}

TEST_CASE("smooth twin gradients match finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    UnrollOptions opt;
    opt.activation = Activation::kSigmoid;
    opt.detach_reset = false;
    const int n0 = 3, n1 = 6, n2 = 2, steps = 5;
    Eigen::MatrixXd w_in = Eigen::MatrixXd::NullaryExpr(n0, n1, [&] { return 1.5 * u(rng); });
    Eigen::MatrixXd w_out = Eigen::MatrixXd::NullaryExpr(n1, n2, [&] { return u(rng); });
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(n0, [&] { return 0.5 + 0.5 * u(rng); });
    const Eigen::VectorXd up = Eigen::VectorXd::NullaryExpr(n2, [&] { return u(rng); });
    const auto tr = unroll_forward(w_in, w_out, InputSequence::constant(x, steps), opt);
    const auto g = unroll_backward(w_in, w_out, tr, up, opt);

    const double h = 1e-6;
    auto f = [&] { return up.dot(reference_readout(w_in, w_out, x, steps, opt)); };
    Eigen::MatrixXd fd_in(n0, n1), fd_out(n1, n2);
    for (int i = 0; i < w_in.size(); ++i) {
      const double keep = w_in.data()[i];
      w_in.data()[i] = keep + h;
      const double fp = f();
      w_in.data()[i] = keep - h;
      const double fm = f();
      w_in.data()[i] = keep;
      fd_in.data()[i] = (fp - fm) / (2 * h);
    }
    for (int i = 0; i < w_out.size(); ++i) {
      const double keep = w_out.data()[i];
      w_out.data()[i] = keep + h;
      const double fp = f();
      w_out.data()[i] = keep - h;
      const double fm = f();
      w_out.data()[i] = keep;
      fd_out.data()[i] = (fp - fm) / (2 * h);
    }
    CHECK(relative_error(g.w_in, fd_in) < 1e-4);
    CHECK(relative_error(g.w_out, fd_out) < 1e-4);
  }
}

TEST_CASE("detached reset differs from the exact smooth gradient") {
  UnrollOptions opt;
  opt.activation = Activation::kSigmoid;
  Eigen::MatrixXd w_in = Eigen::MatrixXd::Constant(1, 2, 3.0);
  Eigen::MatrixXd w_out = Eigen::MatrixXd::Constant(2, 1, 1.0);
  const auto tr = unroll_forward(w_in, w_out, InputSequence::constant(Eigen::VectorXd::Ones(1), 6), opt);
  const auto detached = unroll_backward(w_in, w_out, tr, Eigen::VectorXd::Ones(1), opt);
  opt.detach_reset = false;
  const auto exact = unroll_backward(w_in, w_out, tr, Eigen::VectorXd::Ones(1), opt);
  CHECK(detached.w_out.isApprox(exact.w_out));
  CHECK_FALSE(detached.w_in.isApprox(exact.w_in, 1e-6));
}

TEST_CASE("spiking output-layer gradient matches finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  UnrollOptions opt;
  Eigen::MatrixXd w_in = Eigen::MatrixXd::NullaryExpr(4, 12, [&] { return 3.0 * u(rng); });
  Eigen::MatrixXd w_out = Eigen::MatrixXd::NullaryExpr(12, 3, [&] { return u(rng); });
  const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(4, [&] { return 0.5 + 0.5 * u(rng); });
  const Eigen::VectorXd up = Eigen::VectorXd::NullaryExpr(3, [&] { return u(rng); });
  const auto tr = unroll_forward(w_in, w_out, InputSequence::constant(x, 8), opt);
  REQUIRE(tr.hidden_out.sum() > 0.0);
  const auto g = unroll_backward(w_in, w_out, tr, up, opt);
  Eigen::MatrixXd fd(12, 3);
  const double h = 1e-6;
  for (int i = 0; i < w_out.size(); ++i) {
    const double keep = w_out.data()[i];
    w_out.data()[i] = keep + h;
    const double fp = up.dot(reference_readout(w_in, w_out, x, 8, opt));
    w_out.data()[i] = keep - h;
    const double fm = up.dot(reference_readout(w_in, w_out, x, 8, opt));
    w_out.data()[i] = keep;
    fd.data()[i] = (fp - fm) / (2 * h);
  }
  CHECK(relative_error(g.w_out, fd) < 1e-4);
}

TEST_CASE("time-varying input gradients") {
  // Latency-coded style input: one row per step.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  UnrollOptions opt;
  opt.activation = Activation::kSigmoid;
  opt.detach_reset = false;
  Eigen::MatrixXd w_in = Eigen::MatrixXd::NullaryExpr(2, 4, [&] { return 2.0 * u(rng); });
  const Eigen::MatrixXd w_out = Eigen::MatrixXd::NullaryExpr(4, 1, [&] { return u(rng); });
  Eigen::MatrixXd seq(3, 2);
  seq << 1, 0, 0, 1, 0, 0;
  const InputSequence in{seq, 3};
  const auto tr = unroll_forward(w_in, w_out, in, opt);
  const auto g = unroll_backward(w_in, w_out, tr, Eigen::VectorXd::Ones(1), opt);
  const double h = 1e-6;
  Eigen::MatrixXd fd(2, 4);
  for (int i = 0; i < w_in.size(); ++i) {
    const double keep = w_in.data()[i];
    w_in.data()[i] = keep + h;
    const double fp = unroll_forward(w_in, w_out, in, opt).readout()[0];
    w_in.data()[i] = keep - h;
    const double fm = unroll_forward(w_in, w_out, in, opt).readout()[0];
    w_in.data()[i] = keep;
    fd.data()[i] = (fp - fm) / (2 * h);
  }
  CHECK(relative_error(g.w_in, fd) < 1e-4);
}

TEST_CASE("neuron invariants on random trajectories") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> cur(-3.0, 3.0), lam(0.05, 1.0);
  for (int traj = 0; traj < 200; ++traj) {
    LifParams p = lif_with_leak(lam(rng));
    NlifParams q = nlif_with(lam(rng), 2.0);
    LayerState s = LayerState::zeros(8, true), o = LayerState::zeros(8, false);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> c(8);
      for (double& v : c) v = cur(rng) * 5.0;
      s = lif_step(s, c, p);
      o = nlif_step(o, c, q);
      for (std::size_t i = 0; i < 8; ++i) {
        CHECK(s.v[i] < p.threshold);
        if (s.s[i]) CHECK(s.v[i] == p.v_reset);
        CHECK(std::abs(o.v[i]) <= q.v_clip);
      }
    }
  }
}

TEST_CASE("leak strictly decays without input") {
  const LifParams p = lif_with_leak(0.2);
  LayerState s = LayerState::zeros(1, true);
  s.v[0] = 0.9;
  std::vector<double> zero{0.0};
  for (int t = 0; t < 100; ++t) {
    const LayerState n = lif_step(s, zero, p);
    CHECK(std::abs(n.v[0]) < std::abs(s.v[0]));
    s = n;
  }
}

}  // TEST_SUITE
