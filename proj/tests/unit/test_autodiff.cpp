#include <doctest.h>

#include <cmath>
#include <random>

#include "fedmri/autodiff.hpp"
#include "fedmri/errors.hpp"
#include "fedmri/gradcheck.hpp"
#include "fedmri/grad_suite.hpp"
#include "fedmri/layers.hpp"
#include "fedmri/optim.hpp"

using namespace fedmri;
using namespace fedmri::ad;

namespace {

Tensor uniform(Shape shape, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = u(rng);
  return t;
}

Tensor eval_layer(LayerKind kind, std::vector<Tensor> ins) {
  Tape tape;
  std::vector<Var> vars;
  for (auto& t : ins) vars.push_back(tape.constant(t));
  return tape.value(apply_layer(tape, kind, vars));
}

}  // namespace

TEST_CASE("conv2d zero and identity kernels") {
  Tensor x = uniform({1, 4, 4}, 1);
  Tape tape;
  Var in = tape.constant(x);
  Var zero = conv2d(tape, in, tape.constant(Tensor::zeros({1, 1, 3, 3})), tape.constant(Tensor::zeros({1})));
  for (float v : tape.value(zero).data()) CHECK(v == 0.0f);

  Tensor id = Tensor::zeros({1, 1, 3, 3});
  id[4] = 1.0f;
  Var same = conv2d(tape, in, tape.constant(id), tape.constant(Tensor::zeros({1})));
  CHECK(bitwise_equal(tape.value(same), x));

  CHECK_THROWS_AS(conv2d(tape, in, tape.constant(Tensor::zeros({1, 2, 3, 3})), tape.constant(Tensor::zeros({1}))),
                  DimensionError);
}

TEST_CASE("conv2d matches a direct loop") {
  Tensor x = uniform({2, 4, 4}, 2);
  Tensor w = uniform({3, 2, 3, 3}, 3);
  Tensor b = uniform({3}, 4);
  Tape tape;
  Tensor y = tape.value(conv2d(tape, tape.constant(x), tape.constant(w), tape.constant(b)));
  for (int o = 0; o < 3; ++o)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double acc = b[o];
        for (int c = 0; c < 2; ++c)
          for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              const int ii = i + di, jj = j + dj;
              if (ii < 0 || jj < 0 || ii >= 4 || jj >= 4) continue;
              acc += double(x[(c * 4 + ii) * 4 + jj]) * w[((o * 2 + c) * 3 + di + 1) * 3 + dj + 1];
            }
        CHECK(std::abs(y[(o * 4 + i) * 4 + j] - acc) < 1e-5);
      }
}

TEST_CASE("conv2d gradient matches finite differences") {
  Parameter w("w", uniform({1, 1, 3, 3}, 5));
  Parameter b("b", uniform({1}, 6));
  Tensor x = uniform({1, 4, 4}, 7);
  Tensor target = Tensor::filled({1, 4, 4}, -10.0f);
  std::vector<Parameter*> ps{&w, &b};
  auto loss = [&](Tape& t) {
    return l1_loss(t, conv2d(t, t.constant(x), t.parameter(w), t.parameter(b)), t.constant(target));
  };
  GradCheckOptions opt;
  opt.n_coords = 10;
  auto r = grad_check(ps, loss, opt);
  CHECK(r.coords_checked == 10);
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("layer examples") {
  CHECK(eval_layer(LayerKind::relu, {Tensor({3}, {-1.0f, 0.0f, 2.0f})}) == Tensor({3}, {0.0f, 0.0f, 2.0f}));
  CHECK(eval_layer(LayerKind::avgpool2, {Tensor({1, 2, 2}, {1, 3, 5, 7})}) == Tensor({1, 1, 1}, {4.0f}));
  CHECK(eval_layer(LayerKind::upsample_nearest2, {Tensor({1, 1, 1}, {4.0f})}) == Tensor::filled({1, 2, 2}, 4.0f));
  Tensor cat = eval_layer(LayerKind::concat_channels, {Tensor::filled({1, 2, 2}, 1.0f), Tensor::filled({2, 2, 2}, 2.0f)});
  CHECK(cat.shape() == Shape{3, 2, 2});
  CHECK(cat[3] == 1.0f);
  CHECK(cat[4] == 2.0f);
  CHECK(eval_layer(LayerKind::add, {Tensor({2}, {1, 2}), Tensor({2}, {3, 4})}) == Tensor({2}, {4, 6}));
}

TEST_CASE("layer shape errors") {
  CHECK_THROWS_AS(eval_layer(LayerKind::avgpool2, {Tensor::zeros({1, 3, 2})}), DimensionError);
  CHECK_THROWS_AS(eval_layer(LayerKind::concat_channels, {Tensor::zeros({1, 2, 2}), Tensor::zeros({1, 4, 4})}),
                  DimensionError);
  CHECK_THROWS_AS(eval_layer(LayerKind::add, {Tensor::zeros({1, 2, 2}), Tensor::zeros({1, 2, 4})}), DimensionError);
}

TEST_CASE("l1 loss values") {
  Tape tape;
  Var a = tape.constant(Tensor({2}, {1.0f, 3.0f}));
  CHECK(tape.value(l1_loss(tape, a, a))[0] == 0.0f);
  CHECK(tape.value(l1_loss(tape, a, tape.constant(Tensor::zeros({2}))))[0] == 2.0f);
  CHECK_THROWS_AS(l1_loss(tape, a, tape.constant(Tensor::zeros({3}))), DimensionError);
}

TEST_CASE("l1 gradient matches finite differences") {
  Parameter p("p", uniform({4, 4}, 8));
  Tensor target = uniform({4, 4}, 9);
  std::vector<Parameter*> ps{&p};
  auto r = grad_check(ps, [&](Tape& t) { return l1_loss(t, t.parameter(p), t.constant(target)); });
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("backward basics") {
  Parameter w("w", Tensor({1}, {2.0f}));
  {
    Tape tape;
    tape.backward(l1_loss(tape, tape.parameter(w), tape.constant(Tensor::zeros({1}))));
    CHECK(w.grad[0] == 1.0f);
  }
  w.zero_grad();
  {
    // w used twice
    Tape tape;
    Var v = tape.parameter(w);
    tape.backward(l1_loss(tape, add(tape, v, v), tape.constant(Tensor::zeros({1}))));
    CHECK(w.grad[0] == 2.0f);
  }
  {
    Parameter m("m", Tensor::zeros({2}));
    Tape tape;
    Var v = tape.parameter(m);
    CHECK_THROWS_AS(tape.backward(add(tape, v, v)), ShapeError);
  }
  Parameter unused("u", Tensor({1}, {1.0f}));
  w.zero_grad();
  Tape tape;
  tape.parameter(unused);
  tape.backward(l1_loss(tape, tape.parameter(w), tape.constant(Tensor::zeros({1}))));
  CHECK(unused.grad[0] == 0.0f);
}

TEST_CASE("gradients scale linearly with the loss") {
  Parameter w("w", uniform({2, 1, 3, 3}, 10));
  Parameter b("b", uniform({2}, 11));
  Tensor x = uniform({1, 4, 4}, 12);
  Tensor y = uniform({2, 4, 4}, 13);
  auto run = [&](float a) {
    w.zero_grad();
    b.zero_grad();
    Tape t;
    t.backward(scale(t, l1_loss(t, relu(t, conv2d(t, t.constant(x), t.parameter(w), t.parameter(b))), t.constant(y)), a));
    return std::pair{w.grad, b.grad};
  };
  auto [g1, h1] = run(1.0f);
  auto [g4, h4] = run(4.0f);
  for (std::size_t i = 0; i < g1.numel(); ++i) CHECK(g4[i] == 4.0f * g1[i]);
  for (std::size_t i = 0; i < h1.numel(); ++i) CHECK(h4[i] == 4.0f * h1[i]);
}

TEST_CASE("relu and l1 use a zero subgradient at zero") {
  Parameter p("p", Tensor({3}, {-1.0f, 0.0f, 2.0f}));
  Tape tape;
  Var r = relu(tape, tape.parameter(p));
  tape.backward(l1_loss(tape, r, tape.constant(Tensor::filled({3}, -1.0f))));
  CHECK(p.grad[0] == 0.0f);
  CHECK(p.grad[1] == 0.0f);
  CHECK(p.grad[2] == doctest::Approx(1.0 / 3.0));

  Parameter q("q", Tensor({2}, {5.0f, 1.0f}));
  Tape t2;
  t2.backward(l1_loss(t2, t2.parameter(q), t2.constant(Tensor({2}, {5.0f, 0.0f}))));
  CHECK(q.grad[0] == 0.0f);
  CHECK(q.grad[1] == 0.5f);
}

TEST_CASE("fft layers back-propagate") {
  Parameter p("p", uniform({2, 4, 4}, 14, 0.5f, 1.0f));
  Tensor target = Tensor::filled({1, 4, 4}, -10.0f);
  std::vector<Parameter*> ps{&p};
  auto loss = [&](Tape& t) {
    return l1_loss(t, complex_abs(t, ifft2(t, fft2(t, t.parameter(p)))), t.constant(target));
  };
  CHECK(grad_check(ps, loss).max_rel_error < 1e-3);
}

TEST_CASE("sgd step") {
  Parameter p("p", Tensor({1}, {1.0f}));
  p.grad[0] = 2.0f;
  Optimizer opt({OptimizerKind::sgd, 0.1});
  std::vector<Parameter*> ps{&p};
  opt.step(ps);
  CHECK(p.value[0] == doctest::Approx(0.8f));
  CHECK(p.grad[0] == 0.0f);
}

TEST_CASE("rmsprop first step and decay") {
  Parameter p("p", Tensor({1}, {0.5f}));
  Optimizer opt({OptimizerKind::rmsprop, 0.1, 0.99, 1e-8});
  std::vector<Parameter*> ps{&p};
  p.grad[0] = 1.0f;
  opt.step(ps);
  const double expected = 0.5 - 0.1 * 1.0 / (std::sqrt(0.01) + 1e-8);
  CHECK(std::abs(p.value[0] - expected) < 1e-6);
  CHECK(opt.state("p")[0] == doctest::Approx(0.01));

  const float v = p.value[0];
  opt.step(ps);
  CHECK(p.value[0] == v);
  CHECK(opt.state("p")[0] == doctest::Approx(0.0099));
  CHECK(opt.state("missing").empty());
}

TEST_CASE("optimizer flags non-finite values") {
  Parameter p("p", Tensor({1}, {1.0f}));
  p.grad[0] = std::numeric_limits<float>::infinity();
  Optimizer opt({OptimizerKind::sgd, 1.0});
  std::vector<Parameter*> ps{&p};
  CHECK_THROWS_AS(opt.step(ps), NumericError);
}

TEST_CASE("grad_check catches a wrong backward") {
  Parameter p("p", uniform({4}, 15, 1.0f, 2.0f));
  std::vector<Parameter*> ps{&p};
  // squares the input but claims d/dx = x
  auto bad = [&](Tape& t) {
    Var x = t.parameter(p);
    const Tensor& in = t.value(x);
    Tensor out(in.shape());
    for (std::size_t i = 0; i < in.numel(); ++i) out[i] = in[i] * in[i];
    Tensor saved = in;
    Var y = t.record(std::move(out), {x}, [x, saved](Tape& tt, std::size_t self) {
      const Tensor& g = tt.grad(self);
      Tensor& dx = tt.grad(x.id);
      for (std::size_t i = 0; i < g.numel(); ++i) dx[i] += g[i] * saved[i];
    });
    return l1_loss(t, y, t.constant(Tensor::zeros({4})));
  };
  const Tensor before = p.value;
  CHECK(grad_check(ps, bad).max_rel_error > 0.1);
  CHECK(bitwise_equal(p.value, before));
  for (float g : p.grad.data()) CHECK(g == 0.0f);
}

TEST_CASE("gradient suite passes") {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    for (const auto& c : gradient_suite(seed)) {
      INFO(c.name << " seed " << seed << " err " << c.max_rel_error);
      CHECK(c.passed());
      CHECK(c.coords == 20);
    }
  }
}
