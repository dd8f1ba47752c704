#include "fedmri/grad_suite.hpp"

#include <random>

#include "fedmri/gradcheck.hpp"
#include "fedmri/layers.hpp"
#include "fedmri/mri_sim.hpp"
#include "fedmri/recon.hpp"

namespace fedmri::ad {

namespace {

// Every case compares against a constant target below all outputs, so the
// L1 loss is a plain mean of the outputs.

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (float& v : t.data()) v = static_cast<float>(u(rng));
  return t;
}

GradCheckOptions options_for(std::uint64_t seed, std::size_t coords) {
  GradCheckOptions opt;
  opt.n_coords = coords;
  opt.seed = seed;
  return opt;
}

// Deep float32 models: roundoff in the loss is ~1e-7, so the probe is wider
// and fourth order, and gradients below 1e-3 (the output bias gradient is 1)
// are compared absolutely.
GradCheckOptions deep_options(std::uint64_t seed, std::size_t coords) {
  GradCheckOptions opt = options_for(seed, coords);
  opt.eps = 3e-2;
  opt.stencil = 4;
  opt.abs_floor = 1e-3;
  return opt;
}

SuiteCase conv_case(std::uint64_t seed, std::size_t coords) {
  std::mt19937_64 rng(seed);
  Parameter w("w", random_tensor({3, 2, 1, 1}, rng));
  Parameter b("b", random_tensor({3}, rng));
  Tensor x = random_tensor({2, 8, 8}, rng, 0.0, 1.0);
  Tensor y = Tensor::filled({3, 8, 8}, -10.0f);
  std::vector<Parameter*> ps{&w, &b};
  auto r = grad_check(ps, [&](Tape& t) {
    return l1_loss(t, conv2d(t, t.constant(x), t.parameter(w), t.parameter(b)), t.constant(y));
  }, options_for(seed, coords));
  return {"conv1x1", r.max_rel_error, 1e-4, r.coords_checked};
}

SuiteCase unet_case(std::uint64_t seed, std::size_t coords) {
  std::mt19937_64 rng(seed + 1);
  auto params = recon::build_tiny_unet({1, 1, 8}, rng);
  Tensor x = random_tensor({1, 8, 8}, rng, 0.0, 1.0);
  Tensor y = Tensor::filled({1, 8, 8}, -10.0f);
  auto ps = params.parameters();
  auto r = grad_check(ps, [&](Tape& t) {
    auto out = recon::tiny_unet_forward(t, params, recon::GradScope::all, "unet", t.constant(x));
    return l1_loss(t, out, t.constant(y));
  }, deep_options(seed, coords));
  return {"tiny_unet", r.max_rel_error, 1e-2, r.coords_checked};
}

SuiteCase kinet_case(std::uint64_t seed, std::size_t coords) {
  std::mt19937_64 rng(seed + 2);
  auto params = recon::build_kinet({}, rng);
  sim::MaskSpec ms;
  ms.kind = sim::MaskKind::random2d;
  ms.acceleration = 3.0;
  ms.height = 8;
  ms.width = 8;
  auto mask = sim::make_mask(ms, seed);
  // image bounded away from 0 keeps the modulus smooth
  Tensor image = random_tensor({8, 8}, rng, 0.5, 1.0);
  auto meas = sim::undersample(image, mask, 0.0, rng);
  Tensor below = Tensor::filled({8, 8}, -10.0f);
  auto ps = params.parameters();
  auto r = grad_check(ps, [&](Tape& t) {
    return recon::reconstruction_loss(t, params, meas.k_meas, mask.bits, below, true, recon::GradScope::all);
  }, deep_options(seed, coords));
  return {"kinet", r.max_rel_error, 1e-2, r.coords_checked};
}

}  // namespace

std::vector<SuiteCase> gradient_suite(std::uint64_t seed, std::size_t coords_per_case) {
  return {conv_case(seed, coords_per_case), unet_case(seed, coords_per_case), kinet_case(seed, coords_per_case)};
}

}  // namespace fedmri::ad
