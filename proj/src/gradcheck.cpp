#include "fedmri/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace fedmri::ad {

GradCheckResult grad_check(std::span<Parameter* const> params, const LossBuilder& build_loss,
                           const GradCheckOptions& options) {
  for (Parameter* p : params) p->zero_grad();
  std::uint64_t base_branch = 0;
  {
    Tape tape;
    Var loss = build_loss(tape);
    base_branch = tape.branch_hash();
    tape.backward(loss);
  }

  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (Parameter* p : params) {
    offsets.push_back(total);
    total += p->value.numel();
  }
  GradCheckResult result;
  if (total == 0) return result;

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  const std::size_t max_draws = 50 * options.n_coords;
  for (std::size_t draws = 0; result.coords_checked < options.n_coords && draws < max_draws; ++draws) {
    const std::size_t flat = pick(rng);
    std::size_t which = 0;
    while (which + 1 < params.size() && offsets[which + 1] <= flat) ++which;
    Parameter& p = *params[which];
    const std::size_t i = flat - offsets[which];
    const float original = p.value[i];

    bool same_piece = true;
    // f at the float nearest original + d; returns the realized offset too
    auto probe = [&](double d, double& realized) {
      p.value[i] = static_cast<float>(original + d);
      realized = static_cast<double>(p.value[i]) - static_cast<double>(original);
      Tape tape;
      const double v = tape.scalar(build_loss(tape));
      same_piece = same_piece && tape.branch_hash() == base_branch;
      return v;
    };

    double numeric = 0.0;
    const double h = options.eps;
    double r1 = 0.0, r2 = 0.0;
    if (options.stencil == 4) {
      const double f1 = probe(h, r1), f_1 = probe(-h, r2);
      double r3 = 0.0, r4 = 0.0;
      const double f2 = probe(2 * h, r3), f_2 = probe(-2 * h, r4);
      numeric = (8.0 * (f1 - f_1) - (f2 - f_2)) / (12.0 * h);
    } else {
      const double up = probe(h, r1), down = probe(-h, r2);
      numeric = (up - down) / (r1 - r2);
    }
    p.value[i] = original;

    if (options.skip_kinks && !same_piece) {
      ++result.coords_skipped;
      continue;
    }
    const double analytic = p.grad[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), options.abs_floor});
    result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic - numeric) / denom);
    ++result.coords_checked;
  }
  for (Parameter* p : params) p->zero_grad();
  return result;
}

}  // namespace fedmri::ad
