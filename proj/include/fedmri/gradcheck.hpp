#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "fedmri/autodiff.hpp"

namespace fedmri::ad {

// Builds the scalar loss on a fresh tape. Must be deterministic.
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckOptions {
  std::size_t n_coords = 20;
  double eps = 1e-3;
  std::uint64_t seed = 0;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, abs_floor).
  double abs_floor = 1e-6;
  // 2: (f(x+h) - f(x-h)) / 2h.  4: (8(f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h.
  int stencil = 2;
  // Redraw coordinates whose probes change a relu/l1 branch.
  bool skip_kinks = true;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t coords_skipped = 0;
};

/// Compares backward() against central differences at randomly chosen
/// parameter coordinates (at most 50·n_coords draws). Parameter values are
/// restored afterwards and all grads are left zeroed.
GradCheckResult grad_check(std::span<Parameter* const> params, const LossBuilder& build_loss,
                           const GradCheckOptions& options = {});

}  // namespace fedmri::ad
