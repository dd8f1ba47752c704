#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedmri::ad {

struct SuiteCase {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t coords = 0;

  bool passed() const { return max_rel_error < tolerance; }
};

/// Finite-difference checks of a 1×1 convolution (loss linear in the
/// weights), a TinyUNet, and the full KI-Net cascade through the FFTs and
/// data consistency.
std::vector<SuiteCase> gradient_suite(std::uint64_t seed = 0, std::size_t coords_per_case = 20);

}  // namespace fedmri::ad
