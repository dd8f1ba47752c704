#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fedmri/tensor.hpp"

namespace fedmri::sim {

using Rng = std::mt19937_64;

enum class MaskKind { uniform1d, cartesian1d, radial2d, random2d };

std::string to_string(MaskKind k);
MaskKind mask_kind_from_string(const std::string& s);

struct MaskSpec {
  MaskKind kind = MaskKind::uniform1d;
  double acceleration = 3.0;
  double center_fraction = 0.08;
  std::size_t height = 64;
  std::size_t width = 64;

  friend bool operator==(const MaskSpec&, const MaskSpec&) = default;
};

/// Binary k-space sampling pattern in the FFT's native layout (DC at
/// index (0, 0)); geometry such as "center block" and "lines through the
/// center" refers to signed frequencies around DC.
struct Mask {
  Tensor bits;  // real32 H×W, entries 0 or 1
  MaskSpec spec;

  double sampled_fraction() const;
};

/// Throws ConfigError for acceleration <= 1, center_fraction outside [0, 1),
/// or non-positive shape.
Mask make_mask(const MaskSpec& spec, std::uint64_t seed);

// Allowed |fraction - 1/R|: 0.05 for the randomized and radial kinds.
// uniform1d is exact by construction against 1/ceil(R) up to the center
// block, so its slack is center_fraction + 2/W.
double fraction_tolerance(const MaskSpec& spec);
double nominal_fraction(const MaskSpec& spec);
bool fraction_within_tolerance(const Mask& mask);

struct Measurement {
  Tensor x;       // real32 H×W zero-filled magnitude image
  Tensor k_meas;  // complex64 H×W masked k-space
};

/// k_meas = mask ⊙ (fft2(y) + ε), x = |ifft2(k_meas)|, ε complex Gaussian
/// with per-component std noise_sigma. Noise is only drawn when sigma > 0.
Measurement undersample(const Tensor& y, const Mask& mask, double noise_sigma, Rng& rng);

/// Zero-filled magnitude image of a stored measurement.
Tensor zero_filled(const Tensor& k_meas);

enum class PhantomStyle { ellipses, rects, mixed };

std::string to_string(PhantomStyle s);
PhantomStyle phantom_style_from_string(const std::string& s);

struct ClientProfile {
  std::string client_id = "client";
  PhantomStyle phantom_style = PhantomStyle::ellipses;
  double intensity_mean = 0.5;
  double intensity_std = 0.1;
  double texture_noise_std = 0.02;
  MaskSpec mask_spec;
  std::size_t n_train = 28;
  std::size_t n_test = 12;
  int min_shapes = 3;
  int max_shapes = 8;

  friend bool operator==(const ClientProfile&, const ClientProfile&) = default;
};

struct SplitCounts {
  std::size_t train;
  std::size_t test;
};
// 7:3 train/test split of n images.
SplitCounts split_7_3(std::size_t n);

/// Phantom of size mask_spec.height × mask_spec.width: a large body shape
/// followed by smaller inner shapes (min_shapes..max_shapes in total), each
/// with intensity ~ N(intensity_mean, intensity_std), plus texture noise on
/// the object support. Values are clipped to [0, 1].
Tensor gen_phantom(const ClientProfile& profile, Rng& rng);

struct Sample {
  Tensor x;       // zero-filled input image
  Tensor k_meas;  // measured k-space
  Tensor y;       // fully sampled target
};

struct ClientDataset {
  std::string client_id;
  Mask mask;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

ClientDataset build_client_dataset(const ClientProfile& profile, std::uint64_t seed, double noise_sigma = 0.0);

/// Loads real images from a directory holding index.json:
///   {"client_id": str, "files": [TensorFile paths], "mask": {MaskSpec},
///    "mask_seed": int (optional), "n_train": int (optional, default 7:3)}
/// Every file must be a real32 H×W image matching the mask shape.
ClientDataset load_client_dataset(const std::filesystem::path& dir, double noise_sigma = 0.0);

}  // namespace fedmri::sim
