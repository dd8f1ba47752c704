#include "fedmri/mri_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>

#include "fedmri/errors.hpp"
#include "fedmri/fft.hpp"
#include "fedmri/json_io.hpp"
#include "fedmri/tensor_io.hpp"

namespace fedmri::sim {

std::string to_string(MaskKind k) {
  switch (k) {
    case MaskKind::uniform1d: return "uniform1d";
    case MaskKind::cartesian1d: return "cartesian1d";
    case MaskKind::radial2d: return "radial2d";
    case MaskKind::random2d: return "random2d";
  }
  return "?";
}

MaskKind mask_kind_from_string(const std::string& s) {
  for (auto k : {MaskKind::uniform1d, MaskKind::cartesian1d, MaskKind::radial2d, MaskKind::random2d})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown mask kind '" + s + "'");
}

std::string to_string(PhantomStyle s) {
  switch (s) {
    case PhantomStyle::ellipses: return "ellipses";
    case PhantomStyle::rects: return "rects";
    case PhantomStyle::mixed: return "mixed";
  }
  return "?";
}

PhantomStyle phantom_style_from_string(const std::string& s) {
  for (auto k : {PhantomStyle::ellipses, PhantomStyle::rects, PhantomStyle::mixed})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown phantom_style '" + s + "'");
}

double Mask::sampled_fraction() const {
  double ones = 0.0;
  for (float v : bits.data()) ones += v;
  return ones / static_cast<double>(bits.numel());
}

// ---------------------------------------------------------------------------
// Masks

namespace {

// Signed frequency of native FFT index i along an axis of length n.
long signed_freq(std::size_t i, std::size_t n) {
  return i < n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
}

// Is signed frequency f inside a block of `width` samples centred on DC
// (the block an fftshift-ed layout would place at n/2 - width/2).
bool in_center_block(long f, std::size_t width) {
  const long lo = -static_cast<long>(width / 2);
  return f >= lo && f < lo + static_cast<long>(width);
}

void validate(const MaskSpec& spec) {
  if (!(spec.acceleration > 1.0)) throw ConfigError("mask acceleration must be > 1, got " + std::to_string(spec.acceleration));
  if (!(spec.center_fraction >= 0.0 && spec.center_fraction < 1.0))
    throw ConfigError("mask center_fraction must be in [0, 1)");
  if (spec.height == 0 || spec.width == 0) throw ConfigError("mask shape must be positive");
}

void fill_column(Tensor& bits, std::size_t col) {
  const std::size_t h = bits.dim(0), w = bits.dim(1);
  for (std::size_t r = 0; r < h; ++r) bits[r * w + col] = 1.0f;
}

std::size_t count_ones(const Tensor& bits) {
  return static_cast<std::size_t>(std::count(bits.data().begin(), bits.data().end(), 1.0f));
}

std::size_t target_count(std::size_t total, double acceleration) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(total) / acceleration - 1e-9));
}

}  // namespace

Mask make_mask(const MaskSpec& spec, std::uint64_t seed) {
  validate(spec);
  const std::size_t h = spec.height, w = spec.width;
  Tensor bits({h, w});
  Rng rng(seed);

  switch (spec.kind) {
    case MaskKind::uniform1d: {
      const auto step = static_cast<long>(std::ceil(spec.acceleration - 1e-12));
      const auto center = static_cast<std::size_t>(std::lround(spec.center_fraction * static_cast<double>(w)));
      for (std::size_t c = 0; c < w; ++c) {
        const long f = signed_freq(c, w);
        if (std::labs(f) % step == 0 || in_center_block(f, center)) fill_column(bits, c);
      }
      break;
    }
    case MaskKind::cartesian1d: {
      const auto center = static_cast<std::size_t>(std::lround(spec.center_fraction * static_cast<double>(w)));
      std::vector<std::size_t> rest;
      std::size_t taken = 0;
      for (std::size_t c = 0; c < w; ++c) {
        if (in_center_block(signed_freq(c, w), center)) {
          fill_column(bits, c);
          ++taken;
        } else {
          rest.push_back(c);
        }
      }
      std::shuffle(rest.begin(), rest.end(), rng);
      const std::size_t need = target_count(w, spec.acceleration);
      for (std::size_t i = 0; taken < need && i < rest.size(); ++i, ++taken) fill_column(bits, rest[i]);
      break;
    }
    case MaskKind::radial2d: {
      const double lines_exact = static_cast<double>(h * w) / (spec.acceleration * static_cast<double>(std::max(h, w)));
      const auto lines = static_cast<std::size_t>(std::ceil(lines_exact - 1e-9));
      // A pixel belongs to a line when its centre lies within half a pixel
      // of it: a unit-width rasterization of each spoke through DC.
      for (std::size_t r = 0; r < h; ++r) {
        const double fy = static_cast<double>(signed_freq(r, h));
        for (std::size_t c = 0; c < w; ++c) {
          const double fx = static_cast<double>(signed_freq(c, w));
          for (std::size_t l = 0; l < lines; ++l) {
            const double theta = std::numbers::pi * static_cast<double>(l) / static_cast<double>(lines);
            if (std::abs(fx * std::sin(theta) - fy * std::cos(theta)) <= 0.5) {
              bits[r * w + c] = 1.0f;
              break;
            }
          }
        }
      }
      break;
    }
    case MaskKind::random2d: {
      const auto side = static_cast<std::size_t>(
          std::lround(std::sqrt(spec.center_fraction * static_cast<double>(h * w))));
      std::vector<std::size_t> rest;
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
          if (in_center_block(signed_freq(r, h), side) && in_center_block(signed_freq(c, w), side))
            bits[r * w + c] = 1.0f;
          else
            rest.push_back(r * w + c);
        }
      std::shuffle(rest.begin(), rest.end(), rng);
      std::size_t taken = count_ones(bits);
      const std::size_t need = target_count(h * w, spec.acceleration);
      for (std::size_t i = 0; taken < need && i < rest.size(); ++i, ++taken) bits[rest[i]] = 1.0f;
      break;
    }
  }
  return Mask{std::move(bits), spec};
}

double nominal_fraction(const MaskSpec& spec) {
  if (spec.kind == MaskKind::uniform1d) return 1.0 / std::ceil(spec.acceleration - 1e-12);
  return 1.0 / spec.acceleration;
}

double fraction_tolerance(const MaskSpec& spec) {
  if (spec.kind == MaskKind::uniform1d) return spec.center_fraction + 2.0 / static_cast<double>(spec.width);
  return 0.05;
}

bool fraction_within_tolerance(const Mask& mask) {
  return std::abs(mask.sampled_fraction() - nominal_fraction(mask.spec)) <= fraction_tolerance(mask.spec) + 1e-12;
}

// ---------------------------------------------------------------------------
// Forward model

Tensor zero_filled(const Tensor& k_meas) { return magnitude(ifft2(k_meas)); }

Measurement undersample(const Tensor& y, const Mask& mask, double noise_sigma, Rng& rng) {
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
  if (y.is_complex() || y.rank() != 2) throw DtypeError("undersample: y must be real32 H×W");
  require_same_shape(y, mask.bits, "undersample");
  Tensor k = fft2(to_complex(y));
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (auto& v : k.data()) v = static_cast<float>(v + noise(rng));
  }
  for (std::size_t i = 0; i < mask.bits.numel(); ++i)
    if (mask.bits[i] == 0.0f) k.set_complex(i, {0.0f, 0.0f});
  Tensor x = zero_filled(k);
  return {std::move(x), std::move(k)};
}

// ---------------------------------------------------------------------------
// Phantoms

namespace {

struct Shape2d {
  bool ellipse;
  double cy, cx, ry, rx, angle;
  float intensity;

  bool contains(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (c * dx + s * dy) / rx;
    const double v = (-s * dx + c * dy) / ry;
    return ellipse ? (u * u + v * v <= 1.0) : (std::abs(u) <= 1.0 && std::abs(v) <= 1.0);
  }
};

bool pick_ellipse(PhantomStyle style, Rng& rng) {
  if (style == PhantomStyle::ellipses) return true;
  if (style == PhantomStyle::rects) return false;
  return std::bernoulli_distribution(0.5)(rng);
}

}  // namespace

Tensor gen_phantom(const ClientProfile& profile, Rng& rng) {
  const std::size_t h = profile.mask_spec.height, w = profile.mask_spec.width;
  if (profile.min_shapes < 0 || profile.max_shapes < profile.min_shapes)
    throw ConfigError("phantom shape count range is invalid");
  const auto hd = static_cast<double>(h), wd = static_cast<double>(w);

  std::uniform_int_distribution<int> count_dist(profile.min_shapes, profile.max_shapes);
  std::normal_distribution<double> intensity(profile.intensity_mean, profile.intensity_std);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int count = count_dist(rng);

  std::vector<Shape2d> shapes;
  for (int i = 0; i < count; ++i) {
    Shape2d s{};
    s.ellipse = pick_ellipse(profile.phantom_style, rng);
    if (i == 0) {
      // Body: large, near-centred, fills most of the field of view.
      s.cy = hd * (0.5 + 0.04 * (unit(rng) - 0.5));
      s.cx = wd * (0.5 + 0.04 * (unit(rng) - 0.5));
      const double lo = s.ellipse ? 0.40 : 0.32, hi = s.ellipse ? 0.48 : 0.42;
      s.ry = hd * (lo + (hi - lo) * unit(rng));
      s.rx = wd * (lo + (hi - lo) * unit(rng));
      s.angle = 0.0;
    } else {
      s.cy = hd * (0.5 + 0.5 * (unit(rng) - 0.5));
      s.cx = wd * (0.5 + 0.5 * (unit(rng) - 0.5));
      s.ry = hd * (0.05 + 0.15 * unit(rng));
      s.rx = wd * (0.05 + 0.15 * unit(rng));
      s.angle = s.ellipse ? std::numbers::pi * unit(rng) : 0.0;
    }
    s.intensity = static_cast<float>(std::clamp(intensity(rng), 0.0, 1.0));
    shapes.push_back(s);
  }

  Tensor img({h, w});
  std::vector<bool> support(h * w, false);
  for (const auto& s : shapes)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c)
        if (s.contains(static_cast<double>(r) + 0.5, static_cast<double>(c) + 0.5)) {
          img[r * w + c] = s.intensity;
          support[r * w + c] = true;
        }

  if (profile.texture_noise_std > 0.0) {
    std::normal_distribution<double> texture(0.0, profile.texture_noise_std);
    for (std::size_t i = 0; i < h * w; ++i) {
      if (!support[i]) continue;
      img[i] = static_cast<float>(std::clamp(img[i] + texture(rng), 0.0, 1.0));
    }
  }
  return img;
}

SplitCounts split_7_3(std::size_t n) {
  const auto train = static_cast<std::size_t>(std::lround(0.7 * static_cast<double>(n)));
  return {train, n - train};
}

// ---------------------------------------------------------------------------
// Datasets

ClientDataset build_client_dataset(const ClientProfile& profile, std::uint64_t seed, double noise_sigma) {
  if (profile.n_train + profile.n_test < 2) throw ConfigError("a client needs at least two images");
  if (profile.n_train == 0) throw ConfigError("client '" + profile.client_id + "' has no training images");
  std::seed_seq mask_seq{seed, std::uint64_t{0x6d61736b}};
  std::uint64_t mask_seed = 0;
  {
    std::uint32_t out[2];
    mask_seq.generate(out, out + 2);
    mask_seed = (std::uint64_t{out[0]} << 32) | out[1];
  }

  ClientDataset ds{profile.client_id, make_mask(profile.mask_spec, mask_seed), {}, {}};
  Rng rng(seed);
  const std::size_t total = profile.n_train + profile.n_test;
  for (std::size_t i = 0; i < total; ++i) {
    Tensor y = gen_phantom(profile, rng);
    auto m = undersample(y, ds.mask, noise_sigma, rng);
    Sample s{std::move(m.x), std::move(m.k_meas), std::move(y)};
    (i < profile.n_train ? ds.train : ds.test).push_back(std::move(s));
  }
  return ds;
}

ClientDataset load_client_dataset(const std::filesystem::path& dir, double noise_sigma) {
  std::ifstream in(dir / "index.json");
  if (!in) throw ConfigError("missing index.json in " + dir.string());
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("index.json: ") + e.what());
  }
  for (auto it = index.begin(); it != index.end(); ++it)
    if (it.key() != "client_id" && it.key() != "files" && it.key() != "mask" && it.key() != "mask_seed" &&
        it.key() != "n_train")
      throw ConfigError("index.json: unknown key '" + it.key() + "'");

  const auto files = index.at("files").get<std::vector<std::string>>();
  if (files.size() < 2) throw ConfigError("index.json: need at least two images");
  const MaskSpec spec = mask_spec_from_json(index.at("mask"), "index.json mask");
  const auto mask_seed = index.value("mask_seed", std::uint64_t{0});
  const std::size_t n_train = index.contains("n_train") ? index.at("n_train").get<std::size_t>() : split_7_3(files.size()).train;
  if (n_train == 0 || n_train > files.size()) throw ConfigError("index.json: n_train out of range");

  ClientDataset ds{index.at("client_id").get<std::string>(), make_mask(spec, mask_seed), {}, {}};
  Rng rng(mask_seed);
  for (std::size_t i = 0; i < files.size(); ++i) {
    Tensor y = load_tensor(dir / files[i]);
    if (y.is_complex() || y.shape() != Shape{spec.height, spec.width})
      throw DimensionError("image " + files[i] + " must be real32 " + shape_string({spec.height, spec.width}));
    auto m = undersample(y, ds.mask, noise_sigma, rng);
    Sample s{std::move(m.x), std::move(m.k_meas), std::move(y)};
    (i < n_train ? ds.train : ds.test).push_back(std::move(s));
  }
  return ds;
}

}  // namespace fedmri::sim
