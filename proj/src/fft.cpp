#include "fedmri/fft.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fedmri/errors.hpp"

namespace fedmri {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

namespace {

using cd = std::complex<double>;

// exp(-2*pi*i*j/n) for j < n/2, evaluated directly so each twiddle carries a
// single rounding.
const std::vector<cd>& twiddles(std::size_t n) {
  thread_local std::vector<std::vector<cd>> cache(64);
  const auto slot = static_cast<std::size_t>(std::countr_zero(n));
  auto& table = cache[slot];
  if (table.empty() && n > 1) {
    table.resize(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
      table[j] = cd(std::cos(angle), std::sin(angle));
    }
  }
  return table;
}

// Iterative Cooley-Tukey on a contiguous buffer of length n (power of two).
// The inverse direction is unscaled.
void fft1d(std::vector<cd>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n < 2) return;
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto& table = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t k = 0; k < half; ++k) {
      const cd w = inverse ? std::conj(table[k * stride]) : table[k * stride];
      for (std::size_t start = 0; start < n; start += len) {
        const cd u = a[start + k];
        const cd v = a[start + k + half] * w;
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
}

void check_fft_input(const Tensor& t) {
  if (!t.is_complex()) throw DtypeError("fft2/ifft2 require complex64 input");
  if (t.rank() != 2) throw DimensionError("fft2/ifft2 require rank-2 input, got " + shape_string(t.shape()));
  if (!is_power_of_two(t.dim(0)) || !is_power_of_two(t.dim(1)))
    throw DimensionError("fft2/ifft2 require power-of-two dims, got " + shape_string(t.shape()));
}

Tensor transform(const Tensor& t, bool inverse) {
  check_fft_input(t);
  const std::size_t h = t.dim(0), w = t.dim(1), n = h * w;
  std::vector<float> re(n), im(n);
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = t.data()[2 * i];
    im[i] = t.data()[2 * i + 1];
  }
  fft2_planar(re, im, h, w, inverse);
  Tensor out(t.shape(), DType::complex64);
  for (std::size_t i = 0; i < n; ++i) out.set_complex(i, {re[i], im[i]});
  return out;
}

}  // namespace

void fft2_planar(std::span<float> re, std::span<float> im, std::size_t height, std::size_t width, bool inverse) {
  if (!is_power_of_two(height) || !is_power_of_two(width))
    throw DimensionError("fft2 requires power-of-two dims");
  if (re.size() != height * width || im.size() != height * width)
    throw DimensionError("fft2_planar: plane size does not match H*W");

  std::vector<cd> work(height * width);
  for (std::size_t i = 0; i < work.size(); ++i) work[i] = cd(re[i], im[i]);

  std::vector<cd> line(width);
  for (std::size_t r = 0; r < height; ++r) {
    std::copy_n(work.begin() + static_cast<std::ptrdiff_t>(r * width), width, line.begin());
    fft1d(line, inverse);
    std::copy(line.begin(), line.end(), work.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  line.resize(height);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 0; r < height; ++r) line[r] = work[r * width + c];
    fft1d(line, inverse);
    for (std::size_t r = 0; r < height; ++r) work[r * width + c] = line[r];
  }

  const double scale = inverse ? 1.0 / static_cast<double>(height * width) : 1.0;
  for (std::size_t i = 0; i < work.size(); ++i) {
    re[i] = static_cast<float>(work[i].real() * scale);
    im[i] = static_cast<float>(work[i].imag() * scale);
  }
}

Tensor fft2(const Tensor& t) { return transform(t, false); }
Tensor ifft2(const Tensor& t) { return transform(t, true); }

}  // namespace fedmri
