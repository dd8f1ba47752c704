#pragma once

#include <cstddef>
#include <span>

#include "fedmri/tensor.hpp"

namespace fedmri {

bool is_power_of_two(std::size_t n) noexcept;

/// Unnormalized forward 2-D DFT of a complex64 H×W tensor (radix-2, so H and
/// W must be powers of two). Throws DtypeError for real input and
/// DimensionError for other shapes.
Tensor fft2(const Tensor& t);

/// Inverse of fft2; carries the 1/(H·W) factor.
Tensor ifft2(const Tensor& t);

// In-place transform over planar storage (separate real and imaginary
// planes, each H*W floats, row-major). Shared by the tensor API above and
// the differentiable FFT layers.
void fft2_planar(std::span<float> re, std::span<float> im, std::size_t height, std::size_t width, bool inverse);

}  // namespace fedmri
