#include "fedmri/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "fedmri/errors.hpp"

namespace fedmri {

std::string to_string(DType dtype) { return dtype == DType::real32 ? "real32" : "complex64"; }

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

std::size_t floats_per_element(DType dtype) { return dtype == DType::complex64 ? 2 : 1; }

void check_shape(const Shape& shape) {
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
}

}  // namespace

Tensor::Tensor(Shape shape, DType dtype) : shape_(std::move(shape)), numel_(shape_numel(shape_)), dtype_(dtype) {
  check_shape(shape_);
  data_.assign(numel() * floats_per_element(dtype_), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data, DType dtype)
    : shape_(std::move(shape)), numel_(shape_numel(shape_)), dtype_(dtype), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != numel() * floats_per_element(dtype_))
    throw DimensionError("buffer of " + std::to_string(data_.size()) + " floats does not match " +
                         to_string(dtype_) + " shape " + shape_string(shape_));
}

Tensor Tensor::filled(Shape shape, float value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel())
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  return Tensor(std::move(shape), data_, dtype_);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() || a.dtype() != b.dtype()) return false;
  auto da = a.data();
  auto db = b.data();
  return std::memcmp(da.data(), db.data(), da.size_bytes()) == 0;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  if (a.dtype() != b.dtype()) throw DtypeError("max_abs_diff: dtype mismatch");
  float worst = 0.0f;
  if (a.is_complex()) {
    for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(a.complex_at(i) - b.complex_at(i)));
  } else {
    for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

Tensor to_complex(const Tensor& real) {
  if (real.is_complex()) throw DtypeError("to_complex: input is already complex64");
  Tensor out(real.shape(), DType::complex64);
  for (std::size_t i = 0; i < real.numel(); ++i) out.set_complex(i, {real[i], 0.0f});
  return out;
}

Tensor real_part(const Tensor& complex) {
  if (!complex.is_complex()) throw DtypeError("real_part: expected complex64");
  Tensor out(complex.shape());
  for (std::size_t i = 0; i < complex.numel(); ++i) out[i] = complex.data()[2 * i];
  return out;
}

Tensor magnitude(const Tensor& complex) {
  if (!complex.is_complex()) throw DtypeError("magnitude: expected complex64");
  Tensor out(complex.shape());
  auto d = complex.data();
  for (std::size_t i = 0; i < complex.numel(); ++i) {
    const double re = d[2 * i];
    const double im = d[2 * i + 1];
    out[i] = static_cast<float>(std::sqrt(re * re + im * im));
  }
  return out;
}

Tensor complex_to_channels(const Tensor& complex) {
  if (!complex.is_complex() || complex.rank() != 2) throw DtypeError("complex_to_channels: expected complex64 H×W");
  const std::size_t n = complex.numel();
  Tensor out({2, complex.dim(0), complex.dim(1)});
  auto d = complex.data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = d[2 * i];
    out[n + i] = d[2 * i + 1];
  }
  return out;
}

Tensor channels_to_complex(const Tensor& channels) {
  if (channels.is_complex() || channels.rank() != 3 || channels.dim(0) != 2)
    throw DimensionError("channels_to_complex: expected real32 2×H×W, got " + shape_string(channels.shape()));
  const std::size_t n = channels.dim(1) * channels.dim(2);
  Tensor out({channels.dim(1), channels.dim(2)}, DType::complex64);
  for (std::size_t i = 0; i < n; ++i) out.set_complex(i, {channels[i], channels[n + i]});
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

}  // namespace fedmri
