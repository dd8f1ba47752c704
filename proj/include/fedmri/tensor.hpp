#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedmri {

enum class DType : std::uint8_t { real32 = 0, complex64 = 1 };

std::string to_string(DType dtype);

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of 32-bit floats. complex64 tensors store
/// interleaved (re, im) pairs, so the float buffer holds 2 * numel() values.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, DType dtype = DType::real32);
  Tensor(Shape shape, std::vector<float> data, DType dtype = DType::real32);

  static Tensor zeros(Shape shape, DType dtype = DType::real32) { return Tensor(std::move(shape), dtype); }
  static Tensor filled(Shape shape, float value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  DType dtype() const noexcept { return dtype_; }
  bool is_complex() const noexcept { return dtype_ == DType::complex64; }
  std::size_t numel() const noexcept { return numel_; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  std::size_t storage_size() const noexcept { return data_.size(); }

  // Element access on real tensors (flat index).
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  std::complex<float> complex_at(std::size_t i) const { return {data_[2 * i], data_[2 * i + 1]}; }
  void set_complex(std::size_t i, std::complex<float> v) {
    data_[2 * i] = v.real();
    data_[2 * i + 1] = v.imag();
  }

  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::size_t numel_ = 0;
  DType dtype_ = DType::real32;
  std::vector<float> data_;
};

// Bitwise equality of shape, dtype, and every payload float.
bool bitwise_equal(const Tensor& a, const Tensor& b);

float max_abs_diff(const Tensor& a, const Tensor& b);

Tensor to_complex(const Tensor& real);
Tensor real_part(const Tensor& complex);
Tensor magnitude(const Tensor& complex);

// complex64 H×W <-> real32 2×H×W (channel 0 = real, channel 1 = imaginary).
Tensor complex_to_channels(const Tensor& complex);
Tensor channels_to_complex(const Tensor& channels);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace fedmri
