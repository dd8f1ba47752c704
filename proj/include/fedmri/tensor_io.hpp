#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedmri/tensor.hpp"

namespace fedmri {

// TensorFile layout (little-endian):
//   "FTNS" | u16 version=1 | u8 dtype (0 real32, 1 complex64) | u8 rank |
//   rank × u32 dims | float32 payload
inline constexpr std::uint16_t kTensorFileVersion = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
// Throws FormatError carrying the byte offset of the first bad field.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace fedmri
