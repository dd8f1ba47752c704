#include "fedmri/tensor_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "fedmri/errors.hpp"

namespace fedmri {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'T', 'N', 'S'};
constexpr std::size_t kHeaderSize = 8;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xff));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.rank() == 0 || t.rank() > 255) throw DimensionError("TensorFile rank must be in [1, 255]");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 4 * t.rank() + 4 * t.storage_size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u16(out, kTensorFileVersion);
  out.push_back(static_cast<std::uint8_t>(t.dtype()));
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) {
    if (d > 0xffffffffu) throw DimensionError("TensorFile dims must fit in 32 bits");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (float f : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> b) {
  if (b.size() < 4) throw FormatError("truncated magic", b.size());
  if (!std::equal(std::begin(kMagic), std::end(kMagic), b.begin())) throw FormatError("bad magic", 0);
  if (b.size() < 6) throw FormatError("truncated version", b.size());
  const std::uint16_t version = static_cast<std::uint16_t>(b[4] | (b[5] << 8));
  if (version != kTensorFileVersion) throw FormatError("unsupported version " + std::to_string(version), 4);
  if (b.size() < kHeaderSize) throw FormatError("truncated header", b.size());
  if (b[6] > 1) throw FormatError("unknown dtype code " + std::to_string(b[6]), 6);
  const auto dtype = static_cast<DType>(b[6]);
  const std::size_t rank = b[7];
  if (rank == 0) throw FormatError("rank must be positive", 7);

  const std::size_t dims_end = kHeaderSize + 4 * rank;
  if (b.size() < dims_end) throw FormatError("truncated dims", b.size());
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    shape[i] = get_u32(b, kHeaderSize + 4 * i);
    if (shape[i] == 0) throw FormatError("zero dimension", kHeaderSize + 4 * i);
  }

  const std::size_t floats = shape_numel(shape) * (dtype == DType::complex64 ? 2 : 1);
  const std::size_t expected = dims_end + 4 * floats;
  if (b.size() < expected) throw FormatError("truncated payload", b.size());
  if (b.size() > expected) throw FormatError("trailing bytes after payload", expected);

  std::vector<float> data(floats);
  for (std::size_t i = 0; i < floats; ++i) data[i] = std::bit_cast<float>(get_u32(b, dims_end + 4 * i));
  return Tensor(std::move(shape), std::move(data), dtype);
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

}  // namespace fedmri
