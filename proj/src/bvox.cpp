#include "aatr/bvox.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace aatr {
namespace {

constexpr char kMagic[5] = {'B', 'V', 'O', 'X', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

template <class T>
std::vector<std::uint8_t> encode(const Grid<T>& v, BvoxType type) {
  std::vector<std::uint8_t> out;
  out.reserve(kBvoxHeaderBytes + v.size() * sizeof(T));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(type));
  put_u32(out, v.dims().nx);
  put_u32(out, v.dims().ny);
  put_u32(out, v.dims().nz);
  for (float s : v.spacing()) put_u32(out, std::bit_cast<std::uint32_t>(s));
  for (T x : v.voxels())
    for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>(x >> (8 * b)));
  return out;
}

template <class T>
std::vector<T> decode_payload(const std::uint8_t* p, std::size_t n) {
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i, p += sizeof(T)) {
    T x = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) x = static_cast<T>(x | static_cast<T>(p[b]) << (8 * b));
    out[i] = x;
  }
  return out;
}

void write_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_bvox(const RawVolume& v) { return encode(v, BvoxType::Raw); }
std::vector<std::uint8_t> encode_bvox(const LabelVolume& v) { return encode(v, BvoxType::Labels); }

AnyVolume decode_bvox(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kBvoxHeaderBytes) fail(ErrorKind::Format, "bvox: truncated header");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) fail(ErrorKind::Format, "bvox: bad magic");
  const std::uint8_t type = bytes[5];
  if (type > 1) fail(ErrorKind::Format, "bvox: unknown dtype " + std::to_string(type));
  const std::uint8_t* p = bytes.data() + 6;
  const Dims dims{get_u32(p), get_u32(p + 4), get_u32(p + 8)};
  Spacing spacing{};
  for (int a = 0; a < 3; ++a) spacing[a] = std::bit_cast<float>(get_u32(p + 12 + 4 * a));

  const std::size_t elem = type == 0 ? 2 : 4;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / elem;
  const std::uint64_t n = static_cast<std::uint64_t>(dims.nx) * dims.ny;
  if (dims.nz != 0 && n > limit / dims.nz) fail(ErrorKind::Format, "bvox: dims overflow");
  const std::uint64_t payload = n * dims.nz * elem;
  if (bytes.size() - kBvoxHeaderBytes < payload) fail(ErrorKind::Format, "bvox: truncated payload");
  if (bytes.size() - kBvoxHeaderBytes > payload) fail(ErrorKind::Format, "bvox: trailing bytes after payload");
  for (float s : spacing)
    if (!(s > 0.0f)) fail(ErrorKind::Format, "bvox: non-positive spacing");

  const std::uint8_t* data = bytes.data() + kBvoxHeaderBytes;
  if (type == 0) {
    RawVolume raw(dims, spacing, decode_payload<std::uint16_t>(data, dims.count()));
    for (auto v : raw.voxels())
      if (v > kMaxMhu) fail(ErrorKind::Format, "bvox: raw intensity above 32767");
    return raw;
  }
  return LabelVolume(dims, spacing, decode_payload<std::uint32_t>(data, dims.count()));
}

void write_volume(const RawVolume& v, const std::filesystem::path& path) { write_bytes(encode_bvox(v), path); }
void write_volume(const LabelVolume& v, const std::filesystem::path& path) { write_bytes(encode_bvox(v), path); }

AnyVolume read_volume(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_bvox(bytes);
}

RawVolume read_raw(const std::filesystem::path& path) {
  auto v = read_volume(path);
  if (auto* raw = std::get_if<RawVolume>(&v)) return std::move(*raw);
  fail(ErrorKind::Format, path.string() + ": expected a raw (u16) volume");
}

LabelVolume read_labels(const std::filesystem::path& path) {
  auto v = read_volume(path);
  if (auto* labels = std::get_if<LabelVolume>(&v)) return std::move(*labels);
  fail(ErrorKind::Format, path.string() + ": expected a label (u32) volume");
}

}  // namespace aatr
