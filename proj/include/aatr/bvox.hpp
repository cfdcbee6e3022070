#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "aatr/volume.hpp"

namespace aatr {

/// BVOX container, little-endian, no padding:
///   "BVOX1" | u8 dtype (0 = u16 raw MHU, 1 = u32 labels) | u32 nx ny nz |
///   f32 sx sy sz | payload (x fastest, then y, then z)
inline constexpr std::size_t kBvoxHeaderBytes = 5 + 1 + 3 * 4 + 3 * 4;

enum class BvoxType : std::uint8_t { Raw = 0, Labels = 1 };

using AnyVolume = std::variant<RawVolume, LabelVolume>;

std::vector<std::uint8_t> encode_bvox(const RawVolume& v);
std::vector<std::uint8_t> encode_bvox(const LabelVolume& v);
AnyVolume decode_bvox(std::span<const std::uint8_t> bytes);

void write_volume(const RawVolume& v, const std::filesystem::path& path);
void write_volume(const LabelVolume& v, const std::filesystem::path& path);
AnyVolume read_volume(const std::filesystem::path& path);

/// Typed readers; a dtype mismatch is a Format error.
RawVolume read_raw(const std::filesystem::path& path);
LabelVolume read_labels(const std::filesystem::path& path);

}  // namespace aatr
