#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "aatr/volume.hpp"

namespace aatr {

inline constexpr double kNoFeature = std::numeric_limits<double>::infinity();

/// Exact squared Euclidean distance from every voxel to the nearest voxel with
/// feature[i] != 0, using the separable lower-envelope algorithm of
/// Felzenszwalb & Huttenlocher. `weights` scales each axis (voxel pitch).
/// Voxels in a grid without any feature receive kNoFeature.
std::vector<double> squared_edt(std::span<const std::uint8_t> feature, const Dims& dims,
                                const std::array<double, 3>& weights = {1.0, 1.0, 1.0});

}  // namespace aatr
