#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "aatr/volume.hpp"

namespace aatr::morph {

/// Isotropic spherical kernel in voxel units: all integer offsets with
/// Euclidean norm <= radius. Radius 1 is the 6-neighbour cross.
struct StructuringElement {
  int radius = 0;
  std::vector<std::array<int, 3>> offsets;

  static StructuringElement sphere(int radius);
};

/// One scale of the opening block. `min_voxels` is a voxel count.
struct OpeningParams {
  int k = 2;
  std::size_t min_voxels = 500;
};

/// Voxel count used by the full-resolution scanner setting.
inline constexpr std::size_t kFullResolutionMinVoxels = 80'000;
inline constexpr std::size_t kDeskScaleMinVoxels = 500;

/// A voxel stays 1 iff every kernel offset lands on foreground; outside the
/// volume counts as background.
LabelVolume erode(const LabelVolume& binary, const StructuringElement& se);

/// Grow every label by `se` into unlabelled mask voxels. A contested voxel goes
/// to the label with the nearest voxel (Euclidean), ties to the smaller label.
LabelVolume dilate_constrained(const LabelVolume& labels, const StructuringElement& se, const LabelVolume& mask);

/// 26-connected components of a binary volume, labelled 1..n in canonical order.
LabelVolume ccl(const LabelVolume& binary);

/// Drop components with fewer than `min_voxels` voxels, then relabel canonically.
LabelVolume prune_small(const LabelVolume& labels, std::size_t min_voxels);

/// Opening block applied to every object independently: erode, label the
/// surviving 26-connected parts, prune parts below min_voxels. Objects that
/// break into two or more parts are replaced by those parts grown back
/// (dilate_constrained) inside the object's own voxels; every other object is
/// kept unchanged. Output labels are canonical.
///
/// Voxels of a split object that lie farther than k from every surviving part
/// are not reassigned here; callers recover them from the residual image.
LabelVolume opening_block(const LabelVolume& labels, const OpeningParams& params, unsigned threads = 1);

/// Assign each `targets` voxel (nonzero) the label of its nearest labelled
/// voxel in `labels` (Euclidean in voxel units, ties to the smaller label),
/// considering only labelled voxels within sqrt(max_dist2). Targets without a
/// labelled voxel in reach stay 0. `labels` must be zero at target voxels.
LabelVolume assign_nearest(const LabelVolume& labels, const LabelVolume& targets,
                           double max_dist2 = std::numeric_limits<double>::infinity());

}  // namespace aatr::morph
