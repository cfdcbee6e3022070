#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aatr/error.hpp"

namespace aatr {

/// Modified Hounsfield Units: air is 0, water is 1024.
inline constexpr std::uint16_t kAirMhu = 0;
inline constexpr std::uint16_t kWaterMhu = 1024;
inline constexpr std::uint16_t kMaxMhu = 32767;

struct Dims {
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  std::uint32_t nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Millimetres per voxel along x, y, z. Stored as float to match the on-disk format.
using Spacing = std::array<float, 3>;

/// Dense voxel grid, x fastest, then y, then z.
template <class T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(Dims dims, Spacing spacing, T fill = T{})
      : dims_(dims), spacing_(spacing), voxels_(dims.count(), fill) {
    check_spacing();
  }
  Grid(Dims dims, Spacing spacing, std::vector<T> voxels)
      : dims_(dims), spacing_(spacing), voxels_(std::move(voxels)) {
    if (voxels_.size() != dims_.count())
      fail(ErrorKind::Shape, "voxel count does not match nx*ny*nz");
    check_spacing();
  }

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t size() const { return voxels_.size(); }

  std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_.ny) * z);
  }

  T& operator[](std::size_t i) { return voxels_[i]; }
  const T& operator[](std::size_t i) const { return voxels_[i]; }
  T& at(std::uint32_t x, std::uint32_t y, std::uint32_t z) { return voxels_[index(x, y, z)]; }
  const T& at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const { return voxels_[index(x, y, z)]; }

  std::span<T> voxels() { return voxels_; }
  std::span<const T> voxels() const { return voxels_; }

  double voxel_volume_mm3() const {
    return static_cast<double>(spacing_[0]) * spacing_[1] * spacing_[2];
  }

  template <class U>
  bool same_frame(const Grid<U>& other) const {
    return dims_ == other.dims() && spacing_ == other.spacing();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  void check_spacing() const {
    for (float s : spacing_)
      if (!(s > 0.0f)) fail(ErrorKind::Domain, "voxel spacing must be strictly positive");
  }

  Dims dims_{};
  Spacing spacing_{1.0f, 1.0f, 1.0f};
  std::vector<T> voxels_;
};

/// CT intensities in MHU, each within [0, 32767].
using RawVolume = Grid<std::uint16_t>;
/// Object labels; 0 is background. A binary volume uses labels {0, 1}.
using LabelVolume = Grid<std::uint32_t>;

template <class A, class B>
void require_same_frame(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_frame(b)) fail(ErrorKind::Shape, std::string(what) + ": volume dims/spacing mismatch");
}

/// Throws Domain if any intensity exceeds kMaxMhu.
void validate_raw(const RawVolume& raw);

struct IntensityWindow {
  std::uint16_t lower = 800;
  std::uint16_t upper = 2200;

  void validate() const;
  bool contains(std::uint16_t v) const { return v >= lower && v <= upper; }
};

/// Half-open voxel box [lo, hi).
struct Box {
  std::array<std::int64_t, 3> lo{0, 0, 0};
  std::array<std::int64_t, 3> hi{0, 0, 0};

  bool empty() const { return hi[0] <= lo[0] || hi[1] <= lo[1] || hi[2] <= lo[2]; }
  std::array<std::int64_t, 3> extent() const { return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}; }
  std::size_t count() const {
    if (empty()) return 0;
    auto e = extent();
    return static_cast<std::size_t>(e[0] * e[1] * e[2]);
  }
  void include(std::int64_t x, std::int64_t y, std::int64_t z);
  /// Grow by `margin` voxels on every side, clipped to `dims`.
  Box expanded(std::int64_t margin, const Dims& dims) const;
  Box merged(const Box& other) const;
};

std::uint32_t max_label(const LabelVolume& labels);
bool is_binary(const LabelVolume& labels);

/// Relabel objects 1..n by ascending raster index of each object's first voxel.
LabelVolume canonicalize(const LabelVolume& labels);

/// Per-label voxel counts; index 0 holds the background count.
std::vector<std::size_t> label_counts(const LabelVolume& labels);
/// Per-label bounding boxes; entry 0 is unused.
std::vector<Box> label_boxes(const LabelVolume& labels);

/// 1 where lower <= intensity <= upper, else 0.
LabelVolume threshold_to_binary(const RawVolume& raw, const IntensityWindow& window);

/// Residual image: 1 where a > 0 and b == 0, else 0.
LabelVolume label_subtract(const LabelVolume& a, const LabelVolume& b);

/// Residual labels are appended after the base labels: v = n_base + v_residual
/// wherever the residual is nonzero, base value elsewhere.
LabelVolume label_add(const LabelVolume& base, const LabelVolume& residual);

struct ObjectStats {
  std::uint32_t label = 0;
  std::size_t voxel_count = 0;
  double volume_mm3 = 0.0;
  double density_mhu = 0.0;  // mean intensity
  double mass_g = 0.0;
  double thickness_mm = 0.0;
};

/// Grams for `voxel_count` voxels of mean intensity `density_mhu`, taking
/// 1024 MHU as 1 g/cm^3 and 0 MHU as 0 g/cm^3.
double mass_from_density(double density_mhu, std::size_t voxel_count, double voxel_volume_mm3);

/// Thickness estimate: 2 * (largest interior distance to background) - min spacing.
/// A single voxel therefore measures one (smallest) voxel pitch.
double object_thickness_mm(const LabelVolume& labels, std::uint32_t label, const Box& box);

ObjectStats object_stats(const RawVolume& raw, const LabelVolume& labels, std::uint32_t label);

/// Stats for every label 1..max_label present in `labels`, ascending by label.
std::vector<ObjectStats> all_object_stats(const RawVolume& raw, const LabelVolume& labels);

}  // namespace aatr
