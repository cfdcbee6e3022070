#include "aatr/volume.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "aatr/distance_transform.hpp"

namespace aatr {

void validate_raw(const RawVolume& raw) {
  for (std::uint16_t v : raw.voxels())
    if (v > kMaxMhu) fail(ErrorKind::Domain, "raw intensity exceeds 32767 MHU");
}

void IntensityWindow::validate() const {
  if (lower >= upper) fail(ErrorKind::Config, "intensity window requires lower < upper");
  if (upper > kMaxMhu) fail(ErrorKind::Config, "intensity window exceeds 32767 MHU");
}

void Box::include(std::int64_t x, std::int64_t y, std::int64_t z) {
  if (empty()) {
    lo = {x, y, z};
    hi = {x + 1, y + 1, z + 1};
    return;
  }
  lo = {std::min(lo[0], x), std::min(lo[1], y), std::min(lo[2], z)};
  hi = {std::max(hi[0], x + 1), std::max(hi[1], y + 1), std::max(hi[2], z + 1)};
}

Box Box::expanded(std::int64_t margin, const Dims& dims) const {
  const std::array<std::int64_t, 3> n{dims.nx, dims.ny, dims.nz};
  Box b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = std::max<std::int64_t>(0, lo[a] - margin);
    b.hi[a] = std::min<std::int64_t>(n[a], hi[a] + margin);
  }
  return b;
}

Box Box::merged(const Box& other) const {
  if (empty()) return other;
  if (other.empty()) return *this;
  Box b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = std::min(lo[a], other.lo[a]);
    b.hi[a] = std::max(hi[a], other.hi[a]);
  }
  return b;
}

std::uint32_t max_label(const LabelVolume& labels) {
  std::uint32_t m = 0;
  for (std::uint32_t v : labels.voxels()) m = std::max(m, v);
  return m;
}

bool is_binary(const LabelVolume& labels) {
  return std::all_of(labels.voxels().begin(), labels.voxels().end(), [](std::uint32_t v) { return v <= 1; });
}

LabelVolume canonicalize(const LabelVolume& labels) {
  const std::uint32_t n = max_label(labels);
  std::vector<std::uint32_t> remap(static_cast<std::size_t>(n) + 1, 0);
  std::uint32_t next = 0;
  LabelVolume out(labels.dims(), labels.spacing());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint32_t v = labels[i];
    if (v == 0) continue;
    if (remap[v] == 0) remap[v] = ++next;
    out[i] = remap[v];
  }
  return out;
}

std::vector<std::size_t> label_counts(const LabelVolume& labels) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_label(labels)) + 1, 0);
  for (std::uint32_t v : labels.voxels()) ++counts[v];
  return counts;
}

std::vector<Box> label_boxes(const LabelVolume& labels) {
  std::vector<Box> boxes(static_cast<std::size_t>(max_label(labels)) + 1);
  const Dims& d = labels.dims();
  std::size_t i = 0;
  for (std::uint32_t z = 0; z < d.nz; ++z)
    for (std::uint32_t y = 0; y < d.ny; ++y)
      for (std::uint32_t x = 0; x < d.nx; ++x, ++i)
        if (const std::uint32_t v = labels[i]) boxes[v].include(x, y, z);
  return boxes;
}

LabelVolume threshold_to_binary(const RawVolume& raw, const IntensityWindow& window) {
  window.validate();
  LabelVolume out(raw.dims(), raw.spacing());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = window.contains(raw[i]) ? 1u : 0u;
  return out;
}

LabelVolume label_subtract(const LabelVolume& a, const LabelVolume& b) {
  require_same_frame(a, b, "label_subtract");
  LabelVolume out(a.dims(), a.spacing());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] > 0 && b[i] == 0) ? 1u : 0u;
  return out;
}

LabelVolume label_add(const LabelVolume& base, const LabelVolume& residual) {
  require_same_frame(base, residual, "label_add");
  const std::uint32_t n_base = max_label(base);
  LabelVolume out(base.dims(), base.spacing());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = residual[i] == 0 ? base[i] : n_base + residual[i];
  return out;
}

double mass_from_density(double density_mhu, std::size_t voxel_count, double voxel_volume_mm3) {
  const double volume_cm3 = static_cast<double>(voxel_count) * voxel_volume_mm3 * 1e-3;
  return volume_cm3 * density_mhu / static_cast<double>(kWaterMhu);
}

double object_thickness_mm(const LabelVolume& labels, std::uint32_t label, const Box& box) {
  // One voxel of background padding on each side so the box edge counts as outside.
  Box padded;
  for (int a = 0; a < 3; ++a) {
    padded.lo[a] = box.lo[a] - 1;
    padded.hi[a] = box.hi[a] + 1;
  }
  const auto e = padded.extent();
  const Dims local{static_cast<std::uint32_t>(e[0]), static_cast<std::uint32_t>(e[1]),
                   static_cast<std::uint32_t>(e[2])};
  std::vector<std::uint8_t> background(local.count(), 1);
  std::size_t i = 0;
  for (std::int64_t z = padded.lo[2]; z < padded.hi[2]; ++z)
    for (std::int64_t y = padded.lo[1]; y < padded.hi[1]; ++y)
      for (std::int64_t x = padded.lo[0]; x < padded.hi[0]; ++x, ++i)
        if (labels.dims().contains(x, y, z) &&
            labels.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(z)) == label)
          background[i] = 0;
  const auto& s = labels.spacing();
  const auto d2 = squared_edt(background, local, {s[0], s[1], s[2]});
  double best = 0.0;
  for (std::size_t j = 0; j < d2.size(); ++j)
    if (!background[j]) best = std::max(best, d2[j]);
  const double min_spacing = std::min({s[0], s[1], s[2]});
  return 2.0 * std::sqrt(best) - min_spacing;
}

namespace {

struct Accum {
  std::size_t count = 0;
  std::uint64_t sum = 0;
  Box box;
};

ObjectStats finish(const LabelVolume& labels, std::uint32_t label, const Accum& acc) {
  ObjectStats st;
  st.label = label;
  st.voxel_count = acc.count;
  st.volume_mm3 = static_cast<double>(acc.count) * labels.voxel_volume_mm3();
  st.density_mhu = static_cast<double>(acc.sum) / static_cast<double>(acc.count);
  st.mass_g = mass_from_density(st.density_mhu, acc.count, labels.voxel_volume_mm3());
  st.thickness_mm = object_thickness_mm(labels, label, acc.box);
  return st;
}

}  // namespace

ObjectStats object_stats(const RawVolume& raw, const LabelVolume& labels, std::uint32_t label) {
  require_same_frame(raw, labels, "object_stats");
  Accum acc;
  const Dims& d = labels.dims();
  std::size_t i = 0;
  for (std::uint32_t z = 0; z < d.nz; ++z)
    for (std::uint32_t y = 0; y < d.ny; ++y)
      for (std::uint32_t x = 0; x < d.nx; ++x, ++i)
        if (label != 0 && labels[i] == label) {
          ++acc.count;
          acc.sum += raw[i];
          acc.box.include(x, y, z);
        }
  if (acc.count == 0) fail(ErrorKind::NotFound, "object_stats: label " + std::to_string(label) + " not present");
  return finish(labels, label, acc);
}

std::vector<ObjectStats> all_object_stats(const RawVolume& raw, const LabelVolume& labels) {
  require_same_frame(raw, labels, "all_object_stats");
  std::vector<Accum> acc(static_cast<std::size_t>(max_label(labels)) + 1);
  const Dims& d = labels.dims();
  std::size_t i = 0;
  for (std::uint32_t z = 0; z < d.nz; ++z)
    for (std::uint32_t y = 0; y < d.ny; ++y)
      for (std::uint32_t x = 0; x < d.nx; ++x, ++i)
        if (const std::uint32_t v = labels[i]) {
          ++acc[v].count;
          acc[v].sum += raw[i];
          acc[v].box.include(x, y, z);
        }
  std::vector<ObjectStats> out;
  for (std::uint32_t l = 1; l < acc.size(); ++l)
    if (acc[l].count > 0) out.push_back(finish(labels, l, acc[l]));
  return out;
}

}  // namespace aatr
