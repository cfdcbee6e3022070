#include "aatr/morphology.hpp"

#include <cmath>
#include <string>

#include "aatr/distance_transform.hpp"
#include "aatr/parallel.hpp"

namespace aatr::morph {
namespace {

void require_binary(const LabelVolume& v, const char* what) {
  if (!is_binary(v)) fail(ErrorKind::Contract, std::string(what) + ": input must be binary (labels in {0,1})");
}

Box intersect(const Box& a, const Box& b) {
  Box out;
  for (int i = 0; i < 3; ++i) {
    out.lo[i] = std::max(a.lo[i], b.lo[i]);
    out.hi[i] = std::min(a.hi[i], b.hi[i]);
  }
  return out;
}

Dims dims_of(const Box& b) {
  const auto e = b.extent();
  return {static_cast<std::uint32_t>(e[0]), static_cast<std::uint32_t>(e[1]), static_cast<std::uint32_t>(e[2])};
}

// Squared distance to the nearest voxel of `label` for every voxel of `region`.
std::vector<double> label_distance(const LabelVolume& labels, std::uint32_t label, const Box& region) {
  const Dims local = dims_of(region);
  std::vector<std::uint8_t> feature(local.count(), 0);
  std::size_t i = 0;
  for (std::int64_t z = region.lo[2]; z < region.hi[2]; ++z)
    for (std::int64_t y = region.lo[1]; y < region.hi[1]; ++y) {
      std::size_t g = labels.index(static_cast<std::uint32_t>(region.lo[0]), static_cast<std::uint32_t>(y),
                                   static_cast<std::uint32_t>(z));
      for (std::int64_t x = region.lo[0]; x < region.hi[0]; ++x, ++i, ++g) feature[i] = labels[g] == label;
    }
  return squared_edt(feature, local);
}

// Nearest-label assignment restricted to distance <= radius. `best` and
// `winner` hold the running optimum per target voxel (global indexing).
void assign_within(const LabelVolume& labels, const std::vector<Box>& boxes, const Box& target_box,
                   std::int64_t radius, std::vector<double>& best, std::vector<std::uint32_t>& winner,
                   const std::vector<std::uint8_t>& is_target) {
  const Dims& dims = labels.dims();
  const Box reach = target_box.expanded(radius, dims);
  for (std::uint32_t l = 1; l < boxes.size(); ++l) {
    if (boxes[l].empty()) continue;
    const Box region = intersect(boxes[l].expanded(radius, dims), reach);
    if (region.empty()) continue;
    const Box hit = intersect(region, target_box);
    if (hit.empty()) continue;
    const auto d2 = label_distance(labels, l, region);
    const Dims local = dims_of(region);
    for (std::int64_t z = hit.lo[2]; z < hit.hi[2]; ++z)
      for (std::int64_t y = hit.lo[1]; y < hit.hi[1]; ++y)
        for (std::int64_t x = hit.lo[0]; x < hit.hi[0]; ++x) {
          const std::size_t g = labels.index(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                                             static_cast<std::uint32_t>(z));
          if (!is_target[g]) continue;
          const std::size_t li = static_cast<std::size_t>(x - region.lo[0]) +
                                 local.nx * (static_cast<std::size_t>(y - region.lo[1]) +
                                             local.ny * static_cast<std::size_t>(z - region.lo[2]));
          // Labels are visited in ascending order, so strict < keeps the smaller label on ties.
          if (d2[li] < best[g]) {
            best[g] = d2[li];
            winner[g] = l;
          }
        }
  }
}

LabelVolume crop_object(const LabelVolume& labels, std::uint32_t label, const Box& box) {
  LabelVolume local(dims_of(box), labels.spacing());
  std::size_t i = 0;
  for (std::int64_t z = box.lo[2]; z < box.hi[2]; ++z)
    for (std::int64_t y = box.lo[1]; y < box.hi[1]; ++y)
      for (std::int64_t x = box.lo[0]; x < box.hi[0]; ++x, ++i)
        local[i] = labels.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(z)) == label;
  return local;
}

}  // namespace

StructuringElement StructuringElement::sphere(int radius) {
  if (radius < 0) fail(ErrorKind::Domain, "structuring element radius must be >= 0");
  StructuringElement se;
  se.radius = radius;
  const int r2 = radius * radius;
  for (int z = -radius; z <= radius; ++z)
    for (int y = -radius; y <= radius; ++y)
      for (int x = -radius; x <= radius; ++x)
        if (x * x + y * y + z * z <= r2) se.offsets.push_back({x, y, z});
  return se;
}

LabelVolume erode(const LabelVolume& binary, const StructuringElement& se) {
  require_binary(binary, "erode");
  const Dims& d = binary.dims();
  const Dims padded{d.nx + 2, d.ny + 2, d.nz + 2};
  std::vector<std::uint8_t> background(padded.count(), 1);
  for (std::uint32_t z = 0; z < d.nz; ++z)
    for (std::uint32_t y = 0; y < d.ny; ++y)
      for (std::uint32_t x = 0; x < d.nx; ++x)
        if (binary.at(x, y, z))
          background[(x + 1) + padded.nx * ((y + 1) + static_cast<std::size_t>(padded.ny) * (z + 1))] = 0;
  const auto d2 = squared_edt(background, padded);
  const double r2 = static_cast<double>(se.radius) * se.radius;
  LabelVolume out(d, binary.spacing());
  for (std::uint32_t z = 0; z < d.nz; ++z)
    for (std::uint32_t y = 0; y < d.ny; ++y)
      for (std::uint32_t x = 0; x < d.nx; ++x) {
        const std::size_t p = (x + 1) + padded.nx * ((y + 1) + static_cast<std::size_t>(padded.ny) * (z + 1));
        if (!background[p] && d2[p] > r2) out.at(x, y, z) = 1;
      }
  return out;
}

LabelVolume assign_nearest(const LabelVolume& labels, const LabelVolume& targets, double max_dist2) {
  require_same_frame(labels, targets, "assign_nearest");
  LabelVolume out = labels;
  std::vector<std::uint8_t> is_target(labels.size(), 0);
  Box target_box;
  const Dims& d = labels.dims();
  std::size_t n_targets = 0;
  {
    std::size_t i = 0;
    for (std::uint32_t z = 0; z < d.nz; ++z)
      for (std::uint32_t y = 0; y < d.ny; ++y)
        for (std::uint32_t x = 0; x < d.nx; ++x, ++i)
          if (targets[i]) {
            if (labels[i]) fail(ErrorKind::Contract, "assign_nearest: target voxel already labelled");
            is_target[i] = 1;
            target_box.include(x, y, z);
            ++n_targets;
          }
  }
  if (n_targets == 0) return out;
  const auto boxes = label_boxes(labels);
  const bool any_label = std::any_of(boxes.begin() + (boxes.empty() ? 0 : 1), boxes.end(),
                                     [](const Box& b) { return !b.empty(); });
  if (!any_label) return out;

  std::vector<double> best(labels.size(), kNoFeature);
  std::vector<std::uint32_t> winner(labels.size(), 0);
  const double diag = std::sqrt(static_cast<double>(d.nx) * d.nx + static_cast<double>(d.ny) * d.ny +
                                static_cast<double>(d.nz) * d.nz);
  const double limit2 = std::min(max_dist2, diag * diag + 1.0);
  std::int64_t radius = std::isfinite(max_dist2) ? static_cast<std::int64_t>(std::floor(std::sqrt(limit2))) : 4;

  // Grow the search radius until every target is resolved. An assignment at
  // distance <= radius is final: any competitor outside the searched region is
  // farther than radius.
  for (;;) {
    const double r2 = std::min(static_cast<double>(radius) * radius, limit2);
    assign_within(labels, boxes, target_box, radius, best, winner, is_target);
    Box pending;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!is_target[i]) continue;
      if (best[i] <= r2) {
        out[i] = winner[i];
        is_target[i] = 0;
      } else {
        const std::size_t x = i % d.nx, y = (i / d.nx) % d.ny, z = i / (static_cast<std::size_t>(d.nx) * d.ny);
        pending.include(static_cast<std::int64_t>(x), static_cast<std::int64_t>(y), static_cast<std::int64_t>(z));
      }
    }
    if (pending.empty() || r2 >= limit2) break;
    target_box = pending;
    std::fill(best.begin(), best.end(), kNoFeature);
    radius *= 2;
  }
  return out;
}

LabelVolume dilate_constrained(const LabelVolume& labels, const StructuringElement& se, const LabelVolume& mask) {
  require_same_frame(labels, mask, "dilate_constrained");
  require_binary(mask, "dilate_constrained (mask)");
  LabelVolume targets(labels.dims(), labels.spacing());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] && !mask[i]) fail(ErrorKind::Contract, "dilate_constrained: labelled voxel outside mask");
    targets[i] = (mask[i] && !labels[i]) ? 1u : 0u;
  }
  if (se.radius == 0) return labels;
  return assign_nearest(labels, targets, static_cast<double>(se.radius) * se.radius);
}

LabelVolume ccl(const LabelVolume& binary) {
  require_binary(binary, "ccl");
  const Dims& d = binary.dims();
  LabelVolume out(d, binary.spacing());
  std::vector<std::size_t> stack;
  std::uint32_t next = 0;
  const auto nx = static_cast<std::int64_t>(d.nx), ny = static_cast<std::int64_t>(d.ny),
             nz = static_cast<std::int64_t>(d.nz);
  for (std::size_t seed = 0; seed < binary.size(); ++seed) {
    if (!binary[seed] || out[seed]) continue;
    out[seed] = ++next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const auto x = static_cast<std::int64_t>(p % d.nx);
      const auto y = static_cast<std::int64_t>((p / d.nx) % d.ny);
      const auto z = static_cast<std::int64_t>(p / (static_cast<std::size_t>(d.nx) * d.ny));
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        const std::int64_t zz = z + dz;
        if (zz < 0 || zz >= nz) continue;
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          const std::int64_t yy = y + dy;
          if (yy < 0 || yy >= ny) continue;
          for (std::int64_t dx = -1; dx <= 1; ++dx) {
            const std::int64_t xx = x + dx;
            if (xx < 0 || xx >= nx) continue;
            const auto q = static_cast<std::size_t>(xx + nx * (yy + ny * zz));
            if (binary[q] && !out[q]) {
              out[q] = next;
              stack.push_back(q);
            }
          }
        }
      }
    }
  }
  return out;
}

LabelVolume prune_small(const LabelVolume& labels, std::size_t min_voxels) {
  const auto counts = label_counts(labels);
  LabelVolume kept = labels;
  for (std::size_t i = 0; i < kept.size(); ++i)
    if (kept[i] && counts[kept[i]] < min_voxels) kept[i] = 0;
  return canonicalize(kept);
}

LabelVolume opening_block(const LabelVolume& labels, const OpeningParams& params, unsigned threads) {
  const auto se = StructuringElement::sphere(params.k);
  const auto boxes = label_boxes(labels);

  struct Result {
    Box box;                // crop region in the parent volume
    LabelVolume parts;      // split parts (local frame); empty when unchanged
  };
  std::vector<Result> results(boxes.size());
  parallel_for(boxes.size(), threads, [&](std::size_t l) {
    if (l == 0 || boxes[l].empty()) return;
    const Box box = boxes[l].expanded(1, labels.dims());
    const LabelVolume object = crop_object(labels, static_cast<std::uint32_t>(l), box);
    const LabelVolume parts = prune_small(ccl(erode(object, se)), params.min_voxels);
    if (max_label(parts) >= 2) results[l] = {box, dilate_constrained(parts, se, object)};
  });

  LabelVolume out(labels.dims(), labels.spacing());
  std::vector<std::uint32_t> keep_id(boxes.size(), 0);
  std::uint32_t next = 0;
  for (std::size_t l = 1; l < boxes.size(); ++l) {
    if (boxes[l].empty()) continue;
    if (results[l].parts.size() == 0) {
      keep_id[l] = ++next;
      continue;
    }
    const Box& box = results[l].box;
    const LabelVolume& parts = results[l].parts;
    const std::uint32_t base = next;
    next += max_label(parts);
    std::size_t i = 0;
    for (std::int64_t z = box.lo[2]; z < box.hi[2]; ++z)
      for (std::int64_t y = box.lo[1]; y < box.hi[1]; ++y)
        for (std::int64_t x = box.lo[0]; x < box.hi[0]; ++x, ++i)
          if (parts[i])
            out.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(z)) = base + parts[i];
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] && keep_id[labels[i]]) out[i] = keep_id[labels[i]];
  return canonicalize(out);
}

}  // namespace aatr::morph
