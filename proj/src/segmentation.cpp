#include "aatr/segmentation.hpp"

#include <algorithm>
#include <numeric>

#include "aatr/parallel.hpp"

namespace aatr::seg {
namespace {

using morph::OpeningParams;

Dims dims_of(const Box& b) {
  const auto e = b.extent();
  return {static_cast<std::uint32_t>(e[0]), static_cast<std::uint32_t>(e[1]), static_cast<std::uint32_t>(e[2])};
}

template <class Fn>
void for_box(const Box& box, Fn&& fn) {
  std::size_t i = 0;
  for (std::int64_t z = box.lo[2]; z < box.hi[2]; ++z)
    for (std::int64_t y = box.lo[1]; y < box.hi[1]; ++y)
      for (std::int64_t x = box.lo[0]; x < box.hi[0]; ++x, ++i)
        fn(i, static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(z));
}

Histogram histogram_in_box(const RawVolume& raw, const LabelVolume& labels, std::uint32_t label, const Box& box,
                           const PeakParams& p) {
  std::uint16_t lo = kMaxMhu, hi = 0;
  std::size_t count = 0;
  for_box(box, [&](std::size_t, std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    const std::size_t g = labels.index(x, y, z);
    if (labels[g] != label) return;
    lo = std::min(lo, raw[g]);
    hi = std::max(hi, raw[g]);
    ++count;
  });
  if (count == 0) fail(ErrorKind::NotFound, "object_histogram: label " + std::to_string(label) + " not present");

  const int bw = p.bin_width_mhu;
  const int r = p.smoothing_radius_bins;
  const int n_raw = (hi - lo) / bw + 1;
  std::vector<double> raw_counts(static_cast<std::size_t>(n_raw + 2 * r), 0.0);
  for_box(box, [&](std::size_t, std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    const std::size_t g = labels.index(x, y, z);
    if (labels[g] == label) raw_counts[static_cast<std::size_t>((raw[g] - lo) / bw + r)] += 1.0;
  });

  Histogram h;
  h.lo_mhu = static_cast<int>(lo) - r * bw;
  h.bin_width_mhu = bw;
  if (r == 0) {
    h.counts = std::move(raw_counts);
    return h;
  }
  h.counts.assign(raw_counts.size(), 0.0);
  const double norm = 1.0 / static_cast<double>(2 * r + 1);
  const int n = static_cast<int>(raw_counts.size());
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = std::max(0, j - r); i <= std::min(n - 1, j + r); ++i) s += raw_counts[static_cast<std::size_t>(i)];
    h.counts[static_cast<std::size_t>(j)] = s * norm;
  }
  return h;
}

// Local parts for one object's intensity split, or an empty volume when the
// object stays whole.
LabelVolume split_local(const RawVolume& raw, const LabelVolume& labels, std::uint32_t label, const Box& box,
                        const std::vector<int>& peaks, const Histogram& h, std::size_t min_fragment_voxels) {
  if (peaks.size() < 2) return {};
  std::vector<int> valleys;
  for (std::size_t i = 0; i + 1 < peaks.size(); ++i) valleys.push_back(valley_between(h, peaks[i], peaks[i + 1]));

  const Dims local = dims_of(box);
  std::vector<int> interval(local.count(), -1);
  for_box(box, [&](std::size_t i, std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    const std::size_t g = labels.index(x, y, z);
    if (labels[g] != label) return;
    const int bin = h.bin_of(raw[g]);
    interval[i] = static_cast<int>(std::upper_bound(valleys.begin(), valleys.end(), bin - 1) - valleys.begin());
  });

  // Connected fragments per interval, numbered consecutively across intervals.
  LabelVolume fragments(local, labels.spacing());
  std::uint32_t next = 0;
  for (std::size_t j = 0; j <= valleys.size(); ++j) {
    LabelVolume part(local, labels.spacing());
    bool any = false;
    for (std::size_t i = 0; i < part.size(); ++i)
      if (interval[i] == static_cast<int>(j)) part[i] = 1, any = true;
    if (!any) continue;
    const LabelVolume comps = morph::ccl(part);
    const std::uint32_t n = max_label(comps);
    for (std::size_t i = 0; i < part.size(); ++i)
      if (comps[i]) fragments[i] = next + comps[i];
    next += n;
  }

  const auto counts = label_counts(fragments);
  LabelVolume kept(local, labels.spacing());
  LabelVolume small(local, labels.spacing());
  std::size_t n_kept = 0;
  for (std::uint32_t f = 1; f < counts.size(); ++f) n_kept += counts[f] >= min_fragment_voxels;
  if (n_kept < 2) return {};
  for (std::size_t i = 0; i < fragments.size(); ++i) {
    if (!fragments[i]) continue;
    if (counts[fragments[i]] >= min_fragment_voxels)
      kept[i] = fragments[i];
    else
      small[i] = 1;
  }
  return canonicalize(morph::assign_nearest(kept, small));
}

std::vector<int> peaks_of(const Histogram& h, const PeakParams& p) { return detect_peaks(h, p); }

void write_parts(LabelVolume& out, const Box& box, const LabelVolume& parts, std::uint32_t base) {
  for_box(box, [&](std::size_t i, std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    if (parts[i]) out.at(x, y, z) = base + parts[i];
  });
}

}  // namespace

void PeakParams::validate() const {
  if (bin_width_mhu <= 0) fail(ErrorKind::Config, "peak.bin_width_mhu must be positive");
  if (window_halfwidth_bins <= 0) fail(ErrorKind::Config, "peak.window_halfwidth_bins must be positive");
  if (smoothing_radius_bins < 0) fail(ErrorKind::Config, "peak.smoothing_radius_bins must be >= 0");
  if (!(min_peak_mass_fraction >= 0.0 && min_peak_mass_fraction < 1.0))
    fail(ErrorKind::Config, "peak.min_peak_mass_fraction must lie in [0, 1)");
}

void SegmentationConfig::validate() const {
  window.validate();
  if (scales.empty()) fail(ErrorKind::Config, "segmentation needs at least one opening scale");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i].k < 0) fail(ErrorKind::Config, "opening scale k must be >= 0");
    if (i > 0 && scales[i].k <= scales[i - 1].k) fail(ErrorKind::Config, "opening scales must have strictly increasing k");
  }
  peak.validate();
}

double Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

LabelVolume single_scale_opening(const RawVolume& raw, const IntensityWindow& window, const OpeningParams& params,
                                 unsigned threads) {
  return morph::opening_block(morph::ccl(threshold_to_binary(raw, window)), params, threads);
}

LabelVolume shape_split(const RawVolume& raw, const SegmentationConfig& cfg, unsigned threads) {
  cfg.validate();
  LabelVolume current = morph::ccl(threshold_to_binary(raw, cfg.window));
  if (max_label(current) == 0) return current;
  const OpeningParams& first = cfg.scales.front();

  for (const OpeningParams& scale : cfg.scales) {
    LabelVolume opened = morph::opening_block(current, scale, threads);
    const LabelVolume residual = label_subtract(current, opened);
    if (max_label(residual) == 0) {
      current = std::move(opened);
      continue;
    }
    // Re-inspect what this scale removed with the smallest kernel.
    LabelVolume recovered = morph::opening_block(morph::ccl(residual), first, threads);
    recovered = morph::prune_small(recovered, first.min_voxels);
    LabelVolume merged = label_add(opened, recovered);

    LabelVolume leftover(merged.dims(), merged.spacing());
    for (std::size_t i = 0; i < merged.size(); ++i) leftover[i] = (current[i] && !merged[i]) ? 1u : 0u;
    current = canonicalize(morph::assign_nearest(merged, leftover));
  }
  return current;
}

Histogram object_histogram(const RawVolume& raw, const LabelVolume& labels, std::uint32_t label, const PeakParams& p) {
  require_same_frame(raw, labels, "object_histogram");
  p.validate();
  const auto boxes = label_boxes(labels);
  if (label == 0 || label >= boxes.size() || boxes[label].empty())
    fail(ErrorKind::NotFound, "object_histogram: label " + std::to_string(label) + " not present");
  return histogram_in_box(raw, labels, label, boxes[label], p);
}

std::vector<int> detect_peaks(const Histogram& h, const PeakParams& p) {
  const int n = static_cast<int>(h.counts.size());
  const int w = p.window_halfwidth_bins;
  const double total = h.total();
  std::vector<int> peaks;
  for (int i = 0; i < n; ++i) {
    const double c = h.counts[static_cast<std::size_t>(i)];
    if (c <= 0.0) continue;
    bool peak = true;
    double mass = c;
    for (int j = std::max(0, i - w); j < i && peak; ++j) {
      peak = h.counts[static_cast<std::size_t>(j)] < c;
      mass += h.counts[static_cast<std::size_t>(j)];
    }
    for (int j = i + 1; j <= std::min(n - 1, i + w) && peak; ++j) {
      peak = h.counts[static_cast<std::size_t>(j)] <= c;
      mass += h.counts[static_cast<std::size_t>(j)];
    }
    if (peak && mass >= p.min_peak_mass_fraction * total) peaks.push_back(i);
  }
  return peaks;
}

int valley_between(const Histogram& h, int left_peak, int right_peak) {
  if (right_peak - left_peak < 2) return left_peak;
  int best = left_peak + 1;
  for (int i = left_peak + 2; i < right_peak; ++i)
    if (h.counts[static_cast<std::size_t>(i)] < h.counts[static_cast<std::size_t>(best)]) best = i;
  return best;
}

LabelVolume split_by_valleys(const RawVolume& raw, const LabelVolume& labels, std::uint32_t label,
                             const std::vector<int>& peaks, const Histogram& h, std::size_t min_fragment_voxels) {
  require_same_frame(raw, labels, "split_by_valleys");
  const auto boxes = label_boxes(labels);
  if (label == 0 || label >= boxes.size() || boxes[label].empty())
    fail(ErrorKind::NotFound, "split_by_valleys: label " + std::to_string(label) + " not present");
  const Box& box = boxes[label];
  const LabelVolume parts = split_local(raw, labels, label, box, peaks, h, min_fragment_voxels);
  if (parts.size() == 0) return canonicalize(labels);
  LabelVolume out = labels;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] == label) out[i] = 0;
  write_parts(out, box, parts, max_label(labels));
  return canonicalize(out);
}

LabelVolume segment(const RawVolume& raw, const SegmentationConfig& cfg, unsigned threads) {
  LabelVolume shapes = shape_split(raw, cfg, threads);
  if (!cfg.intensity_split) return shapes;
  const auto boxes = label_boxes(shapes);
  std::vector<LabelVolume> parts(boxes.size());
  parallel_for(boxes.size(), threads, [&](std::size_t l) {
    if (l == 0 || boxes[l].empty()) return;
    const auto label = static_cast<std::uint32_t>(l);
    const Histogram h = histogram_in_box(raw, shapes, label, boxes[l], cfg.peak);
    parts[l] = split_local(raw, shapes, label, boxes[l], peaks_of(h, cfg.peak), h, cfg.min_fragment_voxels());
  });
  std::uint32_t next = max_label(shapes);
  for (std::size_t l = 1; l < boxes.size(); ++l) {
    if (parts[l].size() == 0) continue;
    for_box(boxes[l], [&](std::size_t i, std::uint32_t x, std::uint32_t y, std::uint32_t z) {
      if (parts[l][i]) shapes.at(x, y, z) = next + parts[l][i];
    });
    next += max_label(parts[l]);
  }
  return canonicalize(shapes);
}

}  // namespace aatr::seg
