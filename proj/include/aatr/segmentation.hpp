#pragma once

#include <cstdint>
#include <vector>

#include "aatr/morphology.hpp"
#include "aatr/volume.hpp"

namespace aatr::seg {

/// Histogram peak search. Only `window_halfwidth_bins` corresponds to the
/// sliding window of the method; the other knobs are artifact defaults.
struct PeakParams {
  int bin_width_mhu = 10;
  int window_halfwidth_bins = 3;
  int smoothing_radius_bins = 2;
  double min_peak_mass_fraction = 0.05;

  void validate() const;
};

struct SegmentationConfig {
  IntensityWindow window{800, 2200};
  /// Opening scales with strictly increasing k; the first scale also serves
  /// for residual re-inspection.
  std::vector<morph::OpeningParams> scales{{2, morph::kDeskScaleMinVoxels},
                                           {3, morph::kDeskScaleMinVoxels},
                                           {8, morph::kDeskScaleMinVoxels}};
  PeakParams peak;
  /// Run the intensity split after the shape split.
  bool intensity_split = true;

  void validate() const;
  /// Fragments smaller than this are merged into a neighbouring fragment.
  std::size_t min_fragment_voxels() const { return scales.front().min_voxels; }
};

/// Smoothed intensity histogram of one object. Bin i covers
/// [lo_mhu + i*bin_width, lo_mhu + (i+1)*bin_width). The range is padded by the
/// smoothing radius so smoothing conserves the total count.
struct Histogram {
  int lo_mhu = 0;
  int bin_width_mhu = 10;
  std::vector<double> counts;

  double total() const;
  int bin_of(std::uint16_t v) const { return (static_cast<int>(v) - lo_mhu) / bin_width_mhu; }
};

/// Multi-scale shape-based split:
///   L_1 = opening(ccl(threshold(raw)), k_1)
///   for each further scale: L_i = opening(L'_{i-1}, k_i); residual R = L'_{i-1} - L_i;
///   R is re-inspected with opening at k_1 and appended (label_add) to give L'_i.
/// Residual fragments below min_voxels and voxels dropped during
/// re-inspection are merged into the nearest label, so the output foreground
/// equals the thresholded foreground.
LabelVolume shape_split(const RawVolume& raw, const SegmentationConfig& cfg, unsigned threads = 1);

/// Single-scale baseline: ccl of the thresholded volume, then one opening block.
LabelVolume single_scale_opening(const RawVolume& raw, const IntensityWindow& window,
                                 const morph::OpeningParams& params, unsigned threads = 1);

Histogram object_histogram(const RawVolume& raw, const LabelVolume& labels, std::uint32_t label,
                           const PeakParams& p);

/// Bin i is a peak iff counts[i] > 0, it is strictly greater than every bin to
/// its left within [i-w, i), no smaller than any bin in (i, i+w] (plateaus
/// resolve to their leftmost bin), and its window mass is at least
/// min_peak_mass_fraction of the total. Ascending.
std::vector<int> detect_peaks(const Histogram& h, const PeakParams& p);

/// Valley between two peaks: argmin of counts strictly between them, lowest index on ties.
int valley_between(const Histogram& h, int left_peak, int right_peak);

/// Split one object by intensity intervals bounded by the valleys between
/// consecutive peaks. Each interval's voxels are split into 26-connected
/// fragments; fragments below `min_fragment_voxels` join the nearest
/// surviving fragment. Fewer than two peaks, or fewer than two surviving
/// fragments, leave the object unchanged. Returns canonical labels.
LabelVolume split_by_valleys(const RawVolume& raw, const LabelVolume& labels, std::uint32_t label,
                             const std::vector<int>& peaks, const Histogram& h,
                             std::size_t min_fragment_voxels);

/// shape_split followed by the intensity split of every object.
LabelVolume segment(const RawVolume& raw, const SegmentationConfig& cfg, unsigned threads = 1);

}  // namespace aatr::seg
