#include <doctest.h>

#include "aatr/segmentation.hpp"
#include "oracles.hpp"

using namespace aatr;
using namespace aatr::seg;

namespace {

RawVolume paint(const LabelVolume& mask, std::uint16_t value) {
  RawVolume r(mask.dims(), mask.spacing(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) r[i] = value;
  return r;
}

Histogram hist(std::vector<double> c) {
  Histogram h;
  h.lo_mhu = 0;
  h.bin_width_mhu = 10;
  h.counts = std::move(c);
  return h;
}

}  // namespace

TEST_CASE("peak detection on a two-mode histogram") {
  PeakParams p;
  p.window_halfwidth_bins = 2;
  p.min_peak_mass_fraction = 0.05;
  auto h = hist({0, 1, 5, 9, 5, 1, 0, 0, 2, 6, 8, 6, 2, 0});
  auto peaks = detect_peaks(h, p);
  CHECK(peaks == std::vector<int>{3, 10});
  CHECK(valley_between(h, 3, 10) == 6);
}

TEST_CASE("plateau resolves to its leftmost bin") {
  PeakParams p;
  p.window_halfwidth_bins = 2;
  p.min_peak_mass_fraction = 0.0;
  auto h = hist({0, 4, 7, 7, 7, 4, 0});
  CHECK(detect_peaks(h, p) == std::vector<int>{2});
}

TEST_CASE("small bumps do not count as peaks") {
  PeakParams p;
  p.window_halfwidth_bins = 2;
  p.min_peak_mass_fraction = 0.1;
  auto h = hist({0, 100, 300, 100, 0, 0, 0, 1, 2, 1, 0});
  CHECK(detect_peaks(h, p) == std::vector<int>{2});
}

TEST_CASE("histogram smoothing conserves mass") {
  RawVolume raw({10, 1, 1}, {1, 1, 1}, std::vector<std::uint16_t>{1000, 1000, 1010, 1200, 1500, 1500, 1500, 900, 0, 0});
  LabelVolume lab({10, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{1, 1, 1, 1, 1, 1, 1, 1, 0, 0});
  auto h = object_histogram(raw, lab, 1, PeakParams{});
  CHECK(h.total() == doctest::Approx(8.0));
  CHECK(h.bin_of(900) >= 0);
}

TEST_CASE("config validation") {
  SegmentationConfig c;
  CHECK_NOTHROW(c.validate());
  c.scales = {{3, 10}, {2, 10}};
  CHECK_THROWS_AS(c.validate(), Error);
  c.scales = {};
  CHECK_THROWS_AS(c.validate(), Error);
  SegmentationConfig d;
  d.window = {2000, 1000};
  CHECK_THROWS_AS(d.validate(), Error);
}

TEST_CASE("intensity split separates two touching blocks of different density") {
  LabelVolume a = oracle::box_volume({24, 12, 12}, {2, 2, 2}, {12, 10, 10});
  LabelVolume b = oracle::box_volume({24, 12, 12}, {12, 2, 2}, {22, 10, 10});
  RawVolume raw = paint(a, 1100);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i]) raw[i] = 1600;
  SegmentationConfig cfg;
  cfg.scales = {{2, 20}, {3, 20}};
  auto shapes = shape_split(raw, cfg);
  CHECK(max_label(shapes) == 1);
  auto out = segment(raw, cfg);
  CHECK(max_label(out) == 2);
  CHECK(out.at(3, 3, 3) != out.at(20, 3, 3));
  CHECK(oracle::foreground(out) == oracle::foreground(threshold_to_binary(raw, cfg.window)));
}

TEST_CASE("shape split separates a dumbbell and preserves foreground") {
  LabelVolume b({40, 16, 16}, {1, 1, 1});
  oracle::paint_box(b, {1, 1, 1}, {15, 15, 15}, 1);
  oracle::paint_box(b, {25, 1, 1}, {39, 15, 15}, 1);
  oracle::paint_box(b, {15, 6, 6}, {25, 10, 10}, 1);
  RawVolume raw = paint(b, 1300);
  SegmentationConfig cfg;
  cfg.scales = {{2, 500}, {3, 500}};
  auto l = shape_split(raw, cfg);
  CHECK(max_label(l) == 2);
  CHECK(oracle::foreground(l) == oracle::foreground(b));
  CHECK(shape_split(raw, cfg, 4) == l);
}

TEST_CASE("segmentation foreground equals the thresholded foreground on random blobs") {
  Rng rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    auto b = oracle::random_blobs(rng, 28);
    RawVolume raw(b.dims(), b.spacing(), 0);
    for (std::size_t i = 0; i < b.size(); ++i)
      if (b[i]) raw[i] = static_cast<std::uint16_t>(rng.uniform() < 0.5 ? 1100 + rng.uniform_int(0, 40)
                                                                       : 1700 + rng.uniform_int(0, 40));
    SegmentationConfig cfg;
    cfg.scales = {{1, 5}, {2, 5}, {3, 5}};
    auto l = segment(raw, cfg);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(static_cast<bool>(l[i]) == static_cast<bool>(b[i]));
    CHECK(l == canonicalize(l));
  }
}
