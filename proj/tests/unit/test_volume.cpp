#include <doctest.h>

#include <cmath>

#include "aatr/volume.hpp"
#include "oracles.hpp"

using namespace aatr;

TEST_CASE("grid rejects bad shapes and spacing") {
  CHECK_THROWS_AS(RawVolume({2, 2, 2}, {1, 1, 1}, std::vector<std::uint16_t>(7)), Error);
  CHECK_THROWS_AS(RawVolume({2, 2, 2}, {1, 0, 1}), Error);
  CHECK_THROWS_AS(RawVolume({2, 2, 2}, {1, -1, 1}), Error);
  RawVolume ok({2, 3, 4}, {1, 1, 1});
  CHECK(ok.size() == 24);
  CHECK(ok.index(1, 2, 3) == 1 + 2 * 2 + 3 * 6);
}

TEST_CASE("intensity window validation") {
  CHECK_NOTHROW(IntensityWindow{800, 2200}.validate());
  CHECK_THROWS_AS((IntensityWindow{2200, 800}.validate()), Error);
  try {
    IntensityWindow{2200, 800}.validate();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("threshold keeps the inclusive window") {
  RawVolume raw({4, 1, 1}, {1, 1, 1}, std::vector<std::uint16_t>{799, 800, 2200, 2201});
  auto b = threshold_to_binary(raw, {800, 2200});
  CHECK(b[0] == 0);
  CHECK(b[1] == 1);
  CHECK(b[2] == 1);
  CHECK(b[3] == 0);
}

TEST_CASE("validate_raw rejects out-of-range intensities") {
  RawVolume raw({2, 1, 1}, {1, 1, 1}, std::vector<std::uint16_t>{0, 32768});
  CHECK_THROWS_AS(validate_raw(raw), Error);
  raw[1] = 32767;
  CHECK_NOTHROW(validate_raw(raw));
}

TEST_CASE("canonical relabeling follows first raster voxel") {
  LabelVolume l({4, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{0, 7, 3, 7});
  auto c = canonicalize(l);
  CHECK(c[1] == 1);
  CHECK(c[2] == 2);
  CHECK(c[3] == 1);
  CHECK(max_label(c) == 2);
}

TEST_CASE("label subtract and add") {
  LabelVolume a({4, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{1, 1, 2, 0});
  LabelVolume b({4, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{1, 0, 2, 0});
  auto r = label_subtract(a, b);
  CHECK(r == LabelVolume({4, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{0, 1, 0, 0}));
  auto s = label_add(b, r);
  CHECK(s == LabelVolume({4, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{1, 3, 2, 0}));
  LabelVolume other({3, 1, 1}, {1, 1, 1});
  CHECK_THROWS_AS(label_subtract(a, other), Error);
}

TEST_CASE("water cube mass") {
  // 10 mm water cube at 1 mm voxels weighs 1 g.
  RawVolume raw({12, 12, 12}, {1, 1, 1}, 0);
  LabelVolume lab({12, 12, 12}, {1, 1, 1}, 0);
  for (std::uint32_t z = 1; z < 11; ++z)
    for (std::uint32_t y = 1; y < 11; ++y)
      for (std::uint32_t x = 1; x < 11; ++x) raw.at(x, y, z) = 1024, lab.at(x, y, z) = 1;
  auto s = object_stats(raw, lab, 1);
  CHECK(s.voxel_count == 1000);
  CHECK(s.mass_g == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.density_mhu == doctest::Approx(1024.0));
  CHECK(s.volume_mm3 == doctest::Approx(1000.0));
  CHECK_THROWS_AS(object_stats(raw, lab, 2), Error);
}

TEST_CASE("mass of a scanner-spacing voxel block") {
  const float sxy = 475.0f / 512.0f;
  CHECK(static_cast<double>(sxy) * sxy * 1.5 == doctest::Approx(1.291).epsilon(1e-3));
  CHECK(mass_from_density(2048.0, 1000, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("thickness of a slab and a single voxel") {
  LabelVolume lab = oracle::box_volume({9, 9, 9}, {0, 0, 3}, {9, 9, 6});
  auto boxes = label_boxes(lab);
  CHECK(object_thickness_mm(lab, 1, boxes[1]) == doctest::Approx(3.0));
  LabelVolume one({3, 3, 3}, {1, 1, 1});
  one.at(1, 1, 1) = 1;
  CHECK(object_thickness_mm(one, 1, label_boxes(one)[1]) == doctest::Approx(1.0));
}

TEST_CASE("label boxes bound every voxel") {
  Rng rng(5);
  auto v = oracle::ccl(oracle::random_blobs(rng, 16));
  auto boxes = label_boxes(v);
  auto counts = label_counts(v);
  for (std::uint32_t z = 0; z < v.dims().nz; ++z)
    for (std::uint32_t y = 0; y < v.dims().ny; ++y)
      for (std::uint32_t x = 0; x < v.dims().nx; ++x)
        if (auto l = v.at(x, y, z)) {
          const auto& b = boxes[l];
          CHECK((x >= b.lo[0] && x < b.hi[0] && y >= b.lo[1] && y < b.hi[1] && z >= b.lo[2] && z < b.hi[2]));
        }
  std::size_t fg = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) fg += counts[i];
  CHECK(fg == oracle::foreground(v));
}
