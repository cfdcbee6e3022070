#include <doctest.h>

#include "aatr/morphology.hpp"
#include "oracles.hpp"

using namespace aatr;
using namespace aatr::morph;

TEST_CASE("sphere kernel membership") {
  CHECK(StructuringElement::sphere(0).offsets.size() == 1);
  CHECK(StructuringElement::sphere(1).offsets.size() == 7);
  CHECK(StructuringElement::sphere(2).offsets.size() == oracle::sphere_offsets(2).size());
  CHECK_THROWS_AS(StructuringElement::sphere(-1), Error);
}

TEST_CASE("erode matches per-offset scan") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto b = oracle::random_blobs(rng, 20);
    const int k = static_cast<int>(rng.uniform_int(0, 4));
    CHECK(erode(b, StructuringElement::sphere(k)) == oracle::erode(b, k));
  }
}

TEST_CASE("erode rejects non-binary input") {
  LabelVolume l({2, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{1, 2});
  CHECK_THROWS_AS(erode(l, StructuringElement::sphere(1)), Error);
}

TEST_CASE("ccl matches union-find labelling") {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    auto b = oracle::random_blobs(rng, 24);
    CHECK(ccl(b) == oracle::ccl(b));
  }
}

TEST_CASE("ccl uses 26-connectivity") {
  LabelVolume b({3, 3, 3}, {1, 1, 1});
  b.at(0, 0, 0) = 1;
  b.at(1, 1, 1) = 1;
  b.at(2, 2, 0) = 1;
  auto l = ccl(b);
  CHECK(max_label(l) == 1);
}

TEST_CASE("dilate_constrained matches exhaustive nearest seed") {
  Rng rng(23);
  for (int trial = 0; trial < 15; ++trial) {
    auto mask = oracle::random_blobs(rng, 18);
    const int k = static_cast<int>(rng.uniform_int(1, 4));
    auto seeds = oracle::ccl(oracle::erode(mask, k));
    CHECK(dilate_constrained(seeds, StructuringElement::sphere(k), mask) == oracle::dilate_constrained(seeds, k, mask));
  }
}

TEST_CASE("dilate_constrained breaks ties toward the smaller label") {
  LabelVolume mask = oracle::box_volume({5, 1, 1}, {0, 0, 0}, {5, 1, 1});
  LabelVolume seeds({5, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{2, 0, 0, 0, 1});
  auto out = dilate_constrained(seeds, StructuringElement::sphere(2), mask);
  CHECK(out == LabelVolume({5, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{2, 2, 1, 1, 1}));
}

TEST_CASE("dilate_constrained contract checks") {
  LabelVolume mask({3, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{1, 1, 0});
  LabelVolume seeds({3, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{0, 0, 1});
  CHECK_THROWS_AS(dilate_constrained(seeds, StructuringElement::sphere(1), mask), Error);
  LabelVolume other({2, 1, 1}, {1, 1, 1});
  CHECK_THROWS_AS(dilate_constrained(other, StructuringElement::sphere(1), mask), Error);
}

TEST_CASE("prune_small drops and relabels") {
  LabelVolume l({6, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{3, 0, 1, 1, 0, 2});
  auto p = prune_small(l, 2);
  CHECK(p == LabelVolume({6, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{0, 0, 1, 1, 0, 0}));
}

TEST_CASE("opening_block matches the composed oracle") {
  Rng rng(24);
  for (int trial = 0; trial < 12; ++trial) {
    auto b = oracle::random_blobs(rng, 22);
    auto labels = oracle::ccl(b);
    const int k = static_cast<int>(rng.uniform_int(1, 3));
    const std::size_t mv = static_cast<std::size_t>(rng.uniform_int(1, 30));
    CHECK(opening_block(labels, {k, mv}) == oracle::opening_block(labels, k, mv));
    CHECK(opening_block(labels, {k, mv}, 4) == opening_block(labels, {k, mv}, 1));
  }
}

TEST_CASE("opening splits two boxes joined by a thin bar") {
  LabelVolume b({30, 12, 12}, {1, 1, 1});
  oracle::paint_box(b, {1, 1, 1}, {11, 11, 11}, 1);
  oracle::paint_box(b, {19, 1, 1}, {29, 11, 11}, 1);
  oracle::paint_box(b, {11, 5, 5}, {19, 7, 7}, 1);
  auto l = opening_block(ccl(b), {2, 20});
  CHECK(max_label(l) == 2);
  CHECK(l.at(2, 2, 2) != l.at(27, 2, 2));
  // Bar voxels farther than k from either eroded box are left unlabelled.
  CHECK(l.at(15, 5, 5) == 0);
}

TEST_CASE("opening keeps an object that does not break") {
  LabelVolume b = oracle::box_volume({12, 12, 12}, {1, 1, 1}, {11, 11, 11});
  auto l = opening_block(b, {2, 10});
  CHECK(l == b);
}

TEST_CASE("assign_nearest fills targets within reach") {
  LabelVolume lab({6, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{1, 0, 0, 0, 0, 2});
  LabelVolume tgt({6, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{0, 1, 1, 1, 1, 0});
  CHECK(assign_nearest(lab, tgt) == LabelVolume({6, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{1, 1, 1, 2, 2, 2}));
  CHECK(assign_nearest(lab, tgt, 1.0) == LabelVolume({6, 1, 1}, {1, 1, 1}, std::vector<std::uint32_t>{1, 1, 0, 0, 2, 2}));
}
