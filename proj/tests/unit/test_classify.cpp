#include <doctest.h>

#include <cmath>
#include <numeric>

#include "aatr/classify.hpp"
#include "aatr/rng.hpp"

using namespace aatr;
using namespace aatr::cls;

namespace {

struct Noisy {
  std::vector<FeatureVector> features;
  std::vector<MaterialClass> classes;
};

// Objects whose intensities follow a per-class normal band, histogrammed by brute force.
Noisy noisy_objects(std::uint64_t seed, int per_class, const FeatureConfig& cfg) {
  const std::array<double, 4> means{1130.0, 1230.0, 1620.0, 920.0};
  Rng rng(seed);
  Noisy n;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> counts(static_cast<std::size_t>(cfg.bins), 0.0);
      const double mu = means[static_cast<std::size_t>(c)] + rng.normal(0.0, 10.0);
      for (int v = 0; v < 400; ++v) counts[static_cast<std::size_t>(cfg.bin_of(rng.normal(mu, 30.0)))] += 1.0;
      n.features.push_back(normalize_counts(counts));
      n.classes.push_back(static_cast<MaterialClass>(c));
    }
  return n;
}

}  // namespace

TEST_CASE("class names round trip") {
  for (auto c : kAllClasses) CHECK(class_from_string(to_string(c)) == c);
  CHECK_THROWS_AS(class_from_string("lava"), Error);
  MaterialClass out{};
  CHECK_FALSE(try_class_from_string("lava", out));
}

TEST_CASE("histogram bins clamp at the window edges") {
  const FeatureConfig f;
  CHECK(f.bin_width() == doctest::Approx(1400.0 / 128.0));
  CHECK(f.bin_of(0.0) == 0);
  CHECK(f.bin_of(800.0) == 0);
  CHECK(f.bin_of(800.0 + f.bin_width()) == 1);
  CHECK(f.bin_of(2199.9) == 127);
  CHECK(f.bin_of(2200.0) == 127);
  CHECK(f.bin_of(30000.0) == 127);
  FeatureConfig bad;
  bad.bins = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("object features are normalized histograms") {
  RawVolume raw({6, 4, 2}, {1, 1, 1}, 0);
  LabelVolume labels({6, 4, 2}, {1, 1, 1});
  Rng rng(1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = static_cast<std::uint16_t>(rng.uniform_int(700, 2300));
    labels[i] = static_cast<std::uint32_t>(i % 3);
  }
  const FeatureConfig cfg;
  const auto all = extract_features(raw, labels, cfg);
  REQUIRE(all.size() == 3);
  for (std::uint32_t l = 1; l <= 2; ++l) {
    std::vector<double> counts(128, 0.0);
    double n = 0;
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (labels[i] == l) counts[static_cast<std::size_t>(cfg.bin_of(raw[i]))] += 1.0, n += 1.0;
    const auto f = extract_feature(raw, labels, l, cfg);
    REQUIRE(f.size() == 128);
    CHECK(std::accumulate(f.begin(), f.end(), 0.0) == doctest::Approx(1.0));
    for (std::size_t b = 0; b < 128; ++b) CHECK(f[b] == doctest::Approx(counts[b] / n));
    CHECK(all[l] == f);
  }
  CHECK_THROWS_AS(extract_feature(raw, labels, 9, cfg), Error);
  CHECK(normalize_counts(std::vector<double>(4, 0.0)) == std::vector<double>(4, 0.0));
}

TEST_CASE("gaussian feature peaks at its centre") {
  const FeatureConfig cfg;
  const auto g = gaussian_feature(cfg, 1.0, 1400.0, 30.0);
  const auto peak = std::max_element(g.begin(), g.end()) - g.begin();
  CHECK(peak == cfg.bin_of(1400.0));
  CHECK(std::accumulate(g.begin(), g.end(), 0.0) == doctest::Approx(1.0));
  auto shape = [&](int i) {
    const double c = cfg.bin_center(i);
    return std::exp(-(c - 1400.0) * (c - 1400.0) / 900.0);
  };
  const int i = static_cast<int>(peak), j = i + 3;
  CHECK(g[static_cast<std::size_t>(j)] / g[static_cast<std::size_t>(i)] == doctest::Approx(shape(j) / shape(i)));
}

TEST_CASE("synthesized others avoid the known ranges") {
  SynthSpec s;
  s.count = 300;
  s.seed = 8;
  const auto mus = synth_centres(s);
  REQUIRE(mus.size() == 300);
  for (double mu : mus) {
    CHECK(s.mu_admissible(mu));
    CHECK(mu >= s.feature.lo_mhu);
    CHECK(mu <= s.feature.hi_mhu);
    for (const auto& r : s.known) CHECK_FALSE(r.contains(mu));
  }
  CHECK(s.admissible_length() == doctest::Approx(1400.0 - (1290.0 - 1050.0) - (1715.0 - 1530.0)));
  CHECK(synth_others(s) == synth_others(s));
  auto t = s;
  t.seed = 9;
  CHECK(synth_others(s) != synth_others(t));
  const auto f = synth_others(s);
  CHECK(f.size() == 300);
  CHECK(f[0].size() == 128);

  SynthSpec full;
  full.known = {{700.0, 2300.0}};
  CHECK_THROWS_AS(full.validate(), Error);
}

TEST_CASE("training separates distinct intensity bands") {
  const FeatureConfig cfg;
  const auto train_set = noisy_objects(1, 40, cfg);
  const auto test_set = noisy_objects(2, 25, cfg);
  const auto model = train(train_set.features, train_set.classes, cfg, {}, 5);
  int correct = 0;
  for (std::size_t i = 0; i < test_set.features.size(); ++i) {
    const auto p = predict_proba(model, test_set.features[i]);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
    for (double v : p) CHECK(v >= 0.0);
    correct += argmax(p) == test_set.classes[i];
  }
  CHECK(correct == static_cast<int>(test_set.features.size()));
  CHECK(model.class_counts == std::array<std::size_t, 4>{40, 40, 40, 40});
}

TEST_CASE("training is deterministic per seed") {
  const FeatureConfig cfg;
  const auto d = noisy_objects(3, 20, cfg);
  CHECK(model_to_json(train(d.features, d.classes, cfg, {}, 11)) == model_to_json(train(d.features, d.classes, cfg, {}, 11)));
}

TEST_CASE("training rejects degenerate input") {
  const FeatureConfig cfg;
  const auto d = noisy_objects(4, 5, cfg);
  std::vector<MaterialClass> one(d.features.size(), MaterialClass::Clay);
  CHECK_THROWS_AS(train(d.features, one, cfg, {}, 1), Error);
  auto short_classes = d.classes;
  short_classes.pop_back();
  CHECK_THROWS_AS(train(d.features, short_classes, cfg, {}, 1), Error);
  TrainParams p;
  p.c = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("threat rule compares threat mass with others") {
  CHECK(is_threat({0.2, 0.2, 0.11, 0.49}));
  CHECK_FALSE(is_threat({0.2, 0.2, 0.1, 0.5}));
  CHECK_FALSE(is_threat({0.0, 0.0, 0.0, 1.0}));
  CHECK(argmax({0.1, 0.4, 0.4, 0.1}) == MaterialClass::Rubber);
}

TEST_CASE("model JSON round trip preserves predictions") {
  const FeatureConfig cfg;
  const auto d = noisy_objects(6, 15, cfg);
  const auto model = train(d.features, d.classes, cfg, {}, 2);
  const auto back = model_from_json(model_to_json(model));
  for (const auto& f : d.features) {
    const auto a = predict_proba(model, f), b = predict_proba(back, f);
    for (std::size_t c = 0; c < kNumClasses; ++c) CHECK(a[c] == b[c]);
  }
  CHECK_THROWS_AS(predict_proba(model, FeatureVector(5, 0.0)), Error);
  CHECK_THROWS_AS(model_from_json("{}"), Error);
  CHECK_THROWS_AS(model_from_json("not json"), Error);
  auto j = model_to_json(model);
  j.replace(j.find("aatr.material_model/1"), 21, "aatr.material_model/9");
  try {
    model_from_json(j);
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }
}

TEST_CASE("classify_objects returns one entry per labelled object") {
  const FeatureConfig cfg;
  const auto d = noisy_objects(7, 20, cfg);
  const auto model = train(d.features, d.classes, cfg, {}, 3);
  RawVolume raw({20, 10, 10}, {1, 1, 1}, 0);
  LabelVolume labels({20, 10, 10}, {1, 1, 1});
  Rng rng(9);
  for (std::uint32_t z = 0; z < 10; ++z)
    for (std::uint32_t y = 0; y < 10; ++y)
      for (std::uint32_t x = 0; x < 20; ++x) {
        const bool left = x < 10;
        labels.at(x, y, z) = left ? 1 : 2;
        raw.at(x, y, z) = static_cast<std::uint16_t>(std::lround(rng.normal(left ? 1620.0 : 1130.0, 30.0)));
      }
  const auto objs = classify_objects(raw, labels, model);
  REQUIRE(objs.size() == 2);
  CHECK(objs[0].stats.label == 1);
  CHECK(argmax(objs[0].probs) == MaterialClass::Clay);
  CHECK(argmax(objs[1].probs) == MaterialClass::Saline);
  CHECK(objs[1].stats.voxel_count == 1000);
}
