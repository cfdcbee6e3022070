#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aatr/volume.hpp"

namespace aatr::cls {

enum class MaterialClass : std::uint8_t { Saline = 0, Rubber = 1, Clay = 2, Others = 3 };
inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::array<MaterialClass, kNumClasses> kAllClasses{MaterialClass::Saline, MaterialClass::Rubber,
                                                                    MaterialClass::Clay, MaterialClass::Others};

std::string_view to_string(MaterialClass c);
/// Config error for unknown names.
MaterialClass class_from_string(std::string_view name);
/// Returns false instead of throwing.
bool try_class_from_string(std::string_view name, MaterialClass& out);

using Probabilities = std::array<double, kNumClasses>;
using FeatureVector = std::vector<double>;

struct FeatureConfig {
  double lo_mhu = 800.0;
  double hi_mhu = 2200.0;
  int bins = 128;
  void validate() const;
  double bin_width() const { return (hi_mhu - lo_mhu) / bins; }
  double bin_center(int i) const { return lo_mhu + (i + 0.5) * bin_width(); }
  /// Out-of-range intensities clamp to the edge bins.
  int bin_of(double mhu) const;
};

/// L1-normalized intensity histogram of one object. NotFound if the label is empty.
FeatureVector extract_feature(const RawVolume& raw, const LabelVolume& labels, std::uint32_t label,
                              const FeatureConfig& cfg);
/// Features of every label 1..max_label in one pass; absent labels get an empty vector.
std::vector<FeatureVector> extract_features(const RawVolume& raw, const LabelVolume& labels, const FeatureConfig& cfg);
/// Normalize raw bin counts; a zero histogram stays zero.
FeatureVector normalize_counts(std::vector<double> counts);

struct DensityRange {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Gaussian-bump features for the catch-all class.
struct SynthSpec {
  FeatureConfig feature;
  /// Excluded from the centre domain.
  std::vector<DensityRange> known{{1050.0, 1215.0}, {1170.0, 1290.0}, {1530.0, 1715.0}};
  double amplitude = 1.0;
  double sigma_lo = 15.0;
  double sigma_hi = 60.0;
  std::size_t count = 200;
  std::uint64_t seed = 0;
  void validate() const;
  bool mu_admissible(double mu) const;
  /// Total length of the admissible centre domain in MHU.
  double admissible_length() const;
};

/// g(x) = a * exp(-(x - mu)^2 / sigma^2) at bin centres, L1-normalized.
FeatureVector gaussian_feature(const FeatureConfig& cfg, double amplitude, double mu, double sigma);
std::vector<FeatureVector> synth_others(const SynthSpec& spec);
/// Centres drawn by synth_others, in draw order.
std::vector<double> synth_centres(const SynthSpec& spec);

struct TrainParams {
  double c = 10.0;
  int max_epochs = 400;
  double tolerance = 1e-3;
  int calibration_folds = 5;
  double calibration_l2 = 1e-3;
  /// Features are multiplied by this before the linear model.
  double feature_scale = 8.0;
  bool balance_classes = true;
  void validate() const;
};

struct MaterialModel {
  FeatureConfig feature;
  TrainParams params;
  std::array<std::vector<double>, kNumClasses> weights;
  std::array<double, kNumClasses> bias{};
  /// p = softmax(cal_scale[c] * decision[c] + cal_offset[c])
  std::array<double, kNumClasses> cal_scale{1.0, 1.0, 1.0, 1.0};
  std::array<double, kNumClasses> cal_offset{};
  std::uint64_t seed = 0;
  std::array<std::size_t, kNumClasses> class_counts{};

  std::array<double, kNumClasses> decision(const FeatureVector& f) const;
};

/// One-vs-rest linear SVM (hinge loss, dual coordinate descent with a bias
/// feature) plus a softmax calibration fitted on out-of-fold decision values.
MaterialModel train(const std::vector<FeatureVector>& features, const std::vector<MaterialClass>& classes,
                    const FeatureConfig& feature, const TrainParams& params, std::uint64_t seed);

/// Shape error if the feature length differs from the model.
Probabilities predict_proba(const MaterialModel& model, const FeatureVector& feature);
MaterialClass argmax(const Probabilities& p);
/// Two-class reduction: threat iff the three material probabilities outweigh others.
bool is_threat(const Probabilities& p);

struct ClassifiedObject {
  ObjectStats stats;
  Probabilities probs{};
};

/// Feature, probabilities and stats for every label present, ascending.
std::vector<ClassifiedObject> classify_objects(const RawVolume& raw, const LabelVolume& labels,
                                               const MaterialModel& model);

std::string model_to_json(const MaterialModel& model);
MaterialModel model_from_json(const std::string& text);
void save_model(const MaterialModel& model, const std::string& path);
MaterialModel load_model(const std::string& path);

}  // namespace aatr::cls
