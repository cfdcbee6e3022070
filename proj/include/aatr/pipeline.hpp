#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aatr/adaptation.hpp"
#include "aatr/classify.hpp"
#include "aatr/evaluation.hpp"
#include "aatr/phantom.hpp"
#include "aatr/segmentation.hpp"

namespace aatr::pipeline {

/// Every tunable of the detection pipeline.
struct PipelineConfig {
  seg::SegmentationConfig segmentation;
  cls::FeatureConfig feature;
  cls::TrainParams train;
  /// Synthesized others; its feature config is replaced by `feature`.
  cls::SynthSpec synth;
  eval::EvalOptions evaluation;
  std::vector<double> offset_grid = adapt::default_offset_grid();
  std::vector<double> alpha_grid = adapt::default_alpha_grid();
  /// Phantom materials whose objects never enter the training set.
  std::vector<std::string> holdout_materials;
  void validate() const;
};

struct LoadedBag {
  std::string id;
  RawVolume raw;
  LabelVolume gt;
  phantom::Manifest manifest;
};

LoadedBag load_bag(const std::filesystem::path& dir, const phantom::IndexEntry& e);
/// Bags of the odd split, the even split, or all bags.
std::vector<LoadedBag> load_split(const std::filesystem::path& dir, const std::string& split, unsigned threads = 1);
LoadedBag from_generated(std::string id, phantom::Bag bag);

/// Training class of a phantom material: known class names map to themselves, everything else to others.
cls::MaterialClass training_class(const std::string& material);

struct TrainingSet {
  std::vector<cls::FeatureVector> features;
  std::vector<cls::MaterialClass> classes;
};
/// Ground-truth object features of the bags plus synthesized others.
TrainingSet training_set(const std::vector<LoadedBag>& bags, const PipelineConfig& cfg, std::uint64_t seed);
cls::MaterialModel train_model(const std::vector<LoadedBag>& bags, const PipelineConfig& cfg, std::uint64_t seed);

/// Segmented, classified bag with its match table; enough to re-run detection
/// and evaluation under any offsets or alphas.
struct PreparedBag {
  std::string id;
  std::vector<cls::ClassifiedObject> objects;
  eval::BagTruth truth;
};

eval::BagTruth bag_truth(const LoadedBag& bag, const LabelVolume& segments);
PreparedBag prepare_bag(const LoadedBag& bag, const LabelVolume& segments, const cls::MaterialModel& model);
std::vector<LabelVolume> segment_bags(const std::vector<LoadedBag>& bags, const PipelineConfig& cfg, unsigned threads = 1);
/// `segments[i]` belongs to `bags[i]`.
std::vector<PreparedBag> prepare(const std::vector<LoadedBag>& bags, const std::vector<LabelVolume>& segments,
                                 const cls::MaterialModel& model, unsigned threads = 1);
std::vector<PreparedBag> prepare(const std::vector<LoadedBag>& bags, const PipelineConfig& cfg,
                                 const cls::MaterialModel& model, unsigned threads = 1);

std::vector<adapt::Detection> detect(const std::vector<PreparedBag>& bags, const adapt::ThreatDefinition& tdef,
                                     const adapt::OffsetAssignment& offsets, const adapt::AlphaTable& alphas);
eval::MatchReport evaluate(const std::vector<PreparedBag>& bags, const std::vector<adapt::Detection>& detections,
                           const adapt::ThreatDefinition& tdef, const eval::EvalOptions& opts);
adapt::Evaluator make_evaluator(const std::vector<PreparedBag>& bags, const eval::EvalOptions& opts);

/// The same offset added to every threat material's class, one row per grid point.
std::vector<eval::SweepRow> pd_pfa_sweep(const std::vector<PreparedBag>& bags, const adapt::ThreatDefinition& tdef,
                                         const std::vector<double>& offset_grid, const adapt::AlphaTable& alphas,
                                         const eval::EvalOptions& opts, unsigned threads = 1);

struct Calibration {
  adapt::AlphaTable alphas;
  std::map<std::string, adapt::AlphaTrace> alpha_traces;
  adapt::OffsetTable offsets;
};
/// Alphas are chosen at zero offset, then offset curves are measured under those alphas.
Calibration calibrate(const std::vector<PreparedBag>& bags, const adapt::ThreatDefinition& tdef,
                      const PipelineConfig& cfg, unsigned threads = 1);

}  // namespace aatr::pipeline
