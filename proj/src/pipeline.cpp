#include "aatr/pipeline.hpp"

#include <algorithm>

#include "aatr/bvox.hpp"
#include "aatr/config.hpp"
#include "aatr/parallel.hpp"

namespace aatr::pipeline {

void PipelineConfig::validate() const {
  segmentation.validate();
  feature.validate();
  train.validate();
  if (offset_grid.empty()) fail(ErrorKind::Config, "offset_grid is empty");
  for (double o : offset_grid)
    if (!(std::abs(o) <= adapt::kMaxOffset)) fail(ErrorKind::Config, "offset_grid values must lie in [-0.5, 0.5]");
  if (alpha_grid.empty()) fail(ErrorKind::Config, "alpha_grid is empty");
  for (double a : alpha_grid)
    if (!(a > 0.0 && a <= 1.0)) fail(ErrorKind::Config, "alpha_grid values must lie in (0, 1]");
  cls::SynthSpec s = synth;
  s.feature = feature;
  if (s.count > 0) s.validate();
}

LoadedBag load_bag(const std::filesystem::path& dir, const phantom::IndexEntry& e) {
  LoadedBag b;
  b.id = e.id;
  b.raw = read_raw(dir / e.raw_file);
  b.gt = read_labels(dir / e.gt_file);
  b.manifest = phantom::manifest_from_json(read_text_file(dir / e.manifest_file));
  if (!b.raw.same_frame(b.gt)) fail(ErrorKind::Shape, "bag " + e.id + ": raw and ground-truth frames differ");
  return b;
}

std::vector<LoadedBag> load_split(const std::filesystem::path& dir, const std::string& split, unsigned threads) {
  const auto idx = phantom::load_index(dir);
  std::vector<const phantom::IndexEntry*> entries;
  if (split == "odd" || split == "even")
    entries = idx.split(split == "odd");
  else if (split == "all")
    for (const auto& e : idx.bags) entries.push_back(&e);
  else
    fail(ErrorKind::Usage, "split must be odd, even or all");
  std::vector<LoadedBag> out(entries.size());
  parallel_for(entries.size(), threads, [&](std::size_t i) { out[i] = load_bag(dir, *entries[i]); });
  return out;
}

LoadedBag from_generated(std::string id, phantom::Bag bag) {
  return {std::move(id), std::move(bag.raw), std::move(bag.gt), std::move(bag.manifest)};
}

cls::MaterialClass training_class(const std::string& material) {
  cls::MaterialClass c{};
  return cls::try_class_from_string(material, c) ? c : cls::MaterialClass::Others;
}

TrainingSet training_set(const std::vector<LoadedBag>& bags, const PipelineConfig& cfg, std::uint64_t seed) {
  TrainingSet t;
  for (const auto& b : bags) {
    const auto feats = cls::extract_features(b.raw, b.gt, cfg.feature);
    for (const auto& o : b.manifest.objects) {
      if (o.label >= feats.size() || feats[o.label].empty()) continue;
      if (std::ranges::find(cfg.holdout_materials, o.material) != cfg.holdout_materials.end()) continue;
      t.features.push_back(feats[o.label]);
      t.classes.push_back(training_class(o.material));
    }
  }
  if (cfg.synth.count > 0) {
    cls::SynthSpec s = cfg.synth;
    s.feature = cfg.feature;
    s.seed = derive_seed(seed, 7);
    for (auto& f : cls::synth_others(s)) {
      t.features.push_back(std::move(f));
      t.classes.push_back(cls::MaterialClass::Others);
    }
  }
  return t;
}

cls::MaterialModel train_model(const std::vector<LoadedBag>& bags, const PipelineConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto t = training_set(bags, cfg, seed);
  return cls::train(t.features, t.classes, cfg.feature, cfg.train, seed);
}

eval::BagTruth bag_truth(const LoadedBag& bag, const LabelVolume& segments) {
  eval::BagTruth t;
  t.bag_id = bag.id;
  t.objects = phantom::ground_truth(bag.manifest);
  t.overlaps = eval::overlap_table(bag.gt, segments);
  return t;
}

PreparedBag prepare_bag(const LoadedBag& bag, const LabelVolume& segments, const cls::MaterialModel& model) {
  PreparedBag p;
  p.id = bag.id;
  p.objects = cls::classify_objects(bag.raw, segments, model);
  p.truth = bag_truth(bag, segments);
  return p;
}

std::vector<LabelVolume> segment_bags(const std::vector<LoadedBag>& bags, const PipelineConfig& cfg, unsigned threads) {
  std::vector<LabelVolume> out(bags.size());
  parallel_for(bags.size(), threads, [&](std::size_t i) { out[i] = seg::segment(bags[i].raw, cfg.segmentation); });
  return out;
}

std::vector<PreparedBag> prepare(const std::vector<LoadedBag>& bags, const std::vector<LabelVolume>& segments,
                                 const cls::MaterialModel& model, unsigned threads) {
  if (segments.size() != bags.size()) fail(ErrorKind::Shape, "one segment volume per bag expected");
  std::vector<PreparedBag> out(bags.size());
  parallel_for(bags.size(), threads, [&](std::size_t i) { out[i] = prepare_bag(bags[i], segments[i], model); });
  return out;
}

std::vector<PreparedBag> prepare(const std::vector<LoadedBag>& bags, const PipelineConfig& cfg,
                                 const cls::MaterialModel& model, unsigned threads) {
  std::vector<PreparedBag> out(bags.size());
  parallel_for(bags.size(), threads, [&](std::size_t i) {
    const LabelVolume segments = seg::segment(bags[i].raw, cfg.segmentation);
    out[i] = prepare_bag(bags[i], segments, model);
  });
  return out;
}

std::vector<adapt::Detection> detect(const std::vector<PreparedBag>& bags, const adapt::ThreatDefinition& tdef,
                                     const adapt::OffsetAssignment& offsets, const adapt::AlphaTable& alphas) {
  std::vector<adapt::Detection> out;
  for (const auto& b : bags) {
    auto d = adapt::apply_ors(b.id, b.objects, tdef, offsets, alphas);
    out.insert(out.end(), std::make_move_iterator(d.begin()), std::make_move_iterator(d.end()));
  }
  return out;
}

eval::MatchReport evaluate(const std::vector<PreparedBag>& bags, const std::vector<adapt::Detection>& detections,
                           const adapt::ThreatDefinition& tdef, const eval::EvalOptions& opts) {
  std::vector<eval::BagTruth> truth;
  truth.reserve(bags.size());
  for (const auto& b : bags) truth.push_back(b.truth);
  return eval::evaluate(detections, truth, tdef, opts);
}

adapt::Evaluator make_evaluator(const std::vector<PreparedBag>& bags, const eval::EvalOptions& opts) {
  return [&bags, opts](const adapt::ThreatDefinition& tdef, const adapt::OffsetAssignment& offsets,
                       const adapt::AlphaTable& alphas) {
    const auto r = evaluate(bags, detect(bags, tdef, offsets, alphas), tdef, opts);
    return adapt::PdPfa{r.pd, r.pfa};
  };
}

std::vector<eval::SweepRow> pd_pfa_sweep(const std::vector<PreparedBag>& bags, const adapt::ThreatDefinition& tdef,
                                         const std::vector<double>& offset_grid, const adapt::AlphaTable& alphas,
                                         const eval::EvalOptions& opts, unsigned threads) {
  std::vector<double> grid = offset_grid;
  std::sort(grid.begin(), grid.end());
  std::vector<eval::SweepRow> rows(grid.size());
  const auto ev = make_evaluator(bags, opts);
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    adapt::OffsetAssignment a;
    for (const auto& m : tdef.materials) a.offset[m.material] = grid[i];
    const auto r = ev(tdef, a, alphas);
    rows[i] = {grid[i], r.pd, r.pfa};
  });
  return rows;
}

Calibration calibrate(const std::vector<PreparedBag>& bags, const adapt::ThreatDefinition& tdef,
                      const PipelineConfig& cfg, unsigned threads) {
  const auto ev = make_evaluator(bags, cfg.evaluation);
  Calibration c;
  c.alphas = adapt::select_alpha(tdef, cfg.alpha_grid, ev, &c.alpha_traces, threads);
  c.offsets = adapt::calibrate_offsets(tdef, cfg.offset_grid, c.alphas, ev, threads);
  return c;
}

}  // namespace aatr::pipeline
