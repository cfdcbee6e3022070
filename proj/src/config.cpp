#include "aatr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace aatr {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::Io, "read failed for " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::Config, what + ": malformed JSON: " + e.what());
  }
}

Json load_json(const std::filesystem::path& path) { return parse_json(read_text_file(path), path.string()); }

namespace {

/// Reads optional keys from a JSON object and rejects unknown ones.
class Fields {
 public:
  Fields(const Json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) fail(ErrorKind::Config, what_ + " must be a JSON object");
  }

  template <class T>
  bool get(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return false;
    used_.insert(key);
    try {
      out = it->get<T>();
    } catch (const Json::exception& e) {
      fail(ErrorKind::Config, what_ + "." + key + ": " + e.what());
    }
    return true;
  }

  bool range(const char* key, cls::DensityRange& out) {
    std::array<double, 2> v{};
    if (!get(key, v)) return false;
    out = {v[0], v[1]};
    return true;
  }

  bool range(const char* key, phantom::Range& out) {
    std::array<double, 2> v{};
    if (!get(key, v)) return false;
    out = {v[0], v[1]};
    return true;
  }

  const Json* sub(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  std::string path(const char* key) const { return what_ + "." + key; }

  void done() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) fail(ErrorKind::Config, what_ + ": unknown key '" + k + "'");
  }

 private:
  const Json& j_;
  std::string what_;
  std::set<std::string> used_;
};

Json range_json(double lo, double hi) { return Json::array({lo, hi}); }

}  // namespace

seg::SegmentationConfig segmentation_config_from_json(const Json& j) {
  seg::SegmentationConfig c;
  Fields f(j, "segmentation");
  std::array<int, 2> window{c.window.lower, c.window.upper};
  if (f.get("window_mhu", window)) {
    if (window[0] < 0 || window[1] > kMaxMhu || window[0] > window[1])
      fail(ErrorKind::Config, "segmentation.window_mhu must satisfy 0 <= lower <= upper <= 32767");
    c.window = {static_cast<std::uint16_t>(window[0]), static_cast<std::uint16_t>(window[1])};
  }
  if (const Json* s = f.sub("scales")) {
    if (!s->is_array()) fail(ErrorKind::Config, "segmentation.scales must be an array");
    c.scales.clear();
    for (const auto& e : *s) {
      Fields g(e, "segmentation.scales[]");
      morph::OpeningParams p;
      g.get("k", p.k);
      g.get("min_voxels", p.min_voxels);
      g.done();
      c.scales.push_back(p);
    }
  }
  if (const Json* p = f.sub("peak")) {
    Fields g(*p, "segmentation.peak");
    g.get("bin_width_mhu", c.peak.bin_width_mhu);
    g.get("window_halfwidth_bins", c.peak.window_halfwidth_bins);
    g.get("smoothing_radius_bins", c.peak.smoothing_radius_bins);
    g.get("min_peak_mass_fraction", c.peak.min_peak_mass_fraction);
    g.done();
  }
  f.get("intensity_split", c.intensity_split);
  f.done();
  c.validate();
  return c;
}

Json to_json(const seg::SegmentationConfig& c) {
  Json scales = Json::array();
  for (const auto& s : c.scales) scales.push_back({{"k", s.k}, {"min_voxels", s.min_voxels}});
  return {{"window_mhu", {c.window.lower, c.window.upper}},
          {"scales", scales},
          {"peak",
           {{"bin_width_mhu", c.peak.bin_width_mhu},
            {"window_halfwidth_bins", c.peak.window_halfwidth_bins},
            {"smoothing_radius_bins", c.peak.smoothing_radius_bins},
            {"min_peak_mass_fraction", c.peak.min_peak_mass_fraction}}},
          {"intensity_split", c.intensity_split}};
}

cls::FeatureConfig feature_config_from_json(const Json& j) {
  cls::FeatureConfig c;
  Fields f(j, "feature");
  std::array<double, 2> r{c.lo_mhu, c.hi_mhu};
  if (f.get("range_mhu", r)) c.lo_mhu = r[0], c.hi_mhu = r[1];
  f.get("bins", c.bins);
  f.done();
  c.validate();
  return c;
}

Json to_json(const cls::FeatureConfig& c) { return {{"range_mhu", range_json(c.lo_mhu, c.hi_mhu)}, {"bins", c.bins}}; }

cls::TrainParams train_params_from_json(const Json& j) {
  cls::TrainParams p;
  Fields f(j, "train");
  f.get("c", p.c);
  f.get("max_epochs", p.max_epochs);
  f.get("tolerance", p.tolerance);
  f.get("calibration_folds", p.calibration_folds);
  f.get("calibration_l2", p.calibration_l2);
  f.get("feature_scale", p.feature_scale);
  f.get("balance_classes", p.balance_classes);
  f.done();
  p.validate();
  return p;
}

Json to_json(const cls::TrainParams& p) {
  return {{"c", p.c},
          {"max_epochs", p.max_epochs},
          {"tolerance", p.tolerance},
          {"calibration_folds", p.calibration_folds},
          {"calibration_l2", p.calibration_l2},
          {"feature_scale", p.feature_scale},
          {"balance_classes", p.balance_classes}};
}

cls::SynthSpec synth_spec_from_json(const Json& j) {
  cls::SynthSpec s;
  Fields f(j, "synth");
  f.get("count", s.count);
  f.get("amplitude", s.amplitude);
  std::array<double, 2> sigma{s.sigma_lo, s.sigma_hi};
  if (f.get("sigma_mhu", sigma)) s.sigma_lo = sigma[0], s.sigma_hi = sigma[1];
  std::vector<std::array<double, 2>> known;
  if (f.get("known_mhu", known)) {
    s.known.clear();
    for (const auto& k : known) s.known.push_back({k[0], k[1]});
  }
  f.done();
  return s;
}

Json to_json(const cls::SynthSpec& s) {
  Json known = Json::array();
  for (const auto& k : s.known) known.push_back(range_json(k.lo, k.hi));
  return {{"count", s.count}, {"amplitude", s.amplitude}, {"sigma_mhu", range_json(s.sigma_lo, s.sigma_hi)},
          {"known_mhu", known}};
}

adapt::ThreatDefinition threat_definition_from_json(const Json& j) {
  adapt::ThreatDefinition t;
  Fields f(j, "threat definition");
  f.get("required_pd", t.required_pd);
  std::string mode;
  if (f.get("mass_filter", mode)) t.mass_filter = adapt::mass_filter_mode_from_string(mode);
  const Json* ms = f.sub("materials");
  if (!ms || !ms->is_array()) fail(ErrorKind::Config, "threat definition needs a materials array");
  for (const auto& e : *ms) {
    Fields g(e, "threat definition.materials[]");
    adapt::MaterialRequirement m;
    if (!g.get("material", m.material)) fail(ErrorKind::Config, "threat material entry without a name");
    cls::DensityRange r;
    if (g.range("rho_mhu", r)) m.rho_mhu = r;
    double mass = 0.0;
    if (g.get("min_mass_g", mass)) m.min_mass_g = mass;
    if (g.range("mass_range_g", r)) m.mass_range_g = r;
    if (g.range("thickness_mm", r)) m.thickness_mm = r;
    g.done();
    t.materials.push_back(std::move(m));
  }
  f.done();
  t.validate();
  for (const auto& m : t.materials) adapt::routed_class(m);
  return t;
}

Json to_json(const adapt::ThreatDefinition& t) {
  Json ms = Json::array();
  for (const auto& m : t.materials) {
    Json e{{"material", m.material}};
    if (m.rho_mhu) e["rho_mhu"] = range_json(m.rho_mhu->lo, m.rho_mhu->hi);
    if (m.min_mass_g) e["min_mass_g"] = *m.min_mass_g;
    if (m.mass_range_g) e["mass_range_g"] = range_json(m.mass_range_g->lo, m.mass_range_g->hi);
    if (m.thickness_mm) e["thickness_mm"] = range_json(m.thickness_mm->lo, m.thickness_mm->hi);
    ms.push_back(std::move(e));
  }
  return {{"required_pd", t.required_pd}, {"mass_filter", adapt::to_string(t.mass_filter)}, {"materials", ms}};
}

adapt::OffsetTable offset_table_from_json(const Json& j) {
  adapt::OffsetTable t;
  Fields f(j, "offsets");
  std::string schema;
  f.get("schema", schema);
  if (schema != "aatr.offsets/1") fail(ErrorKind::Config, "offsets: unsupported schema '" + schema + "'");
  const Json* cs = f.sub("curves");
  if (!cs || !cs->is_object()) fail(ErrorKind::Config, "offsets: curves object missing");
  for (const auto& [name, c] : cs->items()) {
    Fields g(c, "offsets.curves." + name);
    adapt::OffsetCurve curve;
    g.get("pd", curve.pd);
    g.get("offset", curve.offset);
    g.get("flat", curve.flat);
    g.get("grid", curve.grid);
    g.get("achieved_pd", curve.achieved);
    g.done();
    if (curve.pd.empty() || curve.pd.size() != curve.offset.size())
      fail(ErrorKind::Config, "offsets." + name + ": pd and offset knots must be non-empty and equal length");
    for (std::size_t i = 1; i < curve.pd.size(); ++i)
      if (!(curve.pd[i] > curve.pd[i - 1]) || curve.offset[i] < curve.offset[i - 1])
        fail(ErrorKind::Config, "offsets." + name + ": knots must be increasing");
    t.curves[name] = std::move(curve);
  }
  f.done();
  return t;
}

Json to_json(const adapt::OffsetTable& t) {
  Json cs = Json::object();
  for (const auto& [name, c] : t.curves)
    cs[name] = {{"pd", c.pd}, {"offset", c.offset}, {"flat", c.flat}, {"grid", c.grid}, {"achieved_pd", c.achieved}};
  return {{"schema", "aatr.offsets/1"}, {"curves", cs}};
}

adapt::AlphaTable alpha_table_from_json(const Json& j) {
  adapt::AlphaTable t;
  Fields f(j, "alphas");
  std::string schema;
  f.get("schema", schema);
  if (schema != "aatr.alphas/1") fail(ErrorKind::Config, "alphas: unsupported schema '" + schema + "'");
  f.get("alpha", t.alpha);
  f.sub("trace");
  f.done();
  for (const auto& [m, a] : t.alpha)
    if (!(a > 0.0 && a <= 1.0)) fail(ErrorKind::Config, "alphas." + m + " must lie in (0, 1]");
  return t;
}

Json to_json(const adapt::AlphaTable& t) { return {{"schema", "aatr.alphas/1"}, {"alpha", t.alpha}}; }

namespace {

phantom::MaterialSpec material_spec_from_json(const Json& j) {
  phantom::MaterialSpec m;
  Fields f(j, "phantom material");
  f.get("name", m.name);
  f.get("mean_mhu", m.mean_mhu);
  f.get("std_mhu", m.std_mhu);
  f.get("mean_jitter_mhu", m.mean_jitter_mhu);
  f.get("is_known", m.is_known);
  f.get("weight", m.weight);
  f.done();
  return m;
}

Json to_json(const phantom::MaterialSpec& m) {
  return {{"name", m.name},       {"mean_mhu", m.mean_mhu}, {"std_mhu", m.std_mhu}, {"mean_jitter_mhu", m.mean_jitter_mhu},
          {"is_known", m.is_known}, {"weight", m.weight}};
}

Json range_json(const phantom::Range& r) { return range_json(r.lo, r.hi); }

}  // namespace

phantom::PhantomSpec phantom_spec_from_json(const Json& j) {
  phantom::PhantomSpec s;
  Fields f(j, "phantom");
  std::array<std::uint32_t, 3> dims{s.dims.nx, s.dims.ny, s.dims.nz};
  if (f.get("dims", dims)) s.dims = {dims[0], dims[1], dims[2]};
  f.get("spacing_mm", s.spacing);
  f.get("background_mhu", s.background_mhu);
  f.get("background_noise_mhu", s.background_noise_mhu);
  f.range("objects", s.objects);
  std::vector<std::string> shapes;
  if (f.get("shapes", shapes)) {
    s.shapes.clear();
    for (const auto& n : shapes) s.shapes.push_back(phantom::shape_from_string(n));
  }
  if (const Json* z = f.sub("sizes")) {
    Fields g(*z, "phantom.sizes");
    g.range("sphere_radius_mm", s.sizes.sphere_radius_mm);
    g.range("box_edge_mm", s.sizes.box_edge_mm);
    g.range("cylinder_radius_mm", s.sizes.cylinder_radius_mm);
    g.range("cylinder_length_mm", s.sizes.cylinder_length_mm);
    g.range("sheet_thickness_mm", s.sizes.sheet_thickness_mm);
    g.range("sheet_edge_mm", s.sizes.sheet_edge_mm);
    g.done();
  }
  f.get("touch_probability", s.touch_probability);
  f.range("contact_depth_mm", s.contact_depth_mm);
  f.get("distinct_touching_materials", s.distinct_touching_materials);
  if (const Json* ms = f.sub("materials")) {
    if (!ms->is_array()) fail(ErrorKind::Config, "phantom.materials must be an array");
    s.materials.clear();
    for (const auto& m : *ms) s.materials.push_back(material_spec_from_json(m));
  }
  if (const Json* cs = f.sub("clusters")) {
    if (!cs->is_array()) fail(ErrorKind::Config, "phantom.clusters must be an array");
    for (const auto& c : *cs) {
      Fields g(c, "phantom.clusters[]");
      phantom::ClusterSpec k;
      g.range("count", k.count);
      g.range("members", k.members);
      g.range("radius_mm", k.radius_mm);
      g.range("contact_depth_mm", k.contact_depth_mm);
      g.range("attachments", k.attachments);
      g.range("attachment_edge_mm", k.attachment_edge_mm);
      g.range("attachment_depth_mm", k.attachment_depth_mm);
      g.get("materials", k.materials);
      g.done();
      s.clusters.push_back(std::move(k));
    }
  }
  f.get("sheet_threshold_mm", s.sheet_threshold_mm);
  f.get("margin_mm", s.margin_mm);
  f.get("max_retries", s.max_retries);
  f.done();
  s.validate();
  return s;
}

Json to_json(const phantom::PhantomSpec& s) {
  Json shapes = Json::array();
  for (auto sh : s.shapes) shapes.push_back(std::string(phantom::to_string(sh)));
  Json mats = Json::array();
  for (const auto& m : s.materials) mats.push_back(to_json(m));
  Json clusters = Json::array();
  for (const auto& c : s.clusters)
    clusters.push_back({{"count", range_json(c.count)},
                        {"members", range_json(c.members)},
                        {"radius_mm", range_json(c.radius_mm)},
                        {"contact_depth_mm", range_json(c.contact_depth_mm)},
                        {"attachments", range_json(c.attachments)},
                        {"attachment_edge_mm", range_json(c.attachment_edge_mm)},
                        {"attachment_depth_mm", range_json(c.attachment_depth_mm)},
                        {"materials", c.materials}});
  return {{"dims", {s.dims.nx, s.dims.ny, s.dims.nz}},
          {"spacing_mm", s.spacing},
          {"background_mhu", s.background_mhu},
          {"background_noise_mhu", s.background_noise_mhu},
          {"objects", range_json(s.objects)},
          {"shapes", shapes},
          {"sizes",
           {{"sphere_radius_mm", range_json(s.sizes.sphere_radius_mm)},
            {"box_edge_mm", range_json(s.sizes.box_edge_mm)},
            {"cylinder_radius_mm", range_json(s.sizes.cylinder_radius_mm)},
            {"cylinder_length_mm", range_json(s.sizes.cylinder_length_mm)},
            {"sheet_thickness_mm", range_json(s.sizes.sheet_thickness_mm)},
            {"sheet_edge_mm", range_json(s.sizes.sheet_edge_mm)}}},
          {"touch_probability", s.touch_probability},
          {"contact_depth_mm", range_json(s.contact_depth_mm)},
          {"distinct_touching_materials", s.distinct_touching_materials},
          {"materials", mats},
          {"clusters", clusters},
          {"sheet_threshold_mm", s.sheet_threshold_mm},
          {"margin_mm", s.margin_mm},
          {"max_retries", s.max_retries}};
}

eval::EvalOptions eval_options_from_json(const Json& j) {
  eval::EvalOptions o;
  Fields f(j, "evaluation");
  f.get("require_material_match", o.require_material_match);
  f.get("bulk_threshold", o.thresholds.bulk);
  f.get("sheet_threshold", o.thresholds.sheet);
  f.done();
  return o;
}

Json to_json(const eval::EvalOptions& o) {
  return {{"require_material_match", o.require_material_match},
          {"bulk_threshold", o.thresholds.bulk},
          {"sheet_threshold", o.thresholds.sheet}};
}

pipeline::PipelineConfig pipeline_config_from_json(const Json& j) {
  pipeline::PipelineConfig c;
  Fields f(j, "pipeline config");
  if (const Json* s = f.sub("segmentation")) c.segmentation = segmentation_config_from_json(*s);
  if (const Json* s = f.sub("feature")) c.feature = feature_config_from_json(*s);
  if (const Json* s = f.sub("train")) c.train = train_params_from_json(*s);
  if (const Json* s = f.sub("synth")) c.synth = synth_spec_from_json(*s);
  if (const Json* s = f.sub("evaluation")) c.evaluation = eval_options_from_json(*s);
  f.get("offset_grid", c.offset_grid);
  f.get("alpha_grid", c.alpha_grid);
  f.get("holdout_materials", c.holdout_materials);
  f.done();
  c.validate();
  return c;
}

Json to_json(const pipeline::PipelineConfig& c) {
  return {{"segmentation", to_json(c.segmentation)}, {"feature", to_json(c.feature)},
          {"train", to_json(c.train)},               {"synth", to_json(c.synth)},
          {"evaluation", to_json(c.evaluation)},     {"offset_grid", c.offset_grid},
          {"alpha_grid", c.alpha_grid},             {"holdout_materials", c.holdout_materials}};
}

}  // namespace aatr
