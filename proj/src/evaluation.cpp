#include "aatr/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

namespace aatr::eval {

std::string_view to_string(Form f) { return f == Form::Bulk ? "bulk" : "sheet"; }

Form form_from_string(std::string_view s) {
  if (s == "bulk") return Form::Bulk;
  if (s == "sheet") return Form::Sheet;
  fail(ErrorKind::Format, "form must be bulk or sheet, got '" + std::string(s) + "'");
}

Match match_counts(std::size_t gt_voxels, std::size_t seg_voxels, std::size_t overlap, Form form,
                   const Thresholds& t) {
  Match m;
  if (gt_voxels == 0 || seg_voxels == 0) return m;
  if (overlap > gt_voxels || overlap > seg_voxels) fail(ErrorKind::Contract, "overlap exceeds object size");
  m.precision = static_cast<double>(overlap) / static_cast<double>(seg_voxels);
  m.recall = static_cast<double>(overlap) / static_cast<double>(gt_voxels);
  const double th = t.for_form(form);
  m.matched = m.precision >= th && m.recall >= th;
  return m;
}

Match match_one(const LabelVolume& gt, std::uint32_t gt_label, const LabelVolume& seg, std::uint32_t seg_label,
                Form form, const Thresholds& t) {
  require_same_frame(gt, seg, "match_one");
  std::size_t g = 0, s = 0, both = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool a = gt_label && gt[i] == gt_label;
    const bool b = seg_label && seg[i] == seg_label;
    g += a;
    s += b;
    both += a && b;
  }
  return match_counts(g, s, both, form, t);
}

OverlapTable overlap_table(const LabelVolume& gt, const LabelVolume& seg) {
  require_same_frame(gt, seg, "overlap_table");
  OverlapTable t;
  t.gt_voxels = label_counts(gt);
  t.seg_voxels = label_counts(seg);
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (gt[i] && seg[i]) ++t.overlap[{gt[i], seg[i]}];
  return t;
}

bool is_gt_threat(const GroundTruthObject& g, const adapt::ThreatDefinition& tdef) {
  const auto* m = tdef.find(g.material);
  if (!m) return false;
  if (tdef.mass_filter != adapt::MassFilterMode::Detection && !m->physical_ok(g.mass_g, g.thickness_mm)) return false;
  return true;
}

namespace {

std::size_t seg_size(const OverlapTable& t, std::uint32_t s) { return s < t.seg_voxels.size() ? t.seg_voxels[s] : 0; }
std::size_t gt_size(const OverlapTable& t, std::uint32_t g) { return g < t.gt_voxels.size() ? t.gt_voxels[g] : 0; }

}  // namespace

MatchReport evaluate(const std::vector<adapt::Detection>& detections, const std::vector<BagTruth>& truth,
                     const adapt::ThreatDefinition& tdef, const EvalOptions& opts) {
  tdef.validate();
  std::map<std::string, std::size_t> bag_index;
  for (std::size_t b = 0; b < truth.size(); ++b)
    if (!bag_index.emplace(truth[b].bag_id, b).second) fail(ErrorKind::Contract, "duplicate bag id " + truth[b].bag_id);
  std::vector<std::vector<const adapt::Detection*>> per_bag(truth.size());
  for (const auto& d : detections) {
    auto it = bag_index.find(d.bag_id);
    if (it == bag_index.end()) fail(ErrorKind::Contract, "detection references unknown bag " + d.bag_id);
    if (d.label == 0 || seg_size(truth[it->second].overlaps, d.label) == 0)
      fail(ErrorKind::Contract, "detection references missing segment " + std::to_string(d.label) + " in bag " + d.bag_id);
    per_bag[it->second].push_back(&d);
  }

  MatchReport r;
  r.n_detections = detections.size();
  for (std::size_t b = 0; b < truth.size(); ++b) {
    const auto& bag = truth[b];
    const auto& t = bag.overlaps;
    std::map<std::uint32_t, const GroundTruthObject*> gt_by_label;
    for (const auto& g : bag.objects) gt_by_label[g.label] = &g;
    // Segments spatially matching a GT threat.
    std::set<std::uint32_t> threat_matched_segments;
    for (const auto& [key, n] : t.overlap) {
      auto it = gt_by_label.find(key.first);
      if (it == gt_by_label.end() || !is_gt_threat(*it->second, tdef)) continue;
      if (match_counts(gt_size(t, key.first), seg_size(t, key.second), n, it->second->form, opts.thresholds).matched)
        threat_matched_segments.insert(key.second);
    }
    for (std::size_t s = 1; s < t.seg_voxels.size(); ++s)
      if (t.seg_voxels[s] && !threat_matched_segments.count(static_cast<std::uint32_t>(s))) ++r.n_nonthreat_segments;

    for (const auto& g : bag.objects) {
      GtRow row{bag.bag_id, g.label, g.material, g.form, is_gt_threat(g, tdef), false, 0.0, 0.0, 0};
      auto lo = t.overlap.lower_bound({g.label, 0});
      for (auto it = lo; it != t.overlap.end() && it->first.first == g.label; ++it) {
        const Match m = match_counts(gt_size(t, g.label), seg_size(t, it->first.second), it->second, g.form, opts.thresholds);
        if (m.precision + m.recall > row.best_precision + row.best_recall)
          row.best_precision = m.precision, row.best_recall = m.recall, row.best_segment = it->first.second;
      }
      if (row.threat) {
        ++r.n_threats;
        for (const auto* d : per_bag[b]) {
          if (opts.require_material_match && d->material != g.material) continue;
          auto it = t.overlap.find({g.label, d->label});
          if (it == t.overlap.end()) continue;
          if (match_counts(gt_size(t, g.label), seg_size(t, d->label), it->second, g.form, opts.thresholds).matched) {
            row.detected = true;
            break;
          }
        }
        r.n_detected += row.detected;
      } else {
        ++r.n_nonthreats;
      }
      r.rows.push_back(std::move(row));
    }
    for (const auto* d : per_bag[b])
      if (!threat_matched_segments.count(d->label)) ++r.n_false_alarms;
  }
  if (r.n_threats == 0) fail(ErrorKind::Undefined, "no ground-truth threats under this threat definition; PD is undefined");
  r.pd = static_cast<double>(r.n_detected) / static_cast<double>(r.n_threats);
  r.pfa = r.n_nonthreats ? static_cast<double>(r.n_false_alarms) / static_cast<double>(r.n_nonthreats) : 0.0;
  r.pfa_segments =
      r.n_nonthreat_segments ? static_cast<double>(r.n_false_alarms) / static_cast<double>(r.n_nonthreat_segments) : 0.0;
  return r;
}

double segmentation_match_rate(const std::vector<BagTruth>& truth, const Thresholds& th) {
  std::size_t total = 0, matched = 0;
  for (const auto& bag : truth) {
    const auto& t = bag.overlaps;
    for (const auto& g : bag.objects) {
      ++total;
      auto lo = t.overlap.lower_bound({g.label, 0});
      for (auto it = lo; it != t.overlap.end() && it->first.first == g.label; ++it)
        if (match_counts(gt_size(t, g.label), seg_size(t, it->first.second), it->second, g.form, th).matched) {
          ++matched;
          break;
        }
    }
  }
  if (total == 0) fail(ErrorKind::Undefined, "no ground-truth objects");
  return static_cast<double>(matched) / static_cast<double>(total);
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) fail(ErrorKind::Format, "bad number '" + s + "' in detections table");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) fail(ErrorKind::Format, "bad integer '" + s + "' in detections table");
  return v;
}

constexpr const char* kDetectionHeader =
    "bag_id\tlabel\tmaterial\tscore\tmass_g\tdensity_mhu\tthickness_mm\tvoxels\tvolume_mm3";

}  // namespace

std::string report_to_json(const MatchReport& r) {
  nlohmann::ordered_json j;
  j["pd"] = r.pd;
  j["pfa"] = r.pfa;
  j["n_threats"] = r.n_threats;
  j["n_detected"] = r.n_detected;
  j["n_nonthreats"] = r.n_nonthreats;
  j["n_detections"] = r.n_detections;
  j["n_false_alarms"] = r.n_false_alarms;
  j["pfa_denominator"] = "ground_truth_nonthreat_objects";
  j["alternative"] = {{"pfa_denominator", "nonthreat_segments"},
                      {"n_nonthreat_segments", r.n_nonthreat_segments},
                      {"pfa", r.pfa_segments}};
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows)
    j["objects"].push_back({{"bag_id", row.bag_id},
                            {"label", row.label},
                            {"material", row.material},
                            {"form", to_string(row.form)},
                            {"threat", row.threat},
                            {"detected", row.detected},
                            {"best_precision", row.best_precision},
                            {"best_recall", row.best_recall},
                            {"best_segment", row.best_segment}});
  return j.dump(1) + "\n";
}

std::string report_to_tsv(const MatchReport& r) {
  std::ostringstream os;
  os << "bag_id\tlabel\tmaterial\tform\tthreat\tdetected\tbest_precision\tbest_recall\tbest_segment\n";
  for (const auto& row : r.rows)
    os << row.bag_id << '\t' << row.label << '\t' << row.material << '\t' << to_string(row.form) << '\t' << row.threat
       << '\t' << row.detected << '\t' << fmt(row.best_precision) << '\t' << fmt(row.best_recall) << '\t'
       << row.best_segment << '\n';
  os << "summary\tpd=" << fmt(r.pd) << "\tpfa=" << fmt(r.pfa) << "\tthreats=" << r.n_threats
     << "\tdetected=" << r.n_detected << "\tnonthreats=" << r.n_nonthreats << "\tfalse_alarms=" << r.n_false_alarms
     << "\tdetections=" << r.n_detections << '\n';
  return os.str();
}

std::string sweep_to_tsv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "offset\tpd\tpfa\n";
  for (const auto& r : rows) os << fmt(r.offset) << '\t' << fmt(r.pd) << '\t' << fmt(r.pfa) << '\n';
  return os.str();
}

std::string detections_to_tsv(const std::vector<adapt::Detection>& detections) {
  std::ostringstream os;
  os << kDetectionHeader << '\n';
  for (const auto& d : detections)
    os << d.bag_id << '\t' << d.label << '\t' << d.material << '\t' << fmt(d.score) << '\t' << fmt(d.stats.mass_g)
       << '\t' << fmt(d.stats.density_mhu) << '\t' << fmt(d.stats.thickness_mm) << '\t' << d.stats.voxel_count << '\t'
       << fmt(d.stats.volume_mm3) << '\n';
  return os.str();
}

std::vector<adapt::Detection> detections_from_tsv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kDetectionHeader) fail(ErrorKind::Format, "detections table: bad header");
  std::vector<adapt::Detection> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 9) fail(ErrorKind::Format, "detections table: expected 9 columns");
    adapt::Detection d;
    d.bag_id = f[0];
    d.label = static_cast<std::uint32_t>(parse_uint(f[1]));
    d.material = f[2];
    d.score = parse_double(f[3]);
    d.stats.label = d.label;
    d.stats.mass_g = parse_double(f[4]);
    d.stats.density_mhu = parse_double(f[5]);
    d.stats.thickness_mm = parse_double(f[6]);
    d.stats.voxel_count = parse_uint(f[7]);
    d.stats.volume_mm3 = parse_double(f[8]);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace aatr::eval
