#pragma once

#include <map>
#include <string>
#include <vector>

#include "aatr/adaptation.hpp"
#include "aatr/volume.hpp"

namespace aatr::eval {

enum class Form { Bulk, Sheet };
std::string_view to_string(Form f);
Form form_from_string(std::string_view s);

struct Thresholds {
  double bulk = 0.5;
  double sheet = 0.2;
  double for_form(Form f) const { return f == Form::Bulk ? bulk : sheet; }
};

struct GroundTruthObject {
  std::uint32_t label = 0;
  std::string material;
  Form form = Form::Bulk;
  double mass_g = 0.0;
  double density_mhu = 0.0;
  double thickness_mm = 0.0;
};

struct Match {
  double precision = 0.0;
  double recall = 0.0;
  bool matched = false;
};

/// P = overlap/|S|, R = overlap/|G|. An empty S or G reports 0 and no match.
Match match_counts(std::size_t gt_voxels, std::size_t seg_voxels, std::size_t overlap, Form form,
                   const Thresholds& t = {});
Match match_one(const LabelVolume& gt, std::uint32_t gt_label, const LabelVolume& seg, std::uint32_t seg_label,
                Form form, const Thresholds& t = {});

/// Voxel overlaps between every GT object and every segment of one bag.
struct OverlapTable {
  std::vector<std::size_t> gt_voxels;   // indexed by GT label
  std::vector<std::size_t> seg_voxels;  // indexed by segment label
  /// (gt label, seg label) -> shared voxels, nonzero entries only.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> overlap;
};
OverlapTable overlap_table(const LabelVolume& gt, const LabelVolume& seg);

struct BagTruth {
  std::string bag_id;
  std::vector<GroundTruthObject> objects;
  OverlapTable overlaps;
};

struct EvalOptions {
  bool require_material_match = true;
  Thresholds thresholds;
};

struct GtRow {
  std::string bag_id;
  std::uint32_t label = 0;
  std::string material;
  Form form = Form::Bulk;
  bool threat = false;
  bool detected = false;
  double best_precision = 0.0;
  double best_recall = 0.0;
  std::uint32_t best_segment = 0;
};

struct MatchReport {
  std::vector<GtRow> rows;
  std::size_t n_threats = 0;
  std::size_t n_detected = 0;
  std::size_t n_nonthreats = 0;
  std::size_t n_detections = 0;
  std::size_t n_false_alarms = 0;
  /// Segments that match no GT threat; alternative false-alarm denominator.
  std::size_t n_nonthreat_segments = 0;
  double pd = 0.0;
  double pfa = 0.0;
  double pfa_segments = 0.0;
};

/// GT objects counted as threats under `tdef`.
bool is_gt_threat(const GroundTruthObject& g, const adapt::ThreatDefinition& tdef);

/// PD and PFA over a bag set. Undefined error if no GT threat exists.
MatchReport evaluate(const std::vector<adapt::Detection>& detections, const std::vector<BagTruth>& truth,
                     const adapt::ThreatDefinition& tdef, const EvalOptions& opts = {});

/// Fraction of GT objects matched by any segment.
double segmentation_match_rate(const std::vector<BagTruth>& truth, const Thresholds& t = {});

struct SweepRow {
  double offset = 0.0;
  double pd = 0.0;
  double pfa = 0.0;
};

std::string report_to_json(const MatchReport& r);
/// One row per GT object then a summary row.
std::string report_to_tsv(const MatchReport& r);
std::string sweep_to_tsv(const std::vector<SweepRow>& rows);
std::string detections_to_tsv(const std::vector<adapt::Detection>& detections);
/// Io/Format errors on unreadable or malformed tables.
std::vector<adapt::Detection> detections_from_tsv(const std::string& text);

}  // namespace aatr::eval
