#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aatr/classify.hpp"

namespace aatr::adapt {

using cls::DensityRange;

/// Where minimum-mass / mass-range / thickness constraints apply.
enum class MassFilterMode { Detection, GroundTruth, Both };
std::string_view to_string(MassFilterMode m);
MassFilterMode mass_filter_mode_from_string(std::string_view s);

struct MaterialRequirement {
  std::string material;
  std::optional<DensityRange> rho_mhu;
  std::optional<double> min_mass_g;
  std::optional<DensityRange> mass_range_g;
  std::optional<DensityRange> thickness_mm;

  /// Mass and thickness constraints only.
  bool physical_ok(double mass_g, double thickness_mm) const;
};

/// Object requirement specification.
struct ThreatDefinition {
  std::vector<MaterialRequirement> materials;
  double required_pd = 0.8;
  MassFilterMode mass_filter = MassFilterMode::Detection;

  void validate() const;
  const MaterialRequirement* find(std::string_view material) const;
  bool contains(std::string_view material) const { return find(material) != nullptr; }
  /// The same definition restricted to one material.
  ThreatDefinition only(std::string_view material) const;
};

/// Classifier class a threat material is routed through. Names outside the
/// model's classes map to Others and must carry a density range.
cls::MaterialClass routed_class(const MaterialRequirement& m);

using ClassOffsets = std::array<double, cls::kNumClasses>;
inline constexpr double kMaxOffset = 0.5;

/// p'_c = p_c + f_c, without renormalization.
cls::Probabilities adjust_probs(const cls::Probabilities& p, const ClassOffsets& offsets);
/// [lo * alpha, hi / alpha]; Domain error unless 0 < alpha <= 1.
DensityRange scale_rho_range(const DensityRange& r, double alpha);

/// Per-material alpha; missing materials use 1.
struct AlphaTable {
  std::map<std::string, double> alpha;
  double get(const std::string& material) const;
};

/// Per-material additive offsets; missing materials use 0.
struct OffsetAssignment {
  std::map<std::string, double> offset;
  double get(const std::string& material) const;
};

struct Detection {
  std::string bag_id;
  std::uint32_t label = 0;
  std::string material;
  double score = 0.0;  // adjusted value of the routed class
  ObjectStats stats;
};

ClassOffsets class_offsets(const ThreatDefinition& tdef, const OffsetAssignment& offsets);

/// Detections among classified objects of one bag, ascending by label.
std::vector<Detection> apply_ors(const std::string& bag_id, const std::vector<cls::ClassifiedObject>& objects,
                                 const ThreatDefinition& tdef, const OffsetAssignment& offsets,
                                 const AlphaTable& alphas);

/// Monotone piecewise-cubic (Fritsch-Carlson) map from target PD to offset.
struct OffsetCurve {
  std::vector<double> pd;      // strictly increasing knots
  std::vector<double> offset;  // non-decreasing
  bool flat = false;
  /// Raw sweep points used for the fit.
  std::vector<double> grid;
  std::vector<double> achieved;

  struct Query {
    double offset = 0.0;
    bool clamped_low = false;
    bool clamped_high = false;
  };
  Query query(double target_pd) const;
  double min_pd() const { return pd.front(); }
  double max_pd() const { return pd.back(); }
};

/// Builds the curve from sweep samples (offset grid ascending, achieved PD per point).
OffsetCurve fit_offset_curve(const std::vector<double>& grid, const std::vector<double>& achieved_pd);

struct OffsetTable {
  std::map<std::string, OffsetCurve> curves;
  /// Offsets for a requested PD per material.
  OffsetAssignment for_pd(double target_pd) const;
};

struct PdPfa {
  double pd = 0.0;
  double pfa = 0.0;
};
/// Runs detection plus evaluation on a fixed bag set.
using Evaluator = std::function<PdPfa(const ThreatDefinition&, const OffsetAssignment&, const AlphaTable&)>;

std::vector<double> default_offset_grid();
std::vector<double> default_alpha_grid();

/// Each material is calibrated as the sole threat, under the given alphas.
OffsetTable calibrate_offsets(const ThreatDefinition& tdef, const std::vector<double>& offset_grid,
                              const AlphaTable& alphas, const Evaluator& evaluator, unsigned threads = 1);

/// Per-alpha PD for one material, and the alpha chosen.
struct AlphaTrace {
  std::vector<double> alpha;
  std::vector<double> pd;
  double chosen = 1.0;
};
/// Descend the grid from its largest value; stop once PD no longer improves.
double choose_alpha(const std::vector<double>& grid_desc, const std::vector<double>& pd);
AlphaTable select_alpha(const ThreatDefinition& tdef, const std::vector<double>& alpha_grid,
                        const Evaluator& evaluator, std::map<std::string, AlphaTrace>* traces = nullptr,
                        unsigned threads = 1);

}  // namespace aatr::adapt
