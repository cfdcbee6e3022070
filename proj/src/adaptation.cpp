#include "aatr/adaptation.hpp"

#include <algorithm>
#include <cmath>

#include "aatr/parallel.hpp"

namespace aatr::adapt {

std::string_view to_string(MassFilterMode m) {
  switch (m) {
    case MassFilterMode::Detection: return "detection";
    case MassFilterMode::GroundTruth: return "ground_truth";
    case MassFilterMode::Both: return "both";
  }
  return "detection";
}

MassFilterMode mass_filter_mode_from_string(std::string_view s) {
  if (s == "detection") return MassFilterMode::Detection;
  if (s == "ground_truth") return MassFilterMode::GroundTruth;
  if (s == "both") return MassFilterMode::Both;
  fail(ErrorKind::Config, "mass_filter must be detection, ground_truth or both");
}

bool MaterialRequirement::physical_ok(double mass_g, double thickness) const {
  if (min_mass_g && mass_g < *min_mass_g) return false;
  if (mass_range_g && !mass_range_g->contains(mass_g)) return false;
  if (thickness_mm && !thickness_mm->contains(thickness)) return false;
  return true;
}

void ThreatDefinition::validate() const {
  if (materials.empty()) fail(ErrorKind::Config, "threat definition has no materials");
  if (!(required_pd > 0.0 && required_pd <= 1.0)) fail(ErrorKind::Config, "required_pd must lie in (0, 1]");
  for (std::size_t i = 0; i < materials.size(); ++i) {
    const auto& m = materials[i];
    if (m.material.empty()) fail(ErrorKind::Config, "threat material name is empty");
    for (std::size_t j = 0; j < i; ++j)
      if (materials[j].material == m.material) fail(ErrorKind::Config, "duplicate threat material " + m.material);
    auto check = [&](const std::optional<DensityRange>& r, const char* what) {
      if (r && !(r->lo <= r->hi)) fail(ErrorKind::Config, m.material + ": " + what + " must satisfy min <= max");
    };
    check(m.rho_mhu, "rho range");
    check(m.mass_range_g, "mass range");
    check(m.thickness_mm, "thickness range");
    if (m.min_mass_g && *m.min_mass_g < 0.0) fail(ErrorKind::Config, m.material + ": min_mass_g must be >= 0");
  }
}

const MaterialRequirement* ThreatDefinition::find(std::string_view material) const {
  for (const auto& m : materials)
    if (m.material == material) return &m;
  return nullptr;
}

ThreatDefinition ThreatDefinition::only(std::string_view material) const {
  const auto* m = find(material);
  if (!m) fail(ErrorKind::Config, "material " + std::string(material) + " is not in the threat definition");
  ThreatDefinition t = *this;
  t.materials = {*m};
  return t;
}

cls::MaterialClass routed_class(const MaterialRequirement& m) {
  cls::MaterialClass c{};
  if (cls::try_class_from_string(m.material, c)) return c;
  if (!m.rho_mhu)
    fail(ErrorKind::Config, "material " + m.material + " is unknown to the classifier and has no rho range");
  return cls::MaterialClass::Others;
}

cls::Probabilities adjust_probs(const cls::Probabilities& p, const ClassOffsets& offsets) {
  cls::Probabilities out{};
  for (std::size_t c = 0; c < cls::kNumClasses; ++c) out[c] = p[c] + offsets[c];
  return out;
}

DensityRange scale_rho_range(const DensityRange& r, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorKind::Domain, "alpha must lie in (0, 1]");
  return {r.lo * alpha, r.hi / alpha};
}

double AlphaTable::get(const std::string& material) const {
  auto it = alpha.find(material);
  return it == alpha.end() ? 1.0 : it->second;
}

double OffsetAssignment::get(const std::string& material) const {
  auto it = offset.find(material);
  return it == offset.end() ? 0.0 : it->second;
}

ClassOffsets class_offsets(const ThreatDefinition& tdef, const OffsetAssignment& offsets) {
  ClassOffsets out{};
  std::array<bool, cls::kNumClasses> set{};
  for (const auto& m : tdef.materials) {
    const auto c = static_cast<std::size_t>(routed_class(m));
    const double f = std::clamp(offsets.get(m.material), -kMaxOffset, kMaxOffset);
    if (!set[c]) out[c] = f, set[c] = true;
  }
  return out;
}

std::vector<Detection> apply_ors(const std::string& bag_id, const std::vector<cls::ClassifiedObject>& objects,
                                 const ThreatDefinition& tdef, const OffsetAssignment& offsets,
                                 const AlphaTable& alphas) {
  tdef.validate();
  const ClassOffsets f = class_offsets(tdef, offsets);
  const bool mass_here = tdef.mass_filter != MassFilterMode::GroundTruth;
  std::vector<Detection> out;
  for (const auto& obj : objects) {
    const auto adjusted = adjust_probs(obj.probs, f);
    const auto top = cls::argmax(adjusted);
    for (const auto& m : tdef.materials) {
      if (routed_class(m) != top) continue;
      if (m.rho_mhu && !scale_rho_range(*m.rho_mhu, alphas.get(m.material)).contains(obj.stats.density_mhu)) continue;
      if (mass_here && !m.physical_ok(obj.stats.mass_g, obj.stats.thickness_mm)) continue;
      out.push_back({bag_id, obj.stats.label, m.material, adjusted[static_cast<std::size_t>(top)], obj.stats});
      break;
    }
  }
  return out;
}

namespace {

/// Endpoint slope for shape-preserving cubic Hermite interpolation.
double end_slope(double h0, double h1, double d0, double d1) {
  const double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (s * d0 <= 0.0) return 0.0;
  if (d0 * d1 < 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
  return s;
}

std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    delta[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) continue;
    const double w1 = 2.0 * h[i] + h[i - 1];
    const double w2 = h[i] + 2.0 * h[i - 1];
    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
  }
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

double hermite(double x0, double x1, double y0, double y1, double d0, double d1, double x) {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1;
}

}  // namespace

OffsetCurve fit_offset_curve(const std::vector<double>& grid, const std::vector<double>& achieved_pd) {
  if (grid.empty() || grid.size() != achieved_pd.size())
    fail(ErrorKind::Contract, "fit_offset_curve: grid and PD samples must be non-empty and equal length");
  if (!std::is_sorted(grid.begin(), grid.end()) || std::adjacent_find(grid.begin(), grid.end()) != grid.end())
    fail(ErrorKind::Contract, "fit_offset_curve: offset grid must be strictly increasing");
  OffsetCurve c;
  c.grid = grid;
  c.achieved = achieved_pd;
  double running = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double pd = std::max(running, achieved_pd[i]);
    if (pd > running) {
      c.pd.push_back(pd);
      c.offset.push_back(grid[i]);
    }
    running = pd;
  }
  c.flat = c.pd.size() < 2;
  return c;
}

OffsetCurve::Query OffsetCurve::query(double target_pd) const {
  Query q;
  if (pd.empty()) fail(ErrorKind::Contract, "offset curve has no knots");
  if (target_pd <= pd.front()) {
    q.offset = offset.front();
    q.clamped_low = target_pd < pd.front();
    return q;
  }
  if (target_pd >= pd.back()) {
    q.offset = offset.back();
    q.clamped_high = target_pd > pd.back();
    return q;
  }
  const auto slopes = pchip_slopes(pd, offset);
  const auto hi = static_cast<std::size_t>(std::upper_bound(pd.begin(), pd.end(), target_pd) - pd.begin());
  const std::size_t lo = hi - 1;
  q.offset = std::clamp(hermite(pd[lo], pd[hi], offset[lo], offset[hi], slopes[lo], slopes[hi], target_pd),
                        offset[lo], offset[hi]);
  return q;
}

OffsetAssignment OffsetTable::for_pd(double target_pd) const {
  OffsetAssignment a;
  for (const auto& [m, c] : curves) a.offset[m] = c.query(target_pd).offset;
  return a;
}

std::vector<double> default_offset_grid() {
  std::vector<double> g;
  for (int i = -5; i <= 5; ++i) g.push_back(i / 10.0);
  return g;
}

std::vector<double> default_alpha_grid() { return {1.0, 0.9, 0.8, 0.7}; }

OffsetTable calibrate_offsets(const ThreatDefinition& tdef, const std::vector<double>& offset_grid,
                              const AlphaTable& alphas, const Evaluator& evaluator, unsigned threads) {
  tdef.validate();
  for (double o : offset_grid)
    if (!(std::abs(o) <= kMaxOffset)) fail(ErrorKind::Config, "offset grid values must lie in [-0.5, 0.5]");
  std::vector<double> grid = offset_grid;
  std::sort(grid.begin(), grid.end());
  OffsetTable table;
  for (const auto& m : tdef.materials) {
    const ThreatDefinition single = tdef.only(m.material);
    std::vector<double> pd(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
      OffsetAssignment a;
      a.offset[m.material] = grid[i];
      pd[i] = evaluator(single, a, alphas).pd;
    });
    table.curves[m.material] = fit_offset_curve(grid, pd);
  }
  return table;
}

double choose_alpha(const std::vector<double>& grid_desc, const std::vector<double>& pd) {
  if (grid_desc.empty() || grid_desc.size() != pd.size()) fail(ErrorKind::Contract, "choose_alpha: bad inputs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid_desc.size(); ++i) {
    if (!(pd[i] > pd[best])) break;
    best = i;
  }
  return grid_desc[best];
}

AlphaTable select_alpha(const ThreatDefinition& tdef, const std::vector<double>& alpha_grid,
                        const Evaluator& evaluator, std::map<std::string, AlphaTrace>* traces, unsigned threads) {
  tdef.validate();
  if (alpha_grid.empty()) fail(ErrorKind::Config, "alpha grid is empty");
  for (double a : alpha_grid)
    if (!(a > 0.0 && a <= 1.0)) fail(ErrorKind::Config, "alpha grid values must lie in (0, 1]");
  std::vector<double> grid = alpha_grid;
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  AlphaTable table;
  for (const auto& m : tdef.materials) {
    const ThreatDefinition single = tdef.only(m.material);
    std::vector<double> pd(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
      AlphaTable a;
      a.alpha[m.material] = grid[i];
      pd[i] = evaluator(single, OffsetAssignment{}, a).pd;
    });
    const double chosen = choose_alpha(grid, pd);
    table.alpha[m.material] = chosen;
    if (traces) (*traces)[m.material] = {grid, pd, chosen};
  }
  return table;
}

}  // namespace aatr::adapt
