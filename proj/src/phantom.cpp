#include "aatr/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <json.hpp>

#include "aatr/bvox.hpp"
#include "aatr/config.hpp"
#include "aatr/parallel.hpp"

namespace aatr::phantom {

void MaterialSpec::validate() const {
  if (name.empty()) fail(ErrorKind::Config, "material name is empty");
  if (!(mean_mhu >= 0.0 && mean_mhu <= kMaxMhu)) fail(ErrorKind::Config, name + ": mean_mhu outside [0, 32767]");
  if (!(std_mhu > 0.0)) fail(ErrorKind::Config, name + ": std_mhu must be positive");
  if (mean_jitter_mhu < 0.0) fail(ErrorKind::Config, name + ": mean_jitter_mhu must be >= 0");
  if (weight < 0.0) fail(ErrorKind::Config, name + ": weight must be >= 0");
}

std::string_view to_string(Shape s) {
  switch (s) {
    case Shape::Box: return "box";
    case Shape::Sphere: return "sphere";
    case Shape::Cylinder: return "cylinder";
    case Shape::Sheet: return "sheet";
  }
  return "box";
}

Shape shape_from_string(std::string_view s) {
  if (s == "box") return Shape::Box;
  if (s == "sphere") return Shape::Sphere;
  if (s == "cylinder") return Shape::Cylinder;
  if (s == "sheet") return Shape::Sheet;
  fail(ErrorKind::Config, "unknown shape '" + std::string(s) + "'");
}

std::int64_t Range::draw_int(Rng& rng) const {
  const auto a = static_cast<std::int64_t>(std::llround(lo));
  const auto b = static_cast<std::int64_t>(std::llround(hi));
  return b > a ? rng.uniform_int(a, b) : a;
}

void Range::validate(const char* what) const {
  if (!(lo <= hi) || lo < 0.0) fail(ErrorKind::Config, std::string(what) + ": range must satisfy 0 <= lo <= hi");
}

void PhantomSpec::validate() const {
  if (dims.count() == 0) fail(ErrorKind::Config, "phantom dims must be positive");
  for (float s : spacing)
    if (!(s > 0.0f)) fail(ErrorKind::Config, "phantom spacing must be positive");
  if (materials.empty()) fail(ErrorKind::Config, "phantom material mix is empty");
  std::set<std::string> names;
  double total_weight = 0.0;
  for (const auto& m : materials) {
    m.validate();
    if (!names.insert(m.name).second) fail(ErrorKind::Config, "duplicate phantom material " + m.name);
    total_weight += m.weight;
  }
  objects.validate("objects");
  if (objects.hi > 0 && shapes.empty()) fail(ErrorKind::Config, "phantom shape set is empty");
  if ((objects.hi > 0 || !clusters.empty()) && !(total_weight > 0.0))
    fail(ErrorKind::Config, "phantom material weights sum to zero");
  sizes.sphere_radius_mm.validate("sphere_radius_mm");
  sizes.box_edge_mm.validate("box_edge_mm");
  sizes.cylinder_radius_mm.validate("cylinder_radius_mm");
  sizes.cylinder_length_mm.validate("cylinder_length_mm");
  sizes.sheet_thickness_mm.validate("sheet_thickness_mm");
  sizes.sheet_edge_mm.validate("sheet_edge_mm");
  contact_depth_mm.validate("contact_depth_mm");
  if (!(touch_probability >= 0.0 && touch_probability <= 1.0))
    fail(ErrorKind::Config, "touch_probability must lie in [0, 1]");
  if (background_noise_mhu < 0.0) fail(ErrorKind::Config, "background_noise_mhu must be >= 0");
  if (max_retries < 1) fail(ErrorKind::Config, "max_retries must be >= 1");
  for (const auto& c : clusters) {
    c.count.validate("cluster count");
    c.members.validate("cluster members");
    c.radius_mm.validate("cluster radius_mm");
    c.contact_depth_mm.validate("cluster contact_depth_mm");
    c.attachments.validate("cluster attachments");
    c.attachment_edge_mm.validate("cluster attachment_edge_mm");
    c.attachment_depth_mm.validate("cluster attachment_depth_mm");
    for (const auto& n : c.materials) material(n);
  }
}

const MaterialSpec& PhantomSpec::material(const std::string& name) const {
  for (const auto& m : materials)
    if (m.name == name) return m;
  fail(ErrorKind::Config, "unknown phantom material " + name);
}

std::vector<MaterialSpec> default_materials() {
  return {{"saline", 1130.0, 30.0, 30.0, true, 1.0},   {"rubber", 1230.0, 30.0, 15.0, true, 1.0},
          {"clay", 1620.0, 40.0, 20.0, true, 1.0},     {"plastic", 920.0, 30.0, 20.0, false, 1.0},
          {"dense", 1950.0, 50.0, 30.0, false, 1.0}};
}

namespace {

using Vec3 = std::array<double, 3>;

struct Solid {
  Shape shape = Shape::Box;
  Vec3 centre{};
  Vec3 half{};    // box/sheet half sizes; bounding half sizes otherwise
  double radius = 0.0;
  int axis = 2;   // cylinder axis
  double min_extent = 0.0;

  bool contains(const Vec3& p) const {
    switch (shape) {
      case Shape::Sphere: {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) d2 += (p[a] - centre[a]) * (p[a] - centre[a]);
        return d2 <= radius * radius;
      }
      case Shape::Cylinder: {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a)
          if (a != axis) d2 += (p[a] - centre[a]) * (p[a] - centre[a]);
        return d2 <= radius * radius && std::abs(p[axis] - centre[axis]) <= half[axis];
      }
      case Shape::Box:
      case Shape::Sheet:
        for (int a = 0; a < 3; ++a)
          if (std::abs(p[a] - centre[a]) > half[a]) return false;
        return true;
    }
    return false;
  }
};

class Canvas {
 public:
  explicit Canvas(const PhantomSpec& spec) : spec_(spec), labels_(spec.dims, spec.spacing, 0) {
    for (int a = 0; a < 3; ++a) s_[a] = spec.spacing[static_cast<std::size_t>(a)];
    n_ = {spec.dims.nx, spec.dims.ny, spec.dims.nz};
  }

  /// Voxel indices covered by the solid; false if it leaves the grid or enters the margin.
  /// With `clip`, out-of-bounds parts are dropped instead.
  bool raster(const Solid& solid, std::vector<std::size_t>& out, bool clip = false) const {
    out.clear();
    std::array<std::int64_t, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<std::int64_t>(std::floor((solid.centre[a] - solid.half[a]) / s_[a] - 0.5));
      hi[a] = static_cast<std::int64_t>(std::ceil((solid.centre[a] + solid.half[a]) / s_[a] - 0.5));
      if (clip) {
        lo[a] = std::max<std::int64_t>(lo[a], 0);
        hi[a] = std::min<std::int64_t>(hi[a], static_cast<std::int64_t>(n_[a]) - 1);
      } else if (lo[a] < 0 || hi[a] >= static_cast<std::int64_t>(n_[a])) {
        return false;
      }
    }
    for (std::int64_t z = lo[2]; z <= hi[2]; ++z)
      for (std::int64_t y = lo[1]; y <= hi[1]; ++y)
        for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
          const Vec3 p{(x + 0.5) * s_[0], (y + 0.5) * s_[1], (z + 0.5) * s_[2]};
          if (!solid.contains(p)) continue;
          if (!clip && !inside_margin(p)) return false;
          out.push_back(labels_.index(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                                      static_cast<std::uint32_t>(z)));
        }
    return !out.empty();
  }

  /// Labels already present at or 26-adjacent to the given voxels.
  std::set<std::uint32_t> neighbours(const std::vector<std::size_t>& voxels) const {
    std::set<std::uint32_t> out;
    const Dims& d = labels_.dims();
    for (std::size_t i : voxels) {
      const auto x = static_cast<std::int64_t>(i % d.nx);
      const auto y = static_cast<std::int64_t>((i / d.nx) % d.ny);
      const auto z = static_cast<std::int64_t>(i / (static_cast<std::size_t>(d.nx) * d.ny));
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (!d.contains(x + dx, y + dy, z + dz)) continue;
            const auto l = labels_.at(static_cast<std::uint32_t>(x + dx), static_cast<std::uint32_t>(y + dy),
                                      static_cast<std::uint32_t>(z + dz));
            if (l) out.insert(l);
          }
    }
    return out;
  }

  bool touches(const std::vector<std::size_t>& voxels, std::uint32_t label) const {
    const Dims& d = labels_.dims();
    for (std::size_t i : voxels) {
      if (labels_[i] == label) return true;
      const auto x = static_cast<std::int64_t>(i % d.nx);
      const auto y = static_cast<std::int64_t>((i / d.nx) % d.ny);
      const auto z = static_cast<std::int64_t>(i / (static_cast<std::size_t>(d.nx) * d.ny));
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            if (d.contains(x + dx, y + dy, z + dz) &&
                labels_.at(static_cast<std::uint32_t>(x + dx), static_cast<std::uint32_t>(y + dy),
                           static_cast<std::uint32_t>(z + dz)) == label)
              return true;
    }
    return false;
  }

  /// Paints unlabelled voxels only; returns how many were painted.
  std::size_t paint(const std::vector<std::size_t>& voxels, std::uint32_t label) {
    std::size_t n = 0;
    for (std::size_t i : voxels)
      if (!labels_[i]) labels_[i] = label, ++n;
    return n;
  }

  Vec3 extent_mm() const { return {n_[0] * s_[0], n_[1] * s_[1], n_[2] * s_[2]}; }
  double max_spacing() const { return std::max({s_[0], s_[1], s_[2]}); }
  LabelVolume& labels() { return labels_; }

 private:
  bool inside_margin(const Vec3& p) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < spec_.margin_mm || p[a] > n_[a] * s_[a] - spec_.margin_mm) return false;
    return true;
  }

  const PhantomSpec& spec_;
  LabelVolume labels_;
  Vec3 s_{};
  std::array<std::uint32_t, 3> n_{};
};

struct Planned {
  Solid solid;
  std::string material;
};

class Builder {
 public:
  Builder(const PhantomSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed), canvas_(spec) {}

  std::string draw_material(const std::vector<std::string>& subset, const std::string& avoid = {}) {
    std::vector<const MaterialSpec*> pool;
    if (subset.empty()) {
      for (const auto& m : spec_.materials)
        if (m.weight > 0.0) pool.push_back(&m);
    } else {
      for (const auto& n : subset) pool.push_back(&spec_.material(n));
    }
    if (!avoid.empty() && pool.size() > 1) std::erase_if(pool, [&](const MaterialSpec* m) { return m->name == avoid; });
    double total = 0.0;
    for (auto* m : pool) total += subset.empty() ? m->weight : 1.0;
    double u = rng_.uniform(0.0, total);
    for (auto* m : pool) {
      const double w = subset.empty() ? m->weight : 1.0;
      if (u < w) return m->name;
      u -= w;
    }
    return pool.back()->name;
  }

  Solid random_solid(Shape shape) {
    Solid s;
    s.shape = shape;
    const auto& z = spec_.sizes;
    switch (shape) {
      case Shape::Sphere:
        s.radius = z.sphere_radius_mm.draw(rng_);
        s.half = {s.radius, s.radius, s.radius};
        s.min_extent = 2.0 * s.radius;
        break;
      case Shape::Box:
        for (auto& h : s.half) h = 0.5 * z.box_edge_mm.draw(rng_);
        s.min_extent = 2.0 * *std::min_element(s.half.begin(), s.half.end());
        break;
      case Shape::Cylinder: {
        s.axis = static_cast<int>(rng_.uniform_int(0, 2));
        s.radius = z.cylinder_radius_mm.draw(rng_);
        const double len = z.cylinder_length_mm.draw(rng_);
        s.half = {s.radius, s.radius, s.radius};
        s.half[static_cast<std::size_t>(s.axis)] = 0.5 * len;
        s.min_extent = std::min(2.0 * s.radius, len);
        break;
      }
      case Shape::Sheet: {
        const int thin = static_cast<int>(rng_.uniform_int(0, 2));
        for (int a = 0; a < 3; ++a) s.half[static_cast<std::size_t>(a)] = 0.5 * z.sheet_edge_mm.draw(rng_);
        const double t = z.sheet_thickness_mm.draw(rng_);
        s.half[static_cast<std::size_t>(thin)] = 0.5 * t;
        s.min_extent = t;
        break;
      }
    }
    return s;
  }

  Solid sphere(double r) {
    Solid s;
    s.shape = Shape::Sphere;
    s.radius = r;
    s.half = {r, r, r};
    s.min_extent = 2.0 * r;
    return s;
  }

  Solid cube(double edge) {
    Solid s;
    s.shape = Shape::Box;
    s.half = {0.5 * edge, 0.5 * edge, 0.5 * edge};
    s.min_extent = edge;
    return s;
  }

  /// Free placement: no contact with any existing object.
  bool place_free(Solid s, const std::string& material) {
    const Vec3 ext = canvas_.extent_mm();
    for (int attempt = 0; attempt < spec_.max_retries; ++attempt) {
      for (int a = 0; a < 3; ++a) {
        const double lo = spec_.margin_mm + s.half[static_cast<std::size_t>(a)];
        const double hi = ext[static_cast<std::size_t>(a)] - spec_.margin_mm - s.half[static_cast<std::size_t>(a)];
        if (hi < lo) return false;
        s.centre[static_cast<std::size_t>(a)] = rng_.uniform(lo, hi);
      }
      if (!canvas_.raster(s, scratch_)) continue;
      if (!canvas_.neighbours(scratch_).empty()) continue;
      commit(s, material);
      return true;
    }
    return false;
  }

  /// Approach `host` along a random xy direction until first voxel contact, then push in by `depth`.
  bool place_touching(Solid s, const std::string& material, std::uint32_t host, double depth) {
    const Solid& h = placed_[host - 1].solid;
    const double far = std::hypot(h.half[0], h.half[1], h.half[2]) + std::hypot(s.half[0], s.half[1], s.half[2]) +
                       2.0 * canvas_.max_spacing();
    for (int attempt = 0; attempt < spec_.max_retries; ++attempt) {
      const double theta = rng_.uniform(0.0, 2.0 * std::numbers::pi);
      const Vec3 dir{std::cos(theta), std::sin(theta), 0.0};
      const double dz = rng_.uniform(-0.25, 0.25) * std::min(h.half[2], s.half[2]);
      auto at = [&](double t) {
        Solid c = s;
        for (int a = 0; a < 3; ++a) c.centre[static_cast<std::size_t>(a)] = h.centre[static_cast<std::size_t>(a)] + dir[static_cast<std::size_t>(a)] * t;
        c.centre[2] += dz;
        return c;
      };
      auto near = [&](double t) {
        Solid c = at(t);
        std::vector<std::size_t> v;
        canvas_.raster(c, v, true);
        return canvas_.touches(v, host);
      };
      double lo = 0.0, hi = far;
      // Invariant: near(lo) holds (centres coincide), near(hi) does not.
      if (near(hi) || !near(lo)) continue;
      for (int it = 0; it < 40 && hi - lo > 1e-3; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (near(mid))
          lo = mid;
        else
          hi = mid;
      }
      Solid c = at(std::max(0.0, lo - depth));
      if (!canvas_.raster(c, scratch_)) continue;
      const auto nb = canvas_.neighbours(scratch_);
      if (nb.size() != 1 || *nb.begin() != host) continue;
      std::size_t own = 0;
      for (std::size_t i : scratch_) own += canvas_.labels()[i] == 0;
      if (own * 2 < scratch_.size()) continue;
      commit(c, material);
      return true;
    }
    return false;
  }

  void place_or_fail(bool ok, const Solid& s, const std::string& what) {
    if (ok) return;
    fail(ErrorKind::Placement, "could not place " + what + " (" + std::string(to_string(s.shape)) + ", bounding half sizes " +
                                   std::to_string(s.half[0]) + "/" + std::to_string(s.half[1]) + "/" +
                                   std::to_string(s.half[2]) + " mm) after " + std::to_string(spec_.max_retries) +
                                   " attempts in a " + std::to_string(spec_.dims.nx) + "x" + std::to_string(spec_.dims.ny) +
                                   "x" + std::to_string(spec_.dims.nz) + " volume");
  }

  /// One cluster with its attachments; false leaves partial state for the caller to roll back.
  bool try_cluster(const ClusterSpec& cs) {
    const auto members = std::max<std::int64_t>(1, cs.members.draw_int(rng_));
    std::vector<std::uint32_t> ids;
    for (std::int64_t m = 0; m < members; ++m) {
      Solid s = sphere(cs.radius_mm.draw(rng_));
      const std::string mat = draw_material(cs.materials);
      if (ids.empty()) {
        if (!place_free(s, mat)) return false;
      } else {
        const auto host = ids[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(ids.size()) - 1))];
        if (!place_touching(s, mat, host, cs.contact_depth_mm.draw(rng_))) return false;
      }
      ids.push_back(static_cast<std::uint32_t>(placed_.size()));
    }
    const auto n_att = cs.attachments.draw_int(rng_);
    for (std::int64_t a = 0; a < n_att; ++a) {
      Solid s = cube(cs.attachment_edge_mm.draw(rng_));
      const auto host = ids[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(ids.size()) - 1))];
      if (!place_touching(s, draw_material({}), host, cs.attachment_depth_mm.draw(rng_))) return false;
    }
    return true;
  }

  void build() {
    constexpr int kClusterAttempts = 20;
    for (const auto& cs : spec_.clusters) {
      const auto n_clusters = cs.count.draw_int(rng_);
      for (std::int64_t k = 0; k < n_clusters; ++k) {
        const LabelVolume snapshot = canvas_.labels();
        const std::size_t n_placed = placed_.size();
        bool ok = false;
        for (int attempt = 0; attempt < kClusterAttempts && !ok; ++attempt) {
          ok = try_cluster(cs);
          if (!ok) {
            canvas_.labels() = snapshot;
            placed_.resize(n_placed);
          }
        }
        if (!ok)
          fail(ErrorKind::Placement, "could not place a cluster of radius " + std::to_string(cs.radius_mm.lo) + "-" +
                                         std::to_string(cs.radius_mm.hi) + " mm spheres after " +
                                         std::to_string(kClusterAttempts) + " attempts in a " +
                                         std::to_string(spec_.dims.nx) + "x" + std::to_string(spec_.dims.ny) + "x" +
                                         std::to_string(spec_.dims.nz) + " volume");
      }
    }
    const auto n_objects = spec_.objects.draw_int(rng_);
    for (std::int64_t k = 0; k < n_objects; ++k) {
      const Shape shape = spec_.shapes[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(spec_.shapes.size()) - 1))];
      Solid s = random_solid(shape);
      const bool touch = !placed_.empty() && rng_.uniform() < spec_.touch_probability;
      if (touch) {
        constexpr int kHostAttempts = 8;
        bool ok = false;
        for (int attempt = 0; attempt < kHostAttempts && !ok; ++attempt) {
          if (attempt > 0) s = random_solid(shape);
          const auto host = static_cast<std::uint32_t>(rng_.uniform_int(1, static_cast<std::int64_t>(placed_.size())));
          const std::string avoid = spec_.distinct_touching_materials ? placed_[host - 1].material : std::string{};
          const std::string mat = draw_material({}, avoid);
          ok = place_touching(s, mat, host, spec_.contact_depth_mm.draw(rng_));
        }
        if (!ok) ok = place_free(s, draw_material({}));
        place_or_fail(ok, s, "object");
      } else {
        place_or_fail(place_free(s, draw_material({})), s, "object");
      }
    }
  }

  Bag finish(std::uint64_t seed) {
    Bag bag;
    bag.gt = canvas_.labels();
    bag.raw = RawVolume(spec_.dims, spec_.spacing, 0);
    for (std::size_t i = 0; i < bag.raw.size(); ++i) bag.raw[i] = sample(spec_.background_mhu, spec_.background_noise_mhu);
    std::vector<double> means(placed_.size());
    for (std::size_t k = 0; k < placed_.size(); ++k) {
      const auto& m = spec_.material(placed_[k].material);
      means[k] = m.mean_mhu + (m.mean_jitter_mhu > 0.0 ? rng_.normal(0.0, m.mean_jitter_mhu) : 0.0);
    }
    for (std::size_t i = 0; i < bag.gt.size(); ++i)
      if (auto l = bag.gt[i]) bag.raw[i] = sample(means[l - 1], spec_.material(placed_[l - 1].material).std_mhu);

    bag.manifest.seed = seed;
    bag.manifest.dims = spec_.dims;
    bag.manifest.spacing = spec_.spacing;
    const auto boxes = label_boxes(bag.gt);
    const auto contacts = adjacency(bag.gt);
    for (std::size_t k = 0; k < placed_.size(); ++k) {
      const auto label = static_cast<std::uint32_t>(k + 1);
      const auto& p = placed_[k];
      ObjectRecord r;
      r.label = label;
      r.material = p.material;
      r.shape = p.solid.shape;
      r.min_extent_mm = p.solid.min_extent;
      r.form = p.solid.min_extent <= spec_.sheet_threshold_mm ? eval::Form::Sheet : eval::Form::Bulk;
      r.centre_mm = p.solid.centre;
      r.half_extent_mm = p.solid.half;
      r.design_mean_mhu = means[k];
      const auto st = object_stats(bag.raw, bag.gt, label);
      r.voxel_count = st.voxel_count;
      r.density_mhu = st.density_mhu;
      r.mass_g = st.mass_g;
      r.thickness_mm = object_thickness_mm(bag.gt, label, boxes[label]);
      r.contacts = contacts[label];
      bag.manifest.objects.push_back(std::move(r));
    }
    return bag;
  }

 private:
  std::uint16_t sample(double mean, double sd) {
    const double v = sd > 0.0 ? rng_.normal(mean, sd) : mean;
    return static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, static_cast<double>(kMaxMhu)));
  }

  void commit(const Solid& s, const std::string& material) {
    const auto label = static_cast<std::uint32_t>(placed_.size() + 1);
    placed_.push_back({s, material});
    canvas_.paint(scratch_, label);
  }

  static std::vector<std::vector<std::uint32_t>> adjacency(const LabelVolume& gt) {
    const std::uint32_t n = max_label(gt);
    std::vector<std::set<std::uint32_t>> adj(n + 1);
    const Dims& d = gt.dims();
    for (std::uint32_t z = 0; z < d.nz; ++z)
      for (std::uint32_t y = 0; y < d.ny; ++y)
        for (std::uint32_t x = 0; x < d.nx; ++x) {
          const auto a = gt.at(x, y, z);
          if (!a) continue;
          for (int dz = 0; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                if (dz == 0 && (dy < 0 || (dy == 0 && dx <= 0))) continue;
                const std::int64_t xx = x + dx, yy = y + dy, zz = z + dz;
                if (!d.contains(xx, yy, zz)) continue;
                const auto b = gt.at(static_cast<std::uint32_t>(xx), static_cast<std::uint32_t>(yy), static_cast<std::uint32_t>(zz));
                if (b && b != a) adj[a].insert(b), adj[b].insert(a);
              }
        }
    std::vector<std::vector<std::uint32_t>> out(n + 1);
    for (std::uint32_t l = 1; l <= n; ++l) out[l].assign(adj[l].begin(), adj[l].end());
    return out;
  }

  const PhantomSpec& spec_;
  Rng rng_;
  Canvas canvas_;
  std::vector<Planned> placed_;
  std::vector<std::size_t> scratch_;
};

}  // namespace

Bag generate_bag(const PhantomSpec& spec, std::uint64_t seed) {
  spec.validate();
  Builder b(spec, seed);
  b.build();
  return b.finish(seed);
}

std::vector<eval::GroundTruthObject> ground_truth(const Manifest& m) {
  std::vector<eval::GroundTruthObject> out;
  for (const auto& o : m.objects) out.push_back({o.label, o.material, o.form, o.mass_g, o.density_mhu, o.thickness_mm});
  return out;
}

std::vector<const IndexEntry*> DatasetIndex::split(bool odd) const {
  std::vector<const IndexEntry*> out;
  for (const auto& e : bags)
    if (e.odd() == odd) out.push_back(&e);
  return out;
}

std::string bag_id(std::uint32_t serial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "bag_%04u", serial);
  return buf;
}

std::uint64_t bag_seed(std::uint64_t dataset_seed, std::uint32_t serial) { return derive_seed(dataset_seed, serial); }

namespace {

nlohmann::ordered_json index_to_json(const DatasetIndex& idx) {
  nlohmann::ordered_json j;
  j["schema"] = "aatr.dataset_index/1";
  j["seed"] = idx.seed;
  j["bags"] = nlohmann::ordered_json::array();
  std::vector<std::string> odd, even;
  for (const auto& e : idx.bags) {
    j["bags"].push_back({{"id", e.id},
                         {"serial", e.serial},
                         {"seed", e.seed},
                         {"raw", e.raw_file},
                         {"gt", e.gt_file},
                         {"manifest", e.manifest_file},
                         {"split", e.odd() ? "odd" : "even"}});
    (e.odd() ? odd : even).push_back(e.id);
  }
  j["odd"] = odd;
  j["even"] = even;
  return j;
}

}  // namespace

DatasetIndex generate_dataset(const PhantomSpec& spec, std::uint32_t n_bags, std::uint64_t seed,
                              const std::filesystem::path& dir, unsigned threads) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
  DatasetIndex idx;
  idx.seed = seed;
  for (std::uint32_t s = 1; s <= n_bags; ++s) {
    const std::string id = bag_id(s);
    idx.bags.push_back({id, s, bag_seed(seed, s), id + "_raw.bvox", id + "_gt.bvox", id + ".json"});
  }
  parallel_for(idx.bags.size(), threads, [&](std::size_t i) {
    const auto& e = idx.bags[i];
    const Bag bag = generate_bag(spec, e.seed);
    write_volume(bag.raw, dir / e.raw_file);
    write_volume(bag.gt, dir / e.gt_file);
    write_text_file(dir / e.manifest_file, manifest_to_json(bag.manifest));
  });
  write_text_file(dir / "index.json", index_to_json(idx).dump(1) + "\n");
  return idx;
}

DatasetIndex load_index(const std::filesystem::path& dir) {
  const auto j = load_json(dir / "index.json");
  DatasetIndex idx;
  try {
    idx.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& b : j.at("bags"))
      idx.bags.push_back({b.at("id").get<std::string>(), b.at("serial").get<std::uint32_t>(),
                          b.at("seed").get<std::uint64_t>(), b.at("raw").get<std::string>(),
                          b.at("gt").get<std::string>(), b.at("manifest").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, "dataset index: " + std::string(e.what()));
  }
  return idx;
}

std::string manifest_to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["schema"] = "aatr.bag_manifest/1";
  j["seed"] = m.seed;
  j["dims"] = {m.dims.nx, m.dims.ny, m.dims.nz};
  j["spacing_mm"] = {m.spacing[0], m.spacing[1], m.spacing[2]};
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : m.objects)
    j["objects"].push_back({{"label", o.label},
                            {"material", o.material},
                            {"shape", to_string(o.shape)},
                            {"form", eval::to_string(o.form)},
                            {"centre_mm", o.centre_mm},
                            {"half_extent_mm", o.half_extent_mm},
                            {"min_extent_mm", o.min_extent_mm},
                            {"design_mean_mhu", o.design_mean_mhu},
                            {"voxel_count", o.voxel_count},
                            {"density_mhu", o.density_mhu},
                            {"mass_g", o.mass_g},
                            {"thickness_mm", o.thickness_mm},
                            {"contacts", o.contacts}});
  return j.dump(1) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  const auto j = parse_json(text, "bag manifest");
  Manifest m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto d = j.at("dims").get<std::array<std::uint32_t, 3>>();
    m.dims = {d[0], d[1], d[2]};
    m.spacing = j.at("spacing_mm").get<Spacing>();
    for (const auto& o : j.at("objects")) {
      ObjectRecord r;
      r.label = o.at("label").get<std::uint32_t>();
      r.material = o.at("material").get<std::string>();
      r.shape = shape_from_string(o.at("shape").get<std::string>());
      r.form = eval::form_from_string(o.at("form").get<std::string>());
      r.centre_mm = o.at("centre_mm").get<std::array<double, 3>>();
      r.half_extent_mm = o.at("half_extent_mm").get<std::array<double, 3>>();
      r.min_extent_mm = o.at("min_extent_mm").get<double>();
      r.design_mean_mhu = o.at("design_mean_mhu").get<double>();
      r.voxel_count = o.at("voxel_count").get<std::size_t>();
      r.density_mhu = o.at("density_mhu").get<double>();
      r.mass_g = o.at("mass_g").get<double>();
      r.thickness_mm = o.at("thickness_mm").get<double>();
      r.contacts = o.at("contacts").get<std::vector<std::uint32_t>>();
      m.objects.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, "bag manifest: " + std::string(e.what()));
  }
  return m;
}

}  // namespace aatr::phantom
