#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aatr/evaluation.hpp"
#include "aatr/rng.hpp"
#include "aatr/volume.hpp"

namespace aatr::phantom {

struct MaterialSpec {
  std::string name;
  double mean_mhu = 1000.0;
  double std_mhu = 30.0;
  /// Standard deviation of the per-object mean around mean_mhu.
  double mean_jitter_mhu = 0.0;
  /// Whether the material corresponds to a classifier training class.
  bool is_known = true;
  /// Relative draw weight in the object mix; 0 keeps it out of random draws.
  double weight = 1.0;
  void validate() const;
};

enum class Shape { Box, Sphere, Cylinder, Sheet };
std::string_view to_string(Shape s);
Shape shape_from_string(std::string_view s);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double draw(Rng& rng) const { return hi > lo ? rng.uniform(lo, hi) : lo; }
  std::int64_t draw_int(Rng& rng) const;
  void validate(const char* what) const;
};

struct ShapeSizes {
  Range sphere_radius_mm{8.0, 18.0};
  Range box_edge_mm{14.0, 36.0};
  Range cylinder_radius_mm{6.0, 14.0};
  Range cylinder_length_mm{20.0, 50.0};
  Range sheet_thickness_mm{2.0, 6.0};
  Range sheet_edge_mm{30.0, 60.0};
};

/// Chains of spheres pushed into each other along the xy plane, optionally
/// with small cubes attached to the members.
struct ClusterSpec {
  Range count{1, 1};
  Range members{2, 3};
  Range radius_mm{20.0, 23.0};
  Range contact_depth_mm{8.0, 11.0};
  Range attachments{0, 0};
  Range attachment_edge_mm{15.0, 18.0};
  Range attachment_depth_mm{0.0, 1.0};
  /// Names drawn from for members; empty uses the global mix.
  std::vector<std::string> materials;
};

/// Default mix: three known materials plus two clutter bands.
std::vector<MaterialSpec> default_materials();

struct PhantomSpec {
  Dims dims{160, 160, 64};
  Spacing spacing{475.0f / 512.0f, 475.0f / 512.0f, 1.5f};
  double background_mhu = 0.0;
  double background_noise_mhu = 10.0;
  Range objects{4, 8};
  std::vector<Shape> shapes{Shape::Box, Shape::Sphere, Shape::Cylinder, Shape::Sheet};
  ShapeSizes sizes;
  double touch_probability = 0.3;
  Range contact_depth_mm{0.0, 2.0};
  bool distinct_touching_materials = false;
  std::vector<MaterialSpec> materials = default_materials();
  std::vector<ClusterSpec> clusters;
  double sheet_threshold_mm = 6.5;
  double margin_mm = 3.0;
  int max_retries = 200;
  void validate() const;
  const MaterialSpec& material(const std::string& name) const;
};


struct ObjectRecord {
  std::uint32_t label = 0;
  std::string material;
  Shape shape = Shape::Box;
  eval::Form form = eval::Form::Bulk;
  std::array<double, 3> centre_mm{};
  std::array<double, 3> half_extent_mm{};  // bounding half sizes
  double min_extent_mm = 0.0;
  double design_mean_mhu = 0.0;
  std::size_t voxel_count = 0;
  double density_mhu = 0.0;
  double mass_g = 0.0;
  double thickness_mm = 0.0;
  std::vector<std::uint32_t> contacts;
};

struct Manifest {
  std::uint64_t seed = 0;
  Dims dims;
  Spacing spacing{};
  std::vector<ObjectRecord> objects;
};

struct Bag {
  RawVolume raw;
  LabelVolume gt;
  Manifest manifest;
};

/// Placement error if an object cannot be placed after max_retries attempts.
Bag generate_bag(const PhantomSpec& spec, std::uint64_t seed);

/// Ground-truth objects in the form used by evaluation.
std::vector<eval::GroundTruthObject> ground_truth(const Manifest& m);

struct IndexEntry {
  std::string id;
  std::uint32_t serial = 0;
  std::uint64_t seed = 0;
  std::string raw_file;
  std::string gt_file;
  std::string manifest_file;
  bool odd() const { return serial % 2 == 1; }
};

struct DatasetIndex {
  std::uint64_t seed = 0;
  std::vector<IndexEntry> bags;
  std::vector<const IndexEntry*> split(bool odd) const;
};

std::string bag_id(std::uint32_t serial);
std::uint64_t bag_seed(std::uint64_t dataset_seed, std::uint32_t serial);

/// Writes bags 1..n to `dir` with index.json.
DatasetIndex generate_dataset(const PhantomSpec& spec, std::uint32_t n_bags, std::uint64_t seed,
                              const std::filesystem::path& dir, unsigned threads = 1);
DatasetIndex load_index(const std::filesystem::path& dir);

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);

}  // namespace aatr::phantom
