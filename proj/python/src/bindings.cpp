// Python bindings. Volumes cross the boundary as C-ordered numpy arrays of
// shape (nz, ny, nx) plus an (sx, sy, sz) spacing tuple in millimetres.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <tuple>

#include "aatr/bvox.hpp"
#include "aatr/classify.hpp"
#include "aatr/config.hpp"
#include "aatr/evaluation.hpp"
#include "aatr/morphology.hpp"
#include "aatr/phantom.hpp"
#include "aatr/segmentation.hpp"

namespace py = pybind11;
using namespace aatr;

namespace {

using SpacingTuple = std::tuple<float, float, float>;

template <class T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <class T>
Grid<T> to_grid(const Array<T>& a, const SpacingTuple& s) {
  if (a.ndim() != 3) throw Error(ErrorKind::Shape, "expected a 3-d array of shape (nz, ny, nx)");
  const Dims d{static_cast<std::uint32_t>(a.shape(2)), static_cast<std::uint32_t>(a.shape(1)),
               static_cast<std::uint32_t>(a.shape(0))};
  std::vector<T> v(a.data(), a.data() + a.size());
  return Grid<T>(d, {std::get<0>(s), std::get<1>(s), std::get<2>(s)}, std::move(v));
}

template <class T>
py::array_t<T> to_array(const Grid<T>& g) {
  const auto& d = g.dims();
  py::array_t<T> a({static_cast<py::ssize_t>(d.nz), static_cast<py::ssize_t>(d.ny), static_cast<py::ssize_t>(d.nx)});
  std::copy(g.voxels().begin(), g.voxels().end(), a.mutable_data());
  return a;
}

SpacingTuple spacing_of(const Spacing& s) { return {s[0], s[1], s[2]}; }

LabelVolume labels_in(const Array<std::uint32_t>& a) { return to_grid(a, {1.0f, 1.0f, 1.0f}); }

seg::SegmentationConfig seg_config(const std::string& json) {
  if (json.empty()) return {};
  return segmentation_config_from_json(parse_json(json, "segmentation config"));
}

py::dict stats_dict(const ObjectStats& s) {
  py::dict d;
  d["label"] = s.label;
  d["voxels"] = s.voxel_count;
  d["volume_mm3"] = s.volume_mm3;
  d["density_mhu"] = s.density_mhu;
  d["mass_g"] = s.mass_g;
  d["thickness_mm"] = s.thickness_mm;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Volumetric segmentation, material classification and threat detection";

  py::register_exception<Error>(m, "AatrError", PyExc_RuntimeError);

  m.def(
      "read_bvox",
      [](const std::string& path) -> py::tuple {
        auto v = read_volume(path);
        if (auto* r = std::get_if<RawVolume>(&v)) return py::make_tuple(to_array(*r), spacing_of(r->spacing()));
        const auto& l = std::get<LabelVolume>(v);
        return py::make_tuple(to_array(l), spacing_of(l.spacing()));
      },
      py::arg("path"), "Returns (array, spacing); dtype uint16 for raw volumes, uint32 for labels.");
  m.def(
      "write_bvox",
      [](const std::string& path, py::array a, const SpacingTuple& spacing) {
        if (a.dtype().is(py::dtype::of<std::uint32_t>()))
          write_volume(to_grid(a.cast<Array<std::uint32_t>>(), spacing), path);
        else
          write_volume(to_grid(a.cast<Array<std::uint16_t>>(), spacing), path);
      },
      py::arg("path"), py::arg("array"), py::arg("spacing"), "uint32 arrays are written as labels, all else as raw MHU.");

  m.def(
      "threshold",
      [](const Array<std::uint16_t>& raw, std::uint16_t lower, std::uint16_t upper) {
        IntensityWindow w{lower, upper};
        w.validate();
        return to_array(threshold_to_binary(to_grid(raw, {1.0f, 1.0f, 1.0f}), w));
      },
      py::arg("raw"), py::arg("lower") = 800, py::arg("upper") = 2200);
  m.def(
      "erode",
      [](const Array<std::uint32_t>& binary, int radius) {
        return to_array(morph::erode(labels_in(binary), morph::StructuringElement::sphere(radius)));
      },
      py::arg("binary"), py::arg("radius"));
  m.def(
      "dilate_constrained",
      [](const Array<std::uint32_t>& labels, int radius, const Array<std::uint32_t>& mask) {
        return to_array(
            morph::dilate_constrained(labels_in(labels), morph::StructuringElement::sphere(radius), labels_in(mask)));
      },
      py::arg("labels"), py::arg("radius"), py::arg("mask"));
  m.def(
      "ccl", [](const Array<std::uint32_t>& binary) { return to_array(morph::ccl(labels_in(binary))); },
      py::arg("binary"));
  m.def(
      "prune_small",
      [](const Array<std::uint32_t>& labels, std::size_t min_voxels) {
        return to_array(morph::prune_small(labels_in(labels), min_voxels));
      },
      py::arg("labels"), py::arg("min_voxels"));
  m.def(
      "opening_block",
      [](const Array<std::uint32_t>& labels, int k, std::size_t min_voxels, unsigned threads) {
        LabelVolume in = labels_in(labels), out;
        {
          py::gil_scoped_release nogil;
          out = morph::opening_block(in, {k, min_voxels}, threads);
        }
        return to_array(out);
      },
      py::arg("labels"), py::arg("k"), py::arg("min_voxels") = morph::kDeskScaleMinVoxels, py::arg("threads") = 1);

  m.def(
      "segment",
      [](const Array<std::uint16_t>& raw, const SpacingTuple& spacing, const std::string& config, unsigned threads) {
        const auto cfg = seg_config(config);
        const RawVolume in = to_grid(raw, spacing);
        LabelVolume out;
        {
          py::gil_scoped_release nogil;
          out = seg::segment(in, cfg, threads);
        }
        return to_array(out);
      },
      py::arg("raw"), py::arg("spacing"), py::arg("config") = "", py::arg("threads") = 1,
      "Full segmentation; `config` is a JSON segmentation section, empty for defaults.");

  m.def(
      "object_stats",
      [](const Array<std::uint16_t>& raw, const Array<std::uint32_t>& labels, const SpacingTuple& spacing) {
        py::list out;
        for (const auto& s : all_object_stats(to_grid(raw, spacing), to_grid(labels, spacing))) out.append(stats_dict(s));
        return out;
      },
      py::arg("raw"), py::arg("labels"), py::arg("spacing"));

  m.def(
      "match_counts",
      [](std::size_t gt_voxels, std::size_t seg_voxels, std::size_t overlap, const std::string& form) {
        const auto r = eval::match_counts(gt_voxels, seg_voxels, overlap, eval::form_from_string(form));
        return py::make_tuple(r.precision, r.recall, r.matched);
      },
      py::arg("gt_voxels"), py::arg("seg_voxels"), py::arg("overlap"), py::arg("form") = "bulk",
      "Returns (precision, recall, matched).");

  m.def(
      "generate_bag",
      [](const std::string& spec_json, std::uint64_t seed) {
        const auto spec = phantom_spec_from_json(parse_json(spec_json, "phantom spec"));
        phantom::Bag b;
        {
          py::gil_scoped_release nogil;
          b = phantom::generate_bag(spec, seed);
        }
        return py::make_tuple(to_array(b.raw), to_array(b.gt), phantom::manifest_to_json(b.manifest),
                              spacing_of(b.raw.spacing()));
      },
      py::arg("spec"), py::arg("seed"), "Returns (raw, gt, manifest_json, spacing).");

  py::class_<cls::MaterialModel>(m, "MaterialModel")
      .def_static("load", [](const std::string& path) { return cls::load_model(path); }, py::arg("path"))
      .def("save", [](const cls::MaterialModel& model, const std::string& path) { cls::save_model(model, path); },
           py::arg("path"))
      .def("to_json", [](const cls::MaterialModel& model) { return cls::model_to_json(model); })
      .def(
          "predict_proba",
          [](const cls::MaterialModel& model, const std::vector<double>& feature) {
            const auto p = cls::predict_proba(model, feature);
            return std::vector<double>(p.begin(), p.end());
          },
          py::arg("feature"))
      .def(
          "classify",
          [](const cls::MaterialModel& model, const Array<std::uint16_t>& raw, const Array<std::uint32_t>& labels,
             const SpacingTuple& spacing) {
            py::list out;
            for (const auto& o : cls::classify_objects(to_grid(raw, spacing), to_grid(labels, spacing), model)) {
              py::dict d = stats_dict(o.stats);
              d["probs"] = std::vector<double>(o.probs.begin(), o.probs.end());
              d["class"] = std::string(cls::to_string(cls::argmax(o.probs)));
              out.append(d);
            }
            return out;
          },
          py::arg("raw"), py::arg("labels"), py::arg("spacing"));

  m.attr("CLASSES") = [] {
    std::vector<std::string> names;
    for (auto c : cls::kAllClasses) names.emplace_back(cls::to_string(c));
    return names;
  }();
}
