// aatr: phantom generation, segmentation, training, calibration, detection and evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aatr/bvox.hpp"
#include "aatr/config.hpp"
#include "aatr/error.hpp"
#include "aatr/parallel.hpp"
#include "aatr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace aatr;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Config: return 3;
    case ErrorKind::Io:
    case ErrorKind::Format: return 4;
    default: return 5;
  }
}

pipeline::PipelineConfig load_pipeline_config(const std::string& path) {
  if (path.empty()) return {};
  return pipeline_config_from_json(load_json(path));
}

fs::path segment_path(const fs::path& dir, const std::string& id) { return dir / (id + "_seg.bvox"); }

std::vector<LabelVolume> bag_segments(const std::vector<pipeline::LoadedBag>& bags, const std::string& segments_dir,
                                      const pipeline::PipelineConfig& cfg, unsigned threads) {
  if (segments_dir.empty()) return pipeline::segment_bags(bags, cfg, threads);
  std::vector<LabelVolume> out(bags.size());
  parallel_for(bags.size(), threads, [&](std::size_t i) {
    out[i] = read_labels(segment_path(segments_dir, bags[i].id));
    if (out[i].dims() != bags[i].raw.dims())
      fail(ErrorKind::Shape, "segments of " + bags[i].id + " do not match the bag dimensions");
  });
  return out;
}

/// Offsets for the definition's requested PD; clamped requests are reported on stderr.
adapt::OffsetAssignment offsets_for(const adapt::OffsetTable& table, const adapt::ThreatDefinition& tdef, double pd) {
  adapt::OffsetAssignment a;
  for (const auto& m : tdef.materials) {
    auto it = table.curves.find(m.material);
    if (it == table.curves.end()) {
      std::cerr << "warning: no offset curve for " << m.material << ", using 0\n";
      continue;
    }
    const auto q = it->second.query(pd);
    a.offset[m.material] = q.offset;
    if (q.clamped_high)
      std::fprintf(stderr, "note: %s: requested PD %.3f above the achievable %.3f, clamped\n", m.material.c_str(), pd,
                   it->second.max_pd());
    if (q.clamped_low)
      std::fprintf(stderr, "note: %s: requested PD %.3f below the achievable %.3f, clamped\n", m.material.c_str(), pd,
                   it->second.min_pd());
  }
  return a;
}

Json alpha_json(const pipeline::Calibration& c) {
  Json j = to_json(c.alphas);
  Json trace = Json::object();
  for (const auto& [m, t] : c.alpha_traces) trace[m] = {{"alpha", t.alpha}, {"pd", t.pd}, {"chosen", t.chosen}};
  j["trace"] = trace;
  return j;
}

struct Common {
  std::string dataset;
  std::string split = "all";
  std::string config;
  std::string segments;
  unsigned threads = 1;
};

void add_dataset(CLI::App* c, Common& o, bool segments) {
  c->add_option("--dataset", o.dataset, "Dataset directory")->required();
  c->add_option("--split", o.split, "odd, even or all")->check(CLI::IsMember({"odd", "even", "all"}));
  c->add_option("--config", o.config, "Pipeline configuration (JSON)");
  if (segments) c->add_option("--segments", o.segments, "Directory of precomputed segments");
  c->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 256u));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive automatic threat recognition on volumetric scans"};
  app.require_subcommand(1);

  // generate
  std::string g_spec, g_out;
  std::uint32_t g_bags = 0;
  std::uint64_t g_seed = 0;
  unsigned g_threads = 1;
  auto* gen = app.add_subcommand("generate", "Write a phantom dataset");
  gen->add_option("--spec", g_spec, "Phantom specification (JSON)")->required();
  gen->add_option("--out", g_out, "Output directory")->required();
  gen->add_option("--bags", g_bags, "Number of bags")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", g_seed, "Dataset seed")->required();
  gen->add_option("--threads", g_threads, "Worker threads")->check(CLI::Range(1u, 256u));

  // segment
  Common s_o;
  std::string s_raw, s_out;
  auto* segc = app.add_subcommand("segment", "Segment one volume or every bag of a dataset split");
  segc->add_option("--raw", s_raw, "Single raw volume (BVOX)");
  segc->add_option("--dataset", s_o.dataset, "Dataset directory");
  segc->add_option("--split", s_o.split, "odd, even or all")->check(CLI::IsMember({"odd", "even", "all"}));
  segc->add_option("--config", s_o.config, "Pipeline configuration (JSON)");
  segc->add_option("--threads", s_o.threads, "Worker threads")->check(CLI::Range(1u, 256u));
  segc->add_option("--out", s_out, "Output file (--raw) or directory (--dataset)")->required();

  // train
  Common t_o;
  std::string t_out;
  std::uint64_t t_seed = 0;
  auto* train = app.add_subcommand("train", "Train the material classifier on ground-truth objects");
  add_dataset(train, t_o, false);
  train->add_option("--seed", t_seed, "Training seed")->required();
  train->add_option("--out", t_out, "Model file (JSON)")->required();

  // calibrate
  Common c_o;
  std::string c_model, c_ors, c_offsets, c_alphas;
  auto* cal = app.add_subcommand("calibrate", "Measure offset curves and choose density-range scales");
  add_dataset(cal, c_o, true);
  cal->add_option("--model", c_model, "Model file")->required();
  cal->add_option("--ors", c_ors, "Object requirement specification (JSON)")->required();
  cal->add_option("--offsets-out", c_offsets, "Offset table output")->required();
  cal->add_option("--alphas-out", c_alphas, "Alpha table output")->required();

  // detect
  Common d_o;
  std::string d_model, d_ors, d_offsets, d_alphas, d_out;
  std::optional<double> d_pd;
  auto* det = app.add_subcommand("detect", "Apply the requirement specification to classified segments");
  add_dataset(det, d_o, true);
  det->add_option("--model", d_model, "Model file")->required();
  det->add_option("--ors", d_ors, "Object requirement specification (JSON)")->required();
  det->add_option("--offsets", d_offsets, "Offset table from calibrate");
  det->add_option("--alphas", d_alphas, "Alpha table from calibrate");
  det->add_option("--pd", d_pd, "Requested PD, overriding the specification's")->check(CLI::Range(0.0, 1.0));
  det->add_option("--out", d_out, "Detections (TSV)")->required();

  // evaluate
  Common e_o;
  std::string e_det, e_ors, e_out, e_tsv;
  auto* ev = app.add_subcommand("evaluate", "Score detections against ground truth");
  add_dataset(ev, e_o, true);
  ev->add_option("--detections", e_det, "Detections (TSV)")->required();
  ev->add_option("--ors", e_ors, "Object requirement specification (JSON)")->required();
  ev->add_option("--out", e_out, "Report (JSON)")->required();
  ev->add_option("--tsv", e_tsv, "Per-object table (TSV)");

  // sweep
  Common w_o;
  std::string w_model, w_ors, w_alphas, w_out;
  auto* sw = app.add_subcommand("sweep", "PD and PFA over the offset grid");
  add_dataset(sw, w_o, true);
  sw->add_option("--model", w_model, "Model file")->required();
  sw->add_option("--ors", w_ors, "Object requirement specification (JSON)")->required();
  sw->add_option("--alphas", w_alphas, "Alpha table from calibrate");
  sw->add_option("--out", w_out, "Sweep table (TSV)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const auto spec = phantom_spec_from_json(load_json(g_spec));
      const auto index = phantom::generate_dataset(spec, g_bags, g_seed, g_out, g_threads);
      std::cout << "wrote " << index.bags.size() << " bags to " << g_out << "\n";
    } else if (*segc) {
      const auto cfg = load_pipeline_config(s_o.config);
      if (s_raw.empty() == s_o.dataset.empty()) fail(ErrorKind::Usage, "segment needs exactly one of --raw or --dataset");
      if (!s_raw.empty()) {
        write_volume(seg::segment(read_raw(s_raw), cfg.segmentation, s_o.threads), s_out);
      } else {
        const auto bags = pipeline::load_split(s_o.dataset, s_o.split, s_o.threads);
        fs::create_directories(s_out);
        parallel_for(bags.size(), s_o.threads, [&](std::size_t i) {
          write_volume(seg::segment(bags[i].raw, cfg.segmentation), segment_path(s_out, bags[i].id));
        });
        std::cout << "segmented " << bags.size() << " bags\n";
      }
    } else if (*train) {
      const auto cfg = load_pipeline_config(t_o.config);
      const auto bags = pipeline::load_split(t_o.dataset, t_o.split, t_o.threads);
      cls::save_model(pipeline::train_model(bags, cfg, t_seed), t_out);
    } else if (*cal) {
      const auto cfg = load_pipeline_config(c_o.config);
      const auto tdef = threat_definition_from_json(load_json(c_ors));
      const auto model = cls::load_model(c_model);
      const auto bags = pipeline::load_split(c_o.dataset, c_o.split, c_o.threads);
      const auto prepared = pipeline::prepare(bags, bag_segments(bags, c_o.segments, cfg, c_o.threads), model, c_o.threads);
      const auto c = pipeline::calibrate(prepared, tdef, cfg, c_o.threads);
      write_text_file(c_offsets, to_json(c.offsets).dump(2) + "\n");
      write_text_file(c_alphas, alpha_json(c).dump(2) + "\n");
    } else if (*det) {
      const auto cfg = load_pipeline_config(d_o.config);
      const auto tdef = threat_definition_from_json(load_json(d_ors));
      const auto model = cls::load_model(d_model);
      adapt::OffsetAssignment offsets;
      if (!d_offsets.empty())
        offsets = offsets_for(offset_table_from_json(load_json(d_offsets)), tdef, d_pd.value_or(tdef.required_pd));
      else if (d_pd)
        fail(ErrorKind::Usage, "--pd needs --offsets");
      adapt::AlphaTable alphas;
      if (!d_alphas.empty()) alphas = alpha_table_from_json(load_json(d_alphas));
      const auto bags = pipeline::load_split(d_o.dataset, d_o.split, d_o.threads);
      const auto prepared = pipeline::prepare(bags, bag_segments(bags, d_o.segments, cfg, d_o.threads), model, d_o.threads);
      write_text_file(d_out, eval::detections_to_tsv(pipeline::detect(prepared, tdef, offsets, alphas)));
    } else if (*ev) {
      const auto cfg = load_pipeline_config(e_o.config);
      const auto tdef = threat_definition_from_json(load_json(e_ors));
      const auto detections = eval::detections_from_tsv(read_text_file(e_det));
      const auto bags = pipeline::load_split(e_o.dataset, e_o.split, e_o.threads);
      const auto segments = bag_segments(bags, e_o.segments, cfg, e_o.threads);
      std::vector<eval::BagTruth> truth(bags.size());
      parallel_for(bags.size(), e_o.threads, [&](std::size_t i) { truth[i] = pipeline::bag_truth(bags[i], segments[i]); });
      const auto report = eval::evaluate(detections, truth, tdef, cfg.evaluation);
      write_text_file(e_out, eval::report_to_json(report));
      if (!e_tsv.empty()) write_text_file(e_tsv, eval::report_to_tsv(report));
      std::printf("PD %.4f PFA %.4f\n", report.pd, report.pfa);
    } else if (*sw) {
      const auto cfg = load_pipeline_config(w_o.config);
      const auto tdef = threat_definition_from_json(load_json(w_ors));
      const auto model = cls::load_model(w_model);
      adapt::AlphaTable alphas;
      if (!w_alphas.empty()) alphas = alpha_table_from_json(load_json(w_alphas));
      const auto bags = pipeline::load_split(w_o.dataset, w_o.split, w_o.threads);
      const auto prepared = pipeline::prepare(bags, bag_segments(bags, w_o.segments, cfg, w_o.threads), model, w_o.threads);
      write_text_file(w_out, eval::sweep_to_tsv(
                                 pipeline::pd_pfa_sweep(prepared, tdef, cfg.offset_grid, alphas, cfg.evaluation, w_o.threads)));
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  }
  return 0;
}
