#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "aatr/adaptation.hpp"
#include "aatr/classify.hpp"
#include "aatr/evaluation.hpp"
#include "aatr/phantom.hpp"
#include "aatr/pipeline.hpp"
#include "aatr/segmentation.hpp"

namespace aatr {

using Json = nlohmann::json;

/// Io error if the file cannot be read.
std::string read_text_file(const std::filesystem::path& path);
/// Creates parent directories; Io error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
/// Config error on malformed JSON; `what` names the document in the message.
Json parse_json(const std::string& text, const std::string& what);
Json load_json(const std::filesystem::path& path);

// Each from_json accepts a partial object: missing keys keep their defaults,
// unknown keys are a Config error.
seg::SegmentationConfig segmentation_config_from_json(const Json& j);
Json to_json(const seg::SegmentationConfig& c);

cls::FeatureConfig feature_config_from_json(const Json& j);
Json to_json(const cls::FeatureConfig& c);
cls::TrainParams train_params_from_json(const Json& j);
Json to_json(const cls::TrainParams& p);
cls::SynthSpec synth_spec_from_json(const Json& j);
Json to_json(const cls::SynthSpec& s);

adapt::ThreatDefinition threat_definition_from_json(const Json& j);
Json to_json(const adapt::ThreatDefinition& t);
adapt::OffsetTable offset_table_from_json(const Json& j);
Json to_json(const adapt::OffsetTable& t);
adapt::AlphaTable alpha_table_from_json(const Json& j);
Json to_json(const adapt::AlphaTable& t);

phantom::PhantomSpec phantom_spec_from_json(const Json& j);
Json to_json(const phantom::PhantomSpec& s);

eval::EvalOptions eval_options_from_json(const Json& j);
Json to_json(const eval::EvalOptions& o);

pipeline::PipelineConfig pipeline_config_from_json(const Json& j);
Json to_json(const pipeline::PipelineConfig& c);

}  // namespace aatr
