#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dswtrack/eval.hpp"
#include "dswtrack/filter.hpp"
#include "dswtrack/learn.hpp"
#include "dswtrack/model.hpp"
#include "dswtrack/sim.hpp"
#include "dswtrack/timing.hpp"

// File formats:
//   model       {"model":"cv-rvm","T":0.1,"sigma_v2":0.3,"streams":[{"label":"audio","sigma_w2":0.01},...]}
//   scenario    {"K":300,"seed":1,"model":{...},"initial_state":[phi,phidot],
//                "disturbances":[{"stream":"audio","first":1,"last":150,"kind":"noise-inflation","magnitude":0}]}
//   record      JSON Lines {"k":1,"x":[phi,phidot],"y":{"audio":[c,s]|null,...},"z":[f1,f2]}
//   trajectory  JSON Lines {"k":1,"mean":[...],"cov":[row-major],"weights":[...]}
//   weights     JSON Lines {"k":1,"weights":[...]} (optionally with "z")
//   predictor   {"w":[...],"b":...,"feature_stats":{"mean":[...],"std":[...]}}
//   CSV         condition,sequence_id,crmse_deg   and   dx,dym,m,ratio_mean,ratio_std

namespace dswtrack::io {

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

ModelConfig parse_model_config(std::string_view text, std::string_view source = "<model>");
ModelConfig load_model_config(const std::filesystem::path& path);
std::string model_config_to_json(const ModelConfig& config);

ScenarioSpec parse_scenario_spec(std::string_view text, std::string_view source = "<scenario>");
ScenarioSpec load_scenario_spec(const std::filesystem::path& path);
DisturbanceKind parse_disturbance_kind(std::string_view name);
std::string_view disturbance_kind_name(DisturbanceKind kind);

std::string sequence_record_to_jsonl(const SequenceRecord& record);
/// `labels` fixes the stream order; when empty it is taken from the first line.
SequenceRecord parse_sequence_record(std::string_view text, std::span<const std::string> labels = {},
                                     std::string_view source = "<record>");
SequenceRecord load_sequence_record(const std::filesystem::path& path, std::span<const std::string> labels = {});

std::string trajectory_to_jsonl(const FilterTrajectory& trajectory);

/// `features` may be empty; otherwise one feature vector per weight vector.
std::string weights_to_jsonl(std::span<const StreamWeights> weights, std::span<const Vector> features = {});
std::vector<StreamWeights> parse_weights_jsonl(std::string_view text, std::string_view source = "<weights>");

/// Lines with "z" and either "target" or "weights".
std::vector<TrainingRow> parse_training_rows(std::string_view text, std::string_view source = "<training>");

std::string predictor_to_json(const LogisticPredictor& predictor);
LogisticPredictor parse_predictor(std::string_view text, std::string_view source = "<predictor>");

std::string crmse_csv(std::string_view condition, std::span<const SequenceScore> scores, bool header = true);
std::string timing_csv(std::span<const TimingResult> results);

}  // namespace dswtrack::io
