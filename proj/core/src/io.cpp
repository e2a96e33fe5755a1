#include "dswtrack/io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace dswtrack::io {

namespace {

using json = nlohmann::ordered_json;

std::string location(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

// Line number of byte offset `byte` (1-based, as reported by nlohmann) in `text`.
std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(text.size(), byte == 0 ? 0 : byte - 1);
  std::size_t line = 1;
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

json parse_document(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(location(source, line_of_byte(text, e.byte)) + ": " + e.what());
  }
}

template <typename Fn>
void for_each_line(std::string_view text, std::string_view source, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      json j;
      try {
        j = json::parse(line.begin(), line.end());
      } catch (const json::parse_error& e) {
        throw ParseError(location(source, line_no) + ": " + e.what());
      }
      try {
        fn(j, line_no);
      } catch (const json::exception& e) {
        throw ParseError(location(source, line_no) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

Vector to_vector(const json& j) {
  if (!j.is_array()) throw ParseError("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

json from_vector(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json from_matrix_row_major(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  }
  return a;
}

std::string dump_line(const json& j) { return j.dump() + "\n"; }

ModelConfig model_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("model document must be a JSON object");
  const std::string kind = j.value("model", std::string("cv-rvm"));
  if (kind != "cv-rvm") throw InvalidInput("unsupported model '" + kind + "' (only \"cv-rvm\" is available)");
  ModelConfig c;
  c.cv.T = j.value("T", c.cv.T);
  c.cv.sigma_v2 = j.value("sigma_v2", c.cv.sigma_v2);
  if (j.contains("streams")) {
    for (const auto& s : j.at("streams")) {
      StreamConfig sc;
      sc.label = s.at("label").get<std::string>();
      sc.params.sigma_w2 = s.value("sigma_w2", sc.params.sigma_w2);
      c.streams.push_back(std::move(sc));
    }
  } else {
    c.streams = default_model_config().streams;
  }
  make_cv_rvm_model(c);  // semantic validation
  return c;
}

json model_to_json(const ModelConfig& c) {
  json j;
  j["model"] = "cv-rvm";
  j["T"] = c.cv.T;
  j["sigma_v2"] = c.cv.sigma_v2;
  j["streams"] = json::array();
  for (const auto& s : c.streams) j["streams"].push_back({{"label", s.label}, {"sigma_w2", s.params.sigma_w2}});
  return j;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InvalidInput("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InvalidInput("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

ModelConfig parse_model_config(std::string_view text, std::string_view source) {
  const json j = parse_document(text, source);
  try {
    return model_from_json(j);
  } catch (const json::exception& e) {
    throw ParseError(std::string(source) + ": " + e.what());
  }
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  return parse_model_config(read_text_file(path), path.string());
}

std::string model_config_to_json(const ModelConfig& config) { return model_to_json(config).dump(2) + "\n"; }

DisturbanceKind parse_disturbance_kind(std::string_view name) {
  if (name == "noise-inflation" || name == "noise") return DisturbanceKind::NoiseInflation;
  if (name == "bias") return DisturbanceKind::Bias;
  if (name == "dropout") return DisturbanceKind::Dropout;
  throw InvalidInput("unknown disturbance kind '" + std::string(name) +
                     "' (expected noise-inflation, bias or dropout)");
}

std::string_view disturbance_kind_name(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::NoiseInflation:
      return "noise-inflation";
    case DisturbanceKind::Bias:
      return "bias";
    case DisturbanceKind::Dropout:
      return "dropout";
  }
  return "unknown";
}

ScenarioSpec parse_scenario_spec(std::string_view text, std::string_view source) {
  const json j = parse_document(text, source);
  try {
    if (!j.is_object()) throw ParseError(std::string(source) + ": scenario must be a JSON object");
    ScenarioSpec spec;
    spec.length = j.value("K", spec.length);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("model")) spec.model = model_from_json(j.at("model"));
    if (j.contains("initial_state")) spec.initial_state = to_vector(j.at("initial_state"));
    const SystemModel model = make_cv_rvm_model(spec.model);
    if (j.contains("disturbances")) {
      for (const auto& d : j.at("disturbances")) {
        Disturbance dist;
        const auto& stream = d.at("stream");
        if (stream.is_string()) {
          const auto idx = model.find_stream(stream.get<std::string>());
          if (!idx) throw InvalidInput("disturbance refers to unknown stream '" + stream.get<std::string>() + "'");
          dist.stream = *idx;
        } else {
          const int one_based = stream.get<int>();
          if (one_based < 1) throw InvalidInput("disturbance stream index must be >= 1");
          dist.stream = static_cast<std::size_t>(one_based - 1);
        }
        dist.first = d.at("first").get<int>();
        dist.last = d.at("last").get<int>();
        dist.kind = parse_disturbance_kind(d.at("kind").get<std::string>());
        dist.magnitude = d.value("magnitude", 0.0);
        spec.disturbances.push_back(dist);
      }
    }
    if (spec.length < 1) throw InvalidInput("scenario: K must be >= 1");
    validate_schedule(spec.disturbances, spec.length, model.stream_count());
    return spec;
  } catch (const json::exception& e) {
    throw ParseError(std::string(source) + ": " + e.what());
  }
}

ScenarioSpec load_scenario_spec(const std::filesystem::path& path) {
  return parse_scenario_spec(read_text_file(path), path.string());
}

std::string sequence_record_to_jsonl(const SequenceRecord& record) {
  std::string out;
  for (std::size_t k = 0; k < record.size(); ++k) {
    json j;
    j["k"] = k + 1;
    if (record.has_ground_truth()) j["x"] = from_vector(record.states[k]);
    json y = json::object();
    const auto& frame = record.frames[k];
    for (std::size_t m = 0; m < frame.observations.size(); ++m) {
      const std::string label = m < record.labels.size() ? record.labels[m] : "s" + std::to_string(m + 1);
      y[label] = frame.observations[m] ? from_vector(*frame.observations[m]) : json(nullptr);
    }
    j["y"] = std::move(y);
    j["z"] = from_vector(frame.features);
    if (k < record.weights.size()) j["weights"] = from_vector(record.weights[k]);
    if (k < record.estimates.size()) j["estimate"] = from_vector(record.estimates[k]);
    out += dump_line(j);
  }
  return out;
}

SequenceRecord parse_sequence_record(std::string_view text, std::span<const std::string> labels,
                                     std::string_view source) {
  SequenceRecord rec;
  rec.labels.assign(labels.begin(), labels.end());
  bool truth_seen = false;
  for_each_line(text, source, [&](const json& j, std::size_t line) {
    const auto k = j.at("k").get<std::size_t>();
    if (k != rec.frames.size() + 1) {
      throw ParseError(location(source, line) + ": expected k = " + std::to_string(rec.frames.size() + 1) +
                       ", got " + std::to_string(k));
    }
    const auto& y = j.at("y");
    if (!y.is_object()) throw ParseError(location(source, line) + ": \"y\" must be an object");
    if (rec.labels.empty()) {
      for (const auto& [label, _] : y.items()) rec.labels.push_back(label);
    }
    ObservationFrame frame;
    for (const auto& label : rec.labels) {
      if (!y.contains(label)) {
        throw InvalidInput(location(source, line) + ": missing observation for stream '" + label + "'");
      }
      const auto& v = y.at(label);
      if (v.is_null()) {
        frame.observations.emplace_back(std::nullopt);
      } else {
        frame.observations.emplace_back(to_vector(v));
      }
    }
    if (j.contains("z")) frame.features = to_vector(j.at("z"));
    const bool has_truth = j.contains("x") && !j.at("x").is_null();
    if (rec.frames.empty()) truth_seen = has_truth;
    if (has_truth != truth_seen) {
      throw ParseError(location(source, line) + ": ground truth \"x\" must be present on all lines or none");
    }
    if (has_truth) rec.states.push_back(to_vector(j.at("x")));
    if (j.contains("weights")) rec.weights.push_back(to_vector(j.at("weights")));
    if (j.contains("estimate")) rec.estimates.push_back(to_vector(j.at("estimate")));
    rec.frames.push_back(std::move(frame));
  });
  if (rec.frames.empty()) throw ParseError(std::string(source) + ": record has no lines");
  return rec;
}

SequenceRecord load_sequence_record(const std::filesystem::path& path, std::span<const std::string> labels) {
  auto rec = parse_sequence_record(read_text_file(path), labels, path.string());
  rec.id = path.stem().string();
  return rec;
}

std::string trajectory_to_jsonl(const FilterTrajectory& trajectory) {
  std::string out;
  for (std::size_t k = 0; k < trajectory.beliefs.size(); ++k) {
    json j;
    j["k"] = k + 1;
    j["mean"] = from_vector(trajectory.beliefs[k].mean);
    j["cov"] = from_matrix_row_major(trajectory.beliefs[k].covariance);
    if (k < trajectory.applied_weights.size()) j["weights"] = from_vector(trajectory.applied_weights[k]);
    out += dump_line(j);
  }
  return out;
}

std::string weights_to_jsonl(std::span<const StreamWeights> weights, std::span<const Vector> features) {
  if (!features.empty() && features.size() != weights.size()) {
    throw InvalidInput("weights_to_jsonl: feature count does not match weight count");
  }
  std::string out;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    json j;
    j["k"] = k + 1;
    j["weights"] = from_vector(weights[k].values());
    if (!features.empty()) j["z"] = from_vector(features[k]);
    out += dump_line(j);
  }
  return out;
}

std::vector<StreamWeights> parse_weights_jsonl(std::string_view text, std::string_view source) {
  std::vector<StreamWeights> out;
  for_each_line(text, source, [&](const json& j, std::size_t line) {
    try {
      out.emplace_back(to_vector(j.at("weights")));
    } catch (const InvalidInput& e) {
      throw InvalidInput(location(source, line) + ": " + e.what());
    }
  });
  return out;
}

std::vector<TrainingRow> parse_training_rows(std::string_view text, std::string_view source) {
  std::vector<TrainingRow> rows;
  for_each_line(text, source, [&](const json& j, std::size_t line) {
    const auto& target = j.contains("target") ? j.at("target") : j.at("weights");
    try {
      rows.push_back(TrainingRow{to_vector(j.at("z")), StreamWeights(to_vector(target))});
    } catch (const InvalidInput& e) {
      throw InvalidInput(location(source, line) + ": " + e.what());
    }
  });
  return rows;
}

std::string predictor_to_json(const LogisticPredictor& predictor) {
  json j;
  j["w"] = from_vector(predictor.w);
  j["b"] = predictor.b;
  j["feature_stats"] = {{"mean", from_vector(predictor.stats.mean)}, {"std", from_vector(predictor.stats.stddev)}};
  return j.dump(2) + "\n";
}

LogisticPredictor parse_predictor(std::string_view text, std::string_view source) {
  const json j = parse_document(text, source);
  try {
    LogisticPredictor p;
    p.w = to_vector(j.at("w"));
    p.b = j.at("b").get<double>();
    if (j.contains("feature_stats")) {
      p.stats.mean = to_vector(j.at("feature_stats").at("mean"));
      p.stats.stddev = to_vector(j.at("feature_stats").at("std"));
    } else {
      p.stats.mean = Vector::Zero(p.w.size());
      p.stats.stddev = Vector::Ones(p.w.size());
    }
    p.stats.passthrough.assign(static_cast<std::size_t>(p.stats.mean.size()), false);
    if (p.stats.mean.size() != p.w.size() || p.stats.stddev.size() != p.w.size()) {
      throw InvalidInput(std::string(source) + ": feature_stats dimension does not match w");
    }
    if (!(p.stats.stddev.array() > 0.0).all()) {
      throw InvalidInput(std::string(source) + ": feature_stats std must be positive");
    }
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string(source) + ": " + e.what());
  }
}

std::string crmse_csv(std::string_view condition, std::span<const SequenceScore> scores, bool header) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  if (header) os << "condition,sequence_id,crmse_deg\n";
  for (const auto& s : scores) os << condition << ',' << s.sequence_id << ',' << s.crmse_deg << '\n';
  return os.str();
}

std::string timing_csv(std::span<const TimingResult> results) {
  std::ostringstream os;
  os << "dx,dym,m,ratio_mean,ratio_std\n";
  for (const auto& r : results) {
    os << r.condition.state_dim << ',' << r.condition.obs_dim << ',' << r.condition.streams << ',' << r.ratio_mean
       << ',' << r.ratio_std << '\n';
  }
  return os.str();
}

}  // namespace dswtrack::io
