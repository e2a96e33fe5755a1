#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "dswtrack/io.hpp"

using namespace dswtrack;

namespace {

template <class F>
std::string parse_error_message(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(IoModel, RoundTripAndRejection) {
  ModelConfig cfg = default_model_config();
  cfg.cv.T = 0.05;
  cfg.streams[1].params.sigma_w2 = 0.04;
  const auto back = io::parse_model_config(io::model_config_to_json(cfg));
  EXPECT_EQ(back.cv.T, 0.05);
  ASSERT_EQ(back.streams.size(), 2u);
  EXPECT_EQ(back.streams[1].label, "video");
  EXPECT_EQ(back.streams[1].params.sigma_w2, 0.04);
  EXPECT_THROW(io::parse_model_config(R"({"model":"ca-rvm"})"), InvalidInput);
}

TEST(IoModel, MalformedJsonReportsLine) {
  const auto msg = parse_error_message([] { io::parse_model_config("{\n\"T\": 0.1,\n\"sigma_v2\": ,\n}", "m.json"); });
  EXPECT_NE(msg.find("m.json:3"), std::string::npos) << msg;
}

TEST(IoScenario, StreamsByLabelOrIndex) {
  const auto spec = io::parse_scenario_spec(R"({"K":50,"seed":7,"disturbances":[
      {"stream":"audio","first":1,"last":10,"kind":"noise-inflation","magnitude":0},
      {"stream":2,"first":5,"last":9,"kind":"bias","magnitude":20}]})");
  EXPECT_EQ(spec.length, 50);
  EXPECT_EQ(spec.seed, 7u);
  ASSERT_EQ(spec.disturbances.size(), 2u);
  EXPECT_EQ(spec.disturbances[0].stream, 0u);
  EXPECT_EQ(spec.disturbances[1].stream, 1u);
  EXPECT_EQ(spec.disturbances[1].kind, DisturbanceKind::Bias);
  EXPECT_THROW(io::parse_scenario_spec(R"({"K":50,"disturbances":[{"stream":"lidar","first":1,"last":2,"kind":"bias"}]})"),
               InvalidInput);
  EXPECT_THROW(io::parse_scenario_spec(R"({"K":50,"disturbances":[{"stream":1,"first":1,"last":60,"kind":"bias"}]})"),
               InvalidInput);
  EXPECT_THROW(io::parse_disturbance_kind("jitter"), InvalidInput);
}

TEST(IoRecord, RoundTripKeepsEveryValue) {
  ScenarioSpec s;
  s.length = 40;
  s.seed = 3;
  s.disturbances.push_back({0, 10, 15, DisturbanceKind::Dropout, 0.0});
  const auto rec = simulate_sequence(s);
  const auto back = io::parse_sequence_record(io::sequence_record_to_jsonl(rec), rec.labels);
  ASSERT_EQ(back.size(), rec.size());
  for (std::size_t k = 0; k < rec.size(); ++k) {
    EXPECT_TRUE(back.states[k] == rec.states[k]);
    EXPECT_TRUE(back.frames[k].features == rec.frames[k].features);
    for (std::size_t m = 0; m < 2; ++m) {
      ASSERT_EQ(back.frames[k].present(m), rec.frames[k].present(m));
      if (rec.frames[k].present(m)) EXPECT_TRUE(*back.frames[k].observations[m] == *rec.frames[k].observations[m]);
    }
  }
}

TEST(IoRecord, StructuralErrors) {
  const std::vector<std::string> labels{"audio", "video"};
  const std::string gap =
      "{\"k\":1,\"y\":{\"audio\":[1,0],\"video\":[1,0]}}\n{\"k\":3,\"y\":{\"audio\":[1,0],\"video\":[1,0]}}\n";
  const auto msg = parse_error_message([&] { io::parse_sequence_record(gap, labels, "r.jsonl"); });
  EXPECT_NE(msg.find("r.jsonl:2"), std::string::npos) << msg;
  EXPECT_THROW(io::parse_sequence_record("{\"k\":1,\"y\":{\"audio\":[1,0]}}\n", labels), InvalidInput);
  const std::string mixed = "{\"k\":1,\"x\":[0,0],\"y\":{\"audio\":[1,0],\"video\":[1,0]}}\n"
                            "{\"k\":2,\"y\":{\"audio\":[1,0],\"video\":[1,0]}}\n";
  EXPECT_THROW(io::parse_sequence_record(mixed, labels), ParseError);
  EXPECT_THROW(io::parse_sequence_record("", labels), ParseError);
  EXPECT_THROW(io::parse_sequence_record("{\"k\":1,\n", labels), ParseError);
}

TEST(IoWeightsAndPredictor, RoundTrip) {
  Vector a(2), b(2);
  a << 0.25, 0.75;
  b << 1.0, 0.0;
  const std::vector<StreamWeights> w{StreamWeights(a), StreamWeights(b)};
  const auto back = io::parse_weights_jsonl(io::weights_to_jsonl(w));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back[0].values() == a);
  EXPECT_TRUE(back[1].values() == b);
  EXPECT_THROW(io::parse_weights_jsonl("{\"k\":1,\"weights\":[0.7,0.7]}\n"), InvalidInput);

  LogisticPredictor p;
  p.w = a;
  p.b = -0.3;
  p.stats.mean = b;
  p.stats.stddev = Vector::Constant(2, 2.0);
  p.stats.passthrough = {false, false};
  const auto q = io::parse_predictor(io::predictor_to_json(p));
  EXPECT_TRUE(q.w == p.w);
  EXPECT_EQ(q.b, p.b);
  EXPECT_TRUE(q.stats.stddev == p.stats.stddev);

  const auto rows = io::parse_training_rows("{\"z\":[1,2],\"target\":[0.4,0.6]}\n{\"z\":[3,4],\"weights\":[1,0]}\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].target[0], 1.0);
}

TEST(IoFiles, AtomicWriteReplacesContent) {
  const auto dir = std::filesystem::temp_directory_path() / "dswtrack_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  io::write_file_atomic(path, "first");
  io::write_file_atomic(path, "second");
  EXPECT_EQ(io::read_text_file(path), "second");
  EXPECT_FALSE(std::filesystem::exists(dir / "out.txt.tmp"));
  EXPECT_THROW(io::read_text_file(dir / "missing.txt"), InvalidInput);
  EXPECT_THROW(io::write_file_atomic(dir / "no" / "such" / "dir.txt", "x"), InvalidInput);
  std::filesystem::remove_all(dir);
}

TEST(IoCsv, Layout) {
  const std::vector<SequenceScore> scores{{"g", "s1", 1.5}, {"g", "s2", 2.25}};
  const auto csv = io::crmse_csv("clean", scores);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "condition,sequence_id,crmse_deg");
  EXPECT_NE(csv.find("clean,s2,2.25"), std::string::npos) << csv;
}
