#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dswtrack/learn.hpp"
#include "oracles.hpp"

using namespace dswtrack;

namespace {

StreamWeights two(double l1) {
  Vector v(2);
  v << l1, 1.0 - l1;
  return StreamWeights(v);
}

}  // namespace

TEST(PredictWeights, Examples) {
  const Vector z = Vector::Ones(2);
  EXPECT_DOUBLE_EQ(predict_weights(z, Vector::Zero(2), 0.0)[0], 0.5);
  EXPECT_NEAR(predict_weights(z, Vector::Zero(2), std::log(3.0))[0], 0.25, 1e-15);
  // Large positive logit drives lambda_1 to the floor, not to the upper bound.
  EXPECT_LT(predict_weights(z, Vector::Constant(2, 500.0), 0.0)[0], 1e-11);
  EXPECT_GT(predict_weights(z, Vector::Constant(2, -500.0), 0.0)[0], 1.0 - 1e-11);
  EXPECT_THROW(predict_weights(Vector::Ones(3), Vector::Zero(2), 0.0), InvalidInput);
}

TEST(PredictWeights, AlwaysOnSimplex) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    const auto w = predict_weights(oracle::random_matrix(3, 1, rng), oracle::random_matrix(3, 1, rng), nd(rng));
    EXPECT_EQ(w[0] + w[1], 1.0);
    EXPECT_GE(w[0], 0.0);
    EXPECT_GE(w[1], 0.0);
  }
}

TEST(CrossEntropy, Examples) {
  EXPECT_NEAR(cross_entropy_loss(two(0.5), two(0.5)), std::log(2.0), 1e-15);
  EXPECT_NEAR(cross_entropy_loss(two(0.9), two(1.0)), -std::log(0.9), 1e-15);
  EXPECT_NEAR(cross_entropy_loss(two(0.9), two(1.0)), 0.1054, 1e-4);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 100; ++i) {
    const auto t = two(u(rng));
    EXPECT_GE(cross_entropy_loss(two(u(rng)), t), cross_entropy_loss(t, t) - 1e-15);
  }
}

TEST(LossGradient, ZeroAtPerfectPrediction) {
  const Vector z = Vector::Ones(2);
  Vector w(2);
  w << 0.3, -0.7;
  const double b = 0.2;
  const auto target = predict_weights(z, w, b);
  const auto g = loss_gradient(z, w, b, target);
  EXPECT_NEAR(g.b, 0.0, 1e-15);
  EXPECT_LE(g.w.norm(), 1e-15);
}

TEST(LossGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int c = 0; c < 100; ++c) {
    const int d = 1 + c % 5;
    const Vector z = oracle::random_matrix(d, 1, rng);
    const Vector w = 0.5 * oracle::random_matrix(d, 1, rng);
    const double b = nd(rng);
    const StreamWeights target(oracle::random_simplex(2, rng));
    const auto g = loss_gradient(z, w, b, target);
    Vector theta(d + 1), analytic(d + 1), numeric(d + 1);
    theta << w, b;
    analytic << g.w, g.b;
    auto loss = [&](const Vector& t) { return cross_entropy_loss(predict_weights(z, t.head(d), t[d]), target); };
    for (int i = 0; i <= d; ++i) numeric[i] = oracle::central_diff(loss, theta, i, 1e-6);
    EXPECT_LE((analytic - numeric).norm() / std::max(analytic.norm(), numeric.norm()), 1e-5);
  }
}

TEST(LossGradient, ScalesWithFeatures) {
  Vector z(2), w(2);
  z << 0.4, -1.1;
  w << 0.3, 0.2;
  const double c = 2.5;
  // Keep the logit fixed while scaling z by c: divide w by c.
  const auto g1 = loss_gradient(z, w, 0.1, two(0.3));
  const auto g2 = loss_gradient(c * z, w / c, 0.1, two(0.3));
  EXPECT_LE((g2.w - c * g1.w).norm(), 1e-15);
}

TEST(Standardize, ColumnsAndConstantFeature) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(5.0, 3.0);
  std::vector<TrainingRow> rows;
  for (int i = 0; i < 200; ++i) {
    Vector f(2);
    f << nd(rng), 7.0;
    rows.push_back({f, two(0.5)});
  }
  const auto raw = rows;
  const auto set = standardize_features(rows);
  double mean = 0.0, sq = 0.0;
  for (const auto& r : set.rows) mean += r.features[0];
  mean /= 200.0;
  for (const auto& r : set.rows) sq += (r.features[0] - mean) * (r.features[0] - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(sq / 200.0), 1.0, 1e-12);
  EXPECT_TRUE(set.stats.passthrough[1]);
  EXPECT_FALSE(set.stats.passthrough[0]);
  EXPECT_EQ(set.rows[0].features[1], 7.0);
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_TRUE(set.stats.apply(raw[i].features) == set.rows[i].features);
}

TEST(TrainSgd, SeparableTargetsBeatConstantPredictor) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  auto make = [&](int n) {
    std::vector<TrainingRow> rows;
    for (int i = 0; i < n; ++i) {
      Vector z(2);
      z << nd(rng), nd(rng);
      rows.push_back({z, two(z[0] + 0.5 * z[1] > 0.0 ? 0.95 : 0.05)});
    }
    return rows;
  };
  const auto train = make(400), held = make(200);
  const auto result = train_predictor(train, SgdConfig{});
  double learned = 0.0, constant = 0.0;
  for (const auto& r : held) {
    learned += cross_entropy_loss(result.predictor.predict(r.features), r.target);
    constant += cross_entropy_loss(two(0.5), r.target);
  }
  EXPECT_LT(learned, constant);
  EXPECT_LT(result.epoch_loss.back(), result.epoch_loss.front());
}

TEST(TrainSgd, ZeroFeatureDatasetLearnsMeanLogOdds) {
  std::vector<TrainingRow> rows;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.1, 0.5);
  double mean_target = 0.0;
  for (int i = 0; i < 300; ++i) {
    const double t = u(rng);
    mean_target += t;
    rows.push_back({Vector::Zero(1), two(t)});
  }
  mean_target /= 300.0;
  SgdConfig cfg;
  cfg.epochs = 2000;
  const auto result = train_predictor(rows, cfg);
  // lambda_1 = 1 / (1 + exp(b))  ->  b = log((1 - p) / p)
  EXPECT_NEAR(result.predictor.b, std::log((1.0 - mean_target) / mean_target), 1e-2);
}

TEST(TrainSgd, DeterministicAndRowOrderInvariant) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  std::vector<TrainingRow> rows;
  for (int i = 0; i < 100; ++i) {
    Vector z(2);
    z << nd(rng), nd(rng);
    rows.push_back({z, two(z[0] > 0 ? 0.8 : 0.3)});
  }
  SgdConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 9;
  const auto a = train_predictor(rows, cfg);
  const auto b = train_predictor(rows, cfg);
  EXPECT_TRUE(a.predictor.w == b.predictor.w);
  EXPECT_EQ(a.predictor.b, b.predictor.b);

  auto shuffled = rows;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto c = train_predictor(shuffled, cfg);
  EXPECT_LE((c.predictor.w - a.predictor.w).norm(), 1e-12);
  EXPECT_NEAR(c.predictor.b, a.predictor.b, 1e-12);
}

TEST(TrainSgd, DivergenceAndBadConfig) {
  std::vector<TrainingRow> rows{{Vector::Ones(1), two(0.2)}, {-Vector::Ones(1), two(0.9)}};
  SgdConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train_predictor(rows, cfg), InvalidInput);
  // A huge constant feature is passed through unscaled and overflows w.
  const std::vector<TrainingRow> huge{{Vector::Constant(1, 1e300), two(0.2)}, {Vector::Constant(1, 1e300), two(0.2)}};
  cfg.learning_rate = 1e10;
  EXPECT_THROW(train_predictor(huge, cfg), TrainingFailure);
  EXPECT_THROW(train_predictor({}, SgdConfig{}), InvalidInput);
  Vector three(3);
  three << 0.2, 0.3, 0.5;
  EXPECT_THROW(train_predictor({{Vector::Ones(1), StreamWeights(three)}}, SgdConfig{}), UnsupportedConfiguration);
}

TEST(PredictorSource, UsesFrameFeatures) {
  LogisticPredictor p;
  p.w = Vector::Ones(1);
  p.b = 0.0;
  p.stats.mean = Vector::Zero(1);
  p.stats.stddev = Vector::Ones(1);
  p.stats.passthrough = {false};
  const auto source = predictor_source(p);
  ObservationFrame f;
  f.observations = {Vector::Zero(2), Vector::Zero(2)};
  f.features = Vector::Constant(1, std::log(3.0));
  EXPECT_NEAR(source.at(0, f)[0], 0.25, 1e-15);
}
