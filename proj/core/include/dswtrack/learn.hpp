#pragma once

#include <cstdint>
#include <vector>

#include "dswtrack/common.hpp"
#include "dswtrack/filter.hpp"

namespace dswtrack {

/// Per-feature z-scoring statistics. Constant features are passed through
/// unchanged (stored as mean 0, std 1 and flagged).
struct FeatureStats {
  Vector mean;
  Vector stddev;
  std::vector<bool> passthrough;

  Vector apply(const Vector& raw) const;
  Eigen::Index dim() const { return mean.size(); }
};

struct TrainingRow {
  Vector features;
  StreamWeights target;
};

/// Standardized rows plus the statistics used to standardize them.
struct TrainingSet {
  std::vector<TrainingRow> rows;
  FeatureStats stats;
};

TrainingSet standardize_features(std::vector<TrainingRow> rows);

/// Two-stream logistic weight model: lambda_1 = 1 / (1 + exp(z^T w + b)),
/// lambda_2 = 1 - lambda_1. Note the sign: large positive logits give small lambda_1.
struct LogisticPredictor {
  Vector w;
  double b = 0.0;
  FeatureStats stats;

  /// Standardizes `raw_features` with `stats`, then applies predict_weights().
  StreamWeights predict(const Vector& raw_features) const;
};

/// lambda_1 is clipped to [1e-12, 1 - 1e-12] so that downstream logs stay finite.
StreamWeights predict_weights(const Vector& z, const Vector& w, double b);

/// -sum_m target_m * log pred_m, with pred clipped at 1e-12.
double cross_entropy_loss(const StreamWeights& pred, const StreamWeights& target);

struct LossGradient {
  Vector w;
  double b = 0.0;
};

/// Gradient of cross_entropy_loss(predict_weights(z, w, b), target) with respect to (w, b).
/// dL/db = target_1 - lambda_1 and dL/dw = (target_1 - lambda_1) z.
LossGradient loss_gradient(const Vector& z, const Vector& w, double b, const StreamWeights& target);

struct SgdConfig {
  double learning_rate = 0.05;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

struct TrainingResult {
  LogisticPredictor predictor;
  /// Mean per-sample loss of every epoch.
  std::vector<double> epoch_loss;
};

/// Mini-batch gradient descent from w = 0, b = 0 on already standardized data.
/// Rows are put in a canonical order before the seeded shuffle, so the result
/// does not depend on the input row order.
TrainingResult train_sgd(const TrainingSet& data, const SgdConfig& cfg);

/// standardize_features() followed by train_sgd().
TrainingResult train_predictor(std::vector<TrainingRow> rows, const SgdConfig& cfg);

/// Weight source that applies `predictor` to each frame's reliability features.
WeightSource predictor_source(LogisticPredictor predictor);

}  // namespace dswtrack
