#include "dswtrack/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace dswtrack {

namespace {

constexpr double kProbabilityFloor = 1e-12;

void check_rows(const std::vector<TrainingRow>& rows) {
  if (rows.empty()) throw InvalidInput("training: no rows");
  const auto dim = rows.front().features.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].features.size() != dim) {
      throw InvalidInput("training: row " + std::to_string(i + 1) + " has " +
                         std::to_string(rows[i].features.size()) + " features, expected " + std::to_string(dim));
    }
    if (rows[i].target.size() != 2) {
      throw UnsupportedConfiguration("training: the logistic predictor supports exactly 2 streams");
    }
    if (!rows[i].features.allFinite()) {
      throw InvalidInput("training: row " + std::to_string(i + 1) + " has non-finite features");
    }
  }
}

bool row_less(const TrainingRow& a, const TrainingRow& b) {
  for (Eigen::Index j = 0; j < a.features.size(); ++j) {
    if (a.features[j] != b.features[j]) return a.features[j] < b.features[j];
  }
  return a.target[0] < b.target[0];
}

}  // namespace

Vector FeatureStats::apply(const Vector& raw) const {
  if (raw.size() != mean.size()) {
    throw InvalidInput("feature standardization: got " + std::to_string(raw.size()) + " features, expected " +
                       std::to_string(mean.size()));
  }
  return (raw - mean).cwiseQuotient(stddev);
}

TrainingSet standardize_features(std::vector<TrainingRow> rows) {
  check_rows(rows);
  const Eigen::Index dim = rows.front().features.size();
  const double n = static_cast<double>(rows.size());

  FeatureStats stats;
  stats.mean = Vector::Zero(dim);
  stats.stddev = Vector::Ones(dim);
  stats.passthrough.assign(static_cast<std::size_t>(dim), false);
  for (Eigen::Index j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r.features[j];
    mean /= n;
    double var = 0.0;
    for (const auto& r : rows) var += (r.features[j] - mean) * (r.features[j] - mean);
    const double sd = std::sqrt(var / n);
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
      stats.passthrough[static_cast<std::size_t>(j)] = true;
    } else {
      stats.mean[j] = mean;
      stats.stddev[j] = sd;
    }
  }
  for (auto& r : rows) r.features = stats.apply(r.features);
  return TrainingSet{std::move(rows), std::move(stats)};
}

StreamWeights predict_weights(const Vector& z, const Vector& w, double b) {
  if (z.size() != w.size()) {
    throw InvalidInput("predict_weights: " + std::to_string(z.size()) + " features but " +
                       std::to_string(w.size()) + " weights");
  }
  const double logit = z.dot(w) + b;
  double l1 = 1.0 / (1.0 + std::exp(logit));
  if (std::isnan(l1)) l1 = 0.5;
  l1 = std::clamp(l1, kProbabilityFloor, 1.0 - kProbabilityFloor);
  Vector v(2);
  v << l1, 1.0 - l1;
  return StreamWeights(std::move(v));
}

StreamWeights LogisticPredictor::predict(const Vector& raw_features) const {
  return predict_weights(stats.apply(raw_features), w, b);
}

double cross_entropy_loss(const StreamWeights& pred, const StreamWeights& target) {
  if (pred.size() != target.size()) throw InvalidInput("cross_entropy_loss: size mismatch");
  double loss = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m) {
    if (target[m] == 0.0) continue;
    loss -= target[m] * std::log(std::max(pred[m], kProbabilityFloor));
  }
  return loss;
}

LossGradient loss_gradient(const Vector& z, const Vector& w, double b, const StreamWeights& target) {
  if (target.size() != 2) throw UnsupportedConfiguration("loss_gradient: expected 2 streams");
  const double l1 = 1.0 / (1.0 + std::exp(z.dot(w) + b));
  const double scale = target[0] - l1;
  return LossGradient{scale * z, scale};
}

TrainingResult train_sgd(const TrainingSet& data, const SgdConfig& cfg) {
  check_rows(data.rows);
  if (!(cfg.learning_rate > 0.0) || cfg.epochs <= 0 || cfg.batch_size <= 0) {
    throw InvalidInput("train_sgd: learning rate, epochs and batch size must be positive");
  }
  const Eigen::Index dim = data.rows.front().features.size();
  if (data.stats.dim() != dim) throw InvalidInput("train_sgd: feature statistics do not match the rows");

  std::vector<std::size_t> order(data.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row_less(data.rows[a], data.rows[b]); });

  std::mt19937_64 rng(cfg.seed);
  Vector w = Vector::Zero(dim);
  double b = 0.0;
  TrainingResult result;
  result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      Vector gw = Vector::Zero(dim);
      double gb = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& row = data.rows[order[i]];
        epoch_loss += cross_entropy_loss(predict_weights(row.features, w, b), row.target);
        const auto g = loss_gradient(row.features, w, b, row.target);
        gw += g.w;
        gb += g.b;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      w -= cfg.learning_rate * inv * gw;
      b -= cfg.learning_rate * inv * gb;
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss) || !w.allFinite() || !std::isfinite(b)) {
      throw TrainingFailure("train_sgd: training diverged in epoch " + std::to_string(epoch + 1) +
                            "; try a smaller learning rate");
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  result.predictor = LogisticPredictor{std::move(w), b, data.stats};
  return result;
}

TrainingResult train_predictor(std::vector<TrainingRow> rows, const SgdConfig& cfg) {
  return train_sgd(standardize_features(std::move(rows)), cfg);
}

WeightSource predictor_source(LogisticPredictor predictor) {
  return WeightSource::from_function(
      [p = std::move(predictor)](std::size_t, const ObservationFrame& frame) { return p.predict(frame.features); });
}

}  // namespace dswtrack
