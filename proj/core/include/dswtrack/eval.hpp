#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dswtrack/filter.hpp"
#include "dswtrack/learn.hpp"
#include "dswtrack/model.hpp"
#include "dswtrack/odsw.hpp"
#include "dswtrack/sim.hpp"

namespace dswtrack {

struct EvalConfig {
  /// Leading fraction of each sequence excluded from the metric, in [0, 0.5).
  double grace_fraction = 0.1;
};

/// Maps an angle in radians to (-pi, pi].
double wrap_angle(double radians);

/// 0-based index of the first scored step: floor(grace * K).
std::size_t grace_start(std::size_t length, const EvalConfig& cfg);

/// Circular RMSE in degrees over steps k0..K (1-based, k0 = floor(grace K) + 1)
/// of the wrapped azimuth error. Inputs in radians.
double circular_rmse(std::span<const double> estimate, std::span<const double> truth, const EvalConfig& cfg = {});

struct RunSummary {
  std::string label;
  std::vector<double> values;
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single run.
  double stddev = 0.0;
  bool single_run = false;

  /// "mean ± std", two decimals.
  std::string format() const;
};

RunSummary summarize(std::span<const double> values, std::string label);

/// Aligned text table, one row per summary.
std::string format_summary_table(std::span<const RunSummary> rows, const std::string& heading = "condition");

/// Initial belief used by the harness: azimuth of the first present
/// observation (atan2 of the RVM components), zero velocity, covariance I.
GaussianBelief harness_initial_belief(std::span<const ObservationFrame> frames);

/// Runs the filter over a record from the harness initial belief.
FilterTrajectory track_sequence(const SequenceRecord& record, const WeightSource& weights, const SystemModel& model);

/// Circular RMSE (degrees) of a trajectory's azimuth estimates against the record's ground truth.
double trajectory_crmse(const FilterTrajectory& trajectory, const SequenceRecord& record, const EvalConfig& cfg);

struct SequenceGroup {
  std::string id;
  std::vector<SequenceRecord> sequences;
};

/// Produces the weight source for one held-out sequence.
using WeightPlan = std::function<WeightSource(const SequenceRecord& held_out)>;

/// A weighting strategy that can be fitted on training sequences.
class TrackingPipeline {
 public:
  virtual ~TrackingPipeline() = default;
  virtual std::string name() const = 0;
  virtual WeightPlan fit(std::span<const SequenceRecord* const> training, const SystemModel& model) const = 0;
};

/// Constant weights; ignores the training data.
class FixedWeightPipeline : public TrackingPipeline {
 public:
  explicit FixedWeightPipeline(StreamWeights w) : weights_(std::move(w)) {}
  std::string name() const override { return "fixed"; }
  WeightPlan fit(std::span<const SequenceRecord* const> training, const SystemModel& model) const override;

 private:
  StreamWeights weights_;
};

/// Oracle weights computed on the held-out sequence itself (needs its ground truth).
class OracleWeightPipeline : public TrackingPipeline {
 public:
  explicit OracleWeightPipeline(OdswPrior prior) : prior_(prior) {}
  std::string name() const override { return "odsw"; }
  WeightPlan fit(std::span<const SequenceRecord* const> training, const SystemModel& model) const override;

 private:
  OdswPrior prior_;
};

/// Oracle targets on the training sequences, then a logistic predictor
/// trained on (features, targets) and applied to the held-out features.
class LearnedWeightPipeline : public TrackingPipeline {
 public:
  LearnedWeightPipeline(OdswPrior prior, SgdConfig sgd) : prior_(prior), sgd_(sgd) {}
  std::string name() const override { return "dsw"; }
  WeightPlan fit(std::span<const SequenceRecord* const> training, const SystemModel& model) const override;

 private:
  OdswPrior prior_;
  SgdConfig sgd_;
};

/// (features, oracle target) pairs of every step of the given records.
std::vector<TrainingRow> oracle_training_rows(std::span<const SequenceRecord* const> records, const SystemModel& model,
                                              const OdswPrior& prior);

struct SequenceScore {
  std::string group;
  std::string sequence_id;
  double crmse_deg = 0.0;
};

struct FoldResult {
  std::string held_out;
  std::vector<std::string> training_groups;
  std::vector<SequenceScore> scores;
  RunSummary summary;
};

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  RunSummary pooled;
};

/// Leave-one-group-out: for each group, fit the pipeline on all other groups
/// and track every sequence of the held-out group.
CrossValidationResult cross_validate(std::span<const SequenceGroup> groups, const SystemModel& model,
                                     const TrackingPipeline& pipeline, const EvalConfig& cfg = {},
                                     const std::string& label = "");

}  // namespace dswtrack
