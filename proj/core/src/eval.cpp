#include "dswtrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

namespace dswtrack {

double wrap_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(radians, two_pi);
  if (r > std::numbers::pi) r -= two_pi;
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

std::size_t grace_start(std::size_t length, const EvalConfig& cfg) {
  if (!(cfg.grace_fraction >= 0.0 && cfg.grace_fraction < 0.5)) {
    throw InvalidInput("grace fraction must be in [0, 0.5)");
  }
  return static_cast<std::size_t>(std::floor(cfg.grace_fraction * static_cast<double>(length)));
}

double circular_rmse(std::span<const double> estimate, std::span<const double> truth, const EvalConfig& cfg) {
  if (estimate.size() != truth.size()) {
    throw InvalidInput("circular_rmse: " + std::to_string(estimate.size()) + " estimates but " +
                       std::to_string(truth.size()) + " ground-truth values");
  }
  if (estimate.empty()) throw InvalidInput("circular_rmse: empty sequence");
  const std::size_t start = grace_start(estimate.size(), cfg);
  double sum = 0.0;
  for (std::size_t k = start; k < estimate.size(); ++k) {
    const double e = wrap_angle(estimate[k] - truth[k]);
    sum += e * e;
  }
  const double rmse = std::sqrt(sum / static_cast<double>(estimate.size() - start));
  return rmse * 180.0 / std::numbers::pi;
}

std::string RunSummary::format() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << mean << " ± " << stddev;
  return os.str();
}

RunSummary summarize(std::span<const double> values, std::string label) {
  if (values.empty()) throw InvalidInput("summarize: no runs");
  RunSummary s;
  s.label = std::move(label);
  s.values.assign(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) {
    s.single_run = true;
  } else {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

std::string format_summary_table(std::span<const RunSummary> rows, const std::string& heading) {
  std::size_t width = heading.size();
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << heading << "  " << std::right << std::setw(8) << "N"
     << "  cRMSE [deg]\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(width)) << r.label << "  " << std::right << std::setw(8)
       << r.values.size() << "  " << r.format() << (r.single_run ? "  (single run)" : "") << '\n';
  }
  return os.str();
}

GaussianBelief harness_initial_belief(std::span<const ObservationFrame> frames) {
  GaussianBelief b{Vector::Zero(2), Matrix::Identity(2, 2)};
  for (const auto& f : frames) {
    for (const auto& o : f.observations) {
      if (o && o->size() >= 2) {
        b.mean[0] = std::atan2((*o)[1], (*o)[0]);
        return b;
      }
    }
  }
  return b;
}

FilterTrajectory track_sequence(const SequenceRecord& record, const WeightSource& weights, const SystemModel& model) {
  return run_filter(harness_initial_belief(record.frames), record.frames, weights, model);
}

double trajectory_crmse(const FilterTrajectory& trajectory, const SequenceRecord& record, const EvalConfig& cfg) {
  if (!record.has_ground_truth()) throw InvalidInput("record '" + record.id + "' has no ground truth");
  std::vector<double> est;
  est.reserve(trajectory.beliefs.size());
  for (const auto& b : trajectory.beliefs) est.push_back(b.mean[0]);
  const auto truth = record.true_azimuths();
  return circular_rmse(est, truth, cfg);
}

WeightPlan FixedWeightPipeline::fit(std::span<const SequenceRecord* const>, const SystemModel&) const {
  return [w = weights_](const SequenceRecord&) { return WeightSource::fixed(w); };
}

WeightPlan OracleWeightPipeline::fit(std::span<const SequenceRecord* const>, const SystemModel& model) const {
  return [prior = prior_, &model](const SequenceRecord& seq) {
    return WeightSource::per_frame(odsw_sequence(seq.states, seq.frames, model, prior));
  };
}

std::vector<TrainingRow> oracle_training_rows(std::span<const SequenceRecord* const> records, const SystemModel& model,
                                              const OdswPrior& prior) {
  std::vector<TrainingRow> rows;
  for (const auto* rec : records) {
    if (!rec->has_ground_truth()) {
      throw InvalidInput("oracle targets need ground truth; record '" + rec->id + "' has none");
    }
    const auto targets = odsw_sequence(rec->states, rec->frames, model, prior);
    for (std::size_t k = 0; k < rec->size(); ++k) {
      if (!rec->frames[k].any_present()) continue;
      rows.push_back(TrainingRow{rec->frames[k].features, targets[k]});
    }
  }
  return rows;
}

WeightPlan LearnedWeightPipeline::fit(std::span<const SequenceRecord* const> training, const SystemModel& model) const {
  auto result = train_predictor(oracle_training_rows(training, model, prior_), sgd_);
  return [predictor = std::move(result.predictor)](const SequenceRecord&) { return predictor_source(predictor); };
}

CrossValidationResult cross_validate(std::span<const SequenceGroup> groups, const SystemModel& model,
                                     const TrackingPipeline& pipeline, const EvalConfig& cfg,
                                     const std::string& label) {
  if (groups.size() < 2) throw InvalidInput("cross_validate: at least 2 groups are required");
  for (const auto& g : groups) {
    if (g.sequences.empty()) throw InvalidInput("cross_validate: group '" + g.id + "' has no sequences");
  }
  grace_start(1, cfg);  // validates the grace fraction up front

  auto run_fold = [&](std::size_t held) {
    FoldResult fold;
    fold.held_out = groups[held].id;
    std::vector<const SequenceRecord*> training;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (g == held) continue;
      fold.training_groups.push_back(groups[g].id);
      for (const auto& s : groups[g].sequences) training.push_back(&s);
    }
    const WeightPlan plan = pipeline.fit(training, model);
    std::vector<double> values;
    for (const auto& seq : groups[held].sequences) {
      const auto traj = track_sequence(seq, plan(seq), model);
      const double crmse = trajectory_crmse(traj, seq, cfg);
      fold.scores.push_back(SequenceScore{groups[held].id, seq.id, crmse});
      values.push_back(crmse);
    }
    fold.summary = summarize(values, (label.empty() ? pipeline.name() : label) + " [" + fold.held_out + "]");
    return fold;
  };

  std::vector<std::future<FoldResult>> pending;
  pending.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) pending.push_back(std::async(std::launch::async, run_fold, g));

  CrossValidationResult out;
  std::vector<double> pooled;
  for (auto& p : pending) {
    out.folds.push_back(p.get());
    for (const auto& s : out.folds.back().scores) pooled.push_back(s.crmse_deg);
  }
  out.pooled = summarize(pooled, label.empty() ? pipeline.name() : label);
  return out;
}

}  // namespace dswtrack
