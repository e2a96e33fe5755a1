#include "dswtrack/filter.hpp"

#include <cmath>
#include <string>

namespace dswtrack {

namespace {

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

StreamWeights::StreamWeights(Vector lambda) : lambda_(std::move(lambda)) {
  if (lambda_.size() == 0) throw InvalidInput("stream weights: empty weight vector");
  double sum = 0.0;
  for (Eigen::Index m = 0; m < lambda_.size(); ++m) {
    const double v = lambda_[m];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw InvalidInput("stream weights: lambda_" + std::to_string(m + 1) + " = " + std::to_string(v) +
                         " is outside [0, 1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw InvalidInput("stream weights: weights sum to " + std::to_string(sum) + ", expected 1 (simplex constraint)");
  }
}

StreamWeights StreamWeights::uniform(std::size_t streams) {
  if (streams == 0) throw InvalidInput("stream weights: need at least one stream");
  return StreamWeights(Vector::Constant(static_cast<Eigen::Index>(streams), 1.0 / static_cast<double>(streams)));
}

StreamWeights StreamWeights::one_hot(std::size_t streams, std::size_t stream) {
  if (stream >= streams) throw InvalidInput("stream weights: one-hot index out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(streams));
  v[static_cast<Eigen::Index>(stream)] = 1.0;
  return StreamWeights(std::move(v));
}

bool ObservationFrame::any_present() const {
  for (const auto& o : observations) {
    if (o) return true;
  }
  return false;
}

std::optional<StreamWeights> effective_weights(const StreamWeights& w, const ObservationFrame& frame) {
  if (frame.observations.size() != w.size()) {
    throw InvalidInput("frame has " + std::to_string(frame.observations.size()) + " streams but " +
                       std::to_string(w.size()) + " weights were given");
  }
  Vector lambda = w.values();
  double kept = 0.0;
  bool all_present = true;
  for (std::size_t m = 0; m < w.size(); ++m) {
    if (frame.present(m)) {
      kept += lambda[static_cast<Eigen::Index>(m)];
    } else {
      lambda[static_cast<Eigen::Index>(m)] = 0.0;
      all_present = false;
    }
  }
  if (all_present) return w;
  if (!(kept > 0.0)) return std::nullopt;
  lambda /= kept;
  // Push the rounding residue of the division onto the largest entry.
  Eigen::Index largest = 0;
  lambda.maxCoeff(&largest);
  lambda[largest] += 1.0 - lambda.sum();
  lambda[largest] = std::min(1.0, std::max(0.0, lambda[largest]));
  return StreamWeights(std::move(lambda));
}

GaussianBelief predict(const GaussianBelief& belief, const TransitionModel& tm) {
  if (belief.mean.size() != tm.dim || belief.covariance.rows() != tm.dim || belief.covariance.cols() != tm.dim) {
    throw InvalidInput("predict: belief dimension does not match D_x = " + std::to_string(tm.dim));
  }
  GaussianBelief out;
  out.mean = tm.function(belief.mean);
  const Matrix f = tm.jacobian(belief.mean);
  if (out.mean.size() != tm.dim || f.rows() != tm.dim || f.cols() != tm.dim) {
    throw InvalidInput("predict: transition function or Jacobian has wrong dimension");
  }
  out.covariance = symmetrize(f * belief.covariance * f.transpose() + tm.process_noise);
  if (!out.mean.allFinite()) throw NumericalFailure("predict: predicted mean is not finite");
  if (!out.covariance.allFinite()) throw NumericalFailure("predict: predicted covariance is not finite");
  return out;
}

GaussianBelief update(const GaussianBelief& predicted, const ObservationFrame& frame, const StreamWeights& w,
                      const SystemModel& model) {
  const auto applied = effective_weights(w, frame);
  if (!applied) return predicted;

  const Eigen::Index d = model.state_dim();
  if (predicted.mean.size() != d || predicted.covariance.rows() != d || predicted.covariance.cols() != d) {
    throw InvalidInput("update: belief dimension does not match D_x = " + std::to_string(d));
  }

  // Streams with zero weight contribute nothing to the gains or the update.
  std::vector<std::size_t> active;
  std::vector<Matrix> jacobians;
  std::vector<Matrix> inverses;
  std::vector<double> lambda;
  for (std::size_t m = 0; m < model.stream_count(); ++m) {
    if ((*applied)[m] == 0.0) continue;
    const auto& s = model.stream(m);
    const Vector& y = *frame.observations[m];
    if (y.size() != s.dim) {
      throw InvalidInput("update: observation of stream '" + s.label + "' has size " + std::to_string(y.size()) +
                         ", expected " + std::to_string(s.dim));
    }
    active.push_back(m);
    jacobians.push_back(s.jacobian(predicted.mean));
    inverses.push_back(model.noise_inverse(m));
    lambda.push_back((*applied)[m]);
  }
  Vector sub(static_cast<Eigen::Index>(lambda.size()));
  for (std::size_t i = 0; i < lambda.size(); ++i) sub[static_cast<Eigen::Index>(i)] = lambda[i];
  sub[sub.size() - 1] = std::max(0.0, 1.0 - (sub.sum() - sub[sub.size() - 1]));
  const StreamWeights sub_weights(std::move(sub));

  const GainSet gains = compute_gains_from_inverses(predicted.covariance, jacobians, inverses, sub_weights);

  Vector mean = predicted.mean;
  Matrix reduction = Matrix::Identity(d, d);
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto& s = model.stream(active[i]);
    const Vector innovation = *frame.observations[active[i]] - s.function(predicted.mean);
    mean.noalias() += sub_weights[i] * (gains.gains[i] * innovation);
    reduction.noalias() -= sub_weights[i] * (gains.gains[i] * jacobians[i]);
  }
  GaussianBelief out;
  out.mean = std::move(mean);
  out.covariance = symmetrize(reduction * predicted.covariance);
  if (!out.mean.allFinite()) throw NumericalFailure("update: posterior mean is not finite");
  if (!out.covariance.allFinite()) throw NumericalFailure("update: posterior covariance is not finite");
  return out;
}

GaussianBelief step(const GaussianBelief& belief, const ObservationFrame& frame, const StreamWeights& w,
                    const SystemModel& model) {
  return update(predict(belief, model.transition()), frame, w, model);
}

WeightSource WeightSource::fixed(StreamWeights w) { return WeightSource(Storage(std::move(w))); }

WeightSource WeightSource::per_frame(std::vector<StreamWeights> weights) {
  return WeightSource(Storage(std::move(weights)));
}

WeightSource WeightSource::from_function(Function fn) {
  if (!fn) throw InvalidInput("weight source: empty function");
  return WeightSource(Storage(std::move(fn)));
}

StreamWeights WeightSource::at(std::size_t k, const ObservationFrame& frame) const {
  if (const auto* fixed = std::get_if<StreamWeights>(&storage_)) return *fixed;
  if (const auto* list = std::get_if<std::vector<StreamWeights>>(&storage_)) {
    if (k >= list->size()) {
      throw InvalidInput("weight list has " + std::to_string(list->size()) + " entries, frame " +
                         std::to_string(k + 1) + " requested");
    }
    return (*list)[k];
  }
  return std::get<Function>(storage_)(k, frame);
}

FilterTrajectory run_filter(const GaussianBelief& init, std::span<const ObservationFrame> frames,
                            const WeightSource& weights, const SystemModel& model) {
  if (frames.empty()) throw InvalidInput("run_filter: no frames");
  FilterTrajectory out;
  out.beliefs.reserve(frames.size());
  out.applied_weights.reserve(frames.size());
  GaussianBelief belief = init;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const std::string where = "frame " + std::to_string(k + 1) + ": ";
    try {
      const StreamWeights w = weights.at(k, frames[k]);
      belief = step(belief, frames[k], w, model);
      const auto applied = effective_weights(w, frames[k]);
      out.applied_weights.push_back(applied ? applied->values() : Vector::Zero(static_cast<Eigen::Index>(w.size())));
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(where + e.what());
    } catch (const InvalidInput& e) {
      throw InvalidInput(where + e.what());
    }
    out.beliefs.push_back(belief);
  }
  return out;
}

}  // namespace dswtrack
