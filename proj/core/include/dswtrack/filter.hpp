#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dswtrack/common.hpp"
#include "dswtrack/model.hpp"

namespace dswtrack {

/// Mean and covariance of the filter's Gaussian state estimate.
struct GaussianBelief {
  Vector mean;
  Matrix covariance;
};

/// Tolerance on sum(lambda) == 1.
inline constexpr double kSimplexTolerance = 1e-12;

/// One weight per stream, constrained to the probability simplex.
class StreamWeights {
 public:
  /// Throws InvalidInput unless every entry is in [0, 1] and the entries sum to 1.
  explicit StreamWeights(Vector lambda);

  static StreamWeights uniform(std::size_t streams);
  /// Weight 1 on `stream`, 0 elsewhere.
  static StreamWeights one_hot(std::size_t streams, std::size_t stream);

  const Vector& values() const { return lambda_; }
  std::size_t size() const { return static_cast<std::size_t>(lambda_.size()); }
  double operator[](std::size_t m) const { return lambda_[static_cast<Eigen::Index>(m)]; }

 private:
  Vector lambda_;
};

/// Observations of one time step. A disengaged optional marks a missing stream.
struct ObservationFrame {
  std::vector<std::optional<Vector>> observations;
  Vector features;

  bool present(std::size_t m) const { return observations.at(m).has_value(); }
  bool any_present() const;
};

/// Per-stream Kalman gains K_m (D_x x D_y_m).
struct GainSet {
  std::vector<Matrix> gains;
};

/// Missing-data rule: absent streams get weight 0 and the remainder is
/// renormalized. Returns nullopt when no present stream carries weight, in
/// which case the update is skipped.
std::optional<StreamWeights> effective_weights(const StreamWeights& w, const ObservationFrame& frame);

GaussianBelief predict(const GaussianBelief& belief, const TransitionModel& tm);

/// Kalman gains of the weighted update via the binomial inverse theorem:
///   K = (R^-1 - R^-1 U Gamma U^T R^-1) B Sigma,  Gamma = W (I + U^T R^-1 U W)^-1,  W = L (x) Sigma.
/// W has rank D_x, so Gamma is evaluated through the factorization
/// W = (1_M (x) I) (lambda^T (x) Sigma), which needs a single D_x x D_x solve.
GainSet compute_gains(const Matrix& predicted_cov, std::span<const Matrix> jacobians,
                      std::span<const Matrix> noise_covariances, const StreamWeights& w);

/// Same as compute_gains() with R_m^{-1} supplied directly (the filter's hot path).
GainSet compute_gains_from_inverses(const Matrix& predicted_cov, std::span<const Matrix> jacobians,
                                    std::span<const Matrix> noise_inverses, const StreamWeights& w);

/// Literal evaluation of the binomial-inverse solution with W = L (x) Sigma
/// materialized and an (M D_x) x (M D_x) inverse. Cubic in M D_x; kept as a
/// cross-check of compute_gains().
GainSet compute_gains_explicit(const Matrix& predicted_cov, std::span<const Matrix> jacobians,
                               std::span<const Matrix> noise_covariances, const StreamWeights& w);

/// W = L (x) Sigma, where every row of L equals lambda^T.
Matrix stream_coupling_matrix(const StreamWeights& w, const Matrix& cov);

/// Weighted update. Absent streams follow effective_weights(); if nothing is
/// present (or nothing present carries weight) the prediction is returned.
GaussianBelief update(const GaussianBelief& predicted, const ObservationFrame& frame, const StreamWeights& w,
                      const SystemModel& model);

/// predict() followed by update().
GaussianBelief step(const GaussianBelief& belief, const ObservationFrame& frame, const StreamWeights& w,
                    const SystemModel& model);

/// Where the weights of each step come from: a constant vector, a per-frame
/// list (e.g. oracle weights), or a function of the frame (trained predictor).
class WeightSource {
 public:
  using Function = std::function<StreamWeights(std::size_t k, const ObservationFrame& frame)>;

  static WeightSource fixed(StreamWeights w);
  static WeightSource per_frame(std::vector<StreamWeights> weights);
  static WeightSource from_function(Function fn);

  /// Weights for zero-based step `k`.
  StreamWeights at(std::size_t k, const ObservationFrame& frame) const;

 private:
  using Storage = std::variant<StreamWeights, std::vector<StreamWeights>, Function>;
  explicit WeightSource(Storage s) : storage_(std::move(s)) {}
  Storage storage_;
};

struct FilterTrajectory {
  std::vector<GaussianBelief> beliefs;
  /// Weights actually applied at each step (zeros when the update was skipped).
  std::vector<Vector> applied_weights;
};

/// Runs step() over every frame. Errors are rethrown with the 1-based frame index.
FilterTrajectory run_filter(const GaussianBelief& init, std::span<const ObservationFrame> frames,
                            const WeightSource& weights, const SystemModel& model);

}  // namespace dswtrack
