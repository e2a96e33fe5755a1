#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dswtrack/common.hpp"

namespace dswtrack {

using StateFunction = std::function<Vector(const Vector&)>;
using JacobianFunction = std::function<Matrix(const Vector&)>;

/// State transition x_k = f(x_{k-1}) + v_k, v_k ~ N(0, Q).
struct TransitionModel {
  int dim = 0;
  StateFunction function;
  JacobianFunction jacobian;
  Matrix process_noise;
};

/// One sensor: y_m = h_m(x) + w_m, w_m ~ N(0, R_m). `function` returns the
/// noiseless mean; noise is only ever sampled by the simulator.
struct ObservationStream {
  std::string label;
  int dim = 0;
  StateFunction function;
  JacobianFunction jacobian;
  Matrix noise;
};

/// Transition model plus M observation streams. Immutable after construction.
///
/// Construction never rejects a model: malformed noise matrices are reported
/// by validate_model() and rejected by the filter when it needs R_m^{-1}.
class SystemModel {
 public:
  SystemModel(TransitionModel transition, std::vector<ObservationStream> streams);

  const TransitionModel& transition() const { return transition_; }
  std::span<const ObservationStream> streams() const { return streams_; }
  const ObservationStream& stream(std::size_t m) const { return streams_.at(m); }
  std::size_t stream_count() const { return streams_.size(); }
  int state_dim() const { return transition_.dim; }

  /// Precomputed R_m^{-1}. Throws InvalidInput if R_m is not positive definite.
  const Matrix& noise_inverse(std::size_t m) const;
  bool has_noise_inverse(std::size_t m) const { return inverse_ok_.at(m); }

  std::optional<std::size_t> find_stream(std::string_view label) const;
  std::vector<std::string> labels() const;

 private:
  TransitionModel transition_;
  std::vector<ObservationStream> streams_;
  std::vector<Matrix> noise_inverse_;
  std::vector<bool> inverse_ok_;
};

// ---------------------------------------------------------------------------
// Reference tracking model: constant-velocity azimuth dynamics observed through
// range-valued (unit circle) measurements. State is [phi, phi_dot] in radians.

struct CvParams {
  double T = 0.1;          // seconds between steps
  double sigma_v2 = 0.3;   // process-noise factor
};

struct RvmParams {
  double sigma_w2 = 0.01;  // per-component observation-noise variance
};

Vector cv_transition(const Vector& state, const CvParams& p);
Matrix cv_transition_matrix(const CvParams& p);
Matrix cv_process_noise(const CvParams& p);

Vector rvm_observe(const Vector& state, const RvmParams& p = {});
Matrix rvm_jacobian(const Vector& state);

TransitionModel make_cv_transition(const CvParams& p);
ObservationStream make_rvm_stream(std::string label, const RvmParams& p);

struct StreamConfig {
  std::string label;
  RvmParams params;
};

/// Mirrors the JSON model document {"model":"cv-rvm","T":..,"sigma_v2":..,"streams":[..]}.
struct ModelConfig {
  CvParams cv;
  std::vector<StreamConfig> streams;
};

/// Default two-stream configuration ("audio", "video").
ModelConfig default_model_config();

SystemModel make_cv_rvm_model(const ModelConfig& config);

/// Checks symmetry/definiteness of Q and every R_m, dimension consistency and
/// analytic Jacobians against central finite differences at a probe state.
/// Returns human-readable violations; empty means the model is well formed.
std::vector<std::string> validate_model(const SystemModel& model,
                                        const std::optional<Vector>& probe = std::nullopt);

}  // namespace dswtrack
