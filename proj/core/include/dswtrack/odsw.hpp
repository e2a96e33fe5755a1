#pragma once

#include <span>
#include <variant>
#include <vector>

#include "dswtrack/common.hpp"
#include "dswtrack/filter.hpp"
#include "dswtrack/model.hpp"

namespace dswtrack {

/// Symmetric Dirichlet prior on the stream weights. alpha > 1 makes the
/// oracle objective strictly concave.
struct DirichletPrior {
  double alpha = 1.1;
};

/// Gaussian prior on lambda_1 for the two-stream closed form.
struct GaussianPriorParams {
  double mu = 0.5;
  double sigma2 = 0.1;
};

using OdswPrior = std::variant<DirichletPrior, GaussianPriorParams>;

/// log N(y | h(x), R) of one stream, evaluated at the (known) true state.
double stream_loglik(const Vector& y, const Vector& x, const ObservationStream& stream);

/// sum_m lambda_m * loglik_m + (alpha - 1) * sum_m log lambda_m (constant dropped).
/// Throws DomainError when a weight is on the simplex boundary.
double dirichlet_objective(const StreamWeights& w, const Vector& loglik, const DirichletPrior& prior);

struct DirichletSolution {
  StreamWeights weights;
  /// Lagrange multiplier nu of the sum-to-one constraint.
  double multiplier = 0.0;
  int iterations = 0;
};

/// Maximizes dirichlet_objective() over the open simplex. The stationarity
/// condition gives lambda_m = (alpha - 1) / (nu - loglik_m); nu is found by
/// bisection on sum_m lambda_m(nu) = 1.
DirichletSolution solve_odsw_dirichlet(const Vector& loglik, const DirichletPrior& prior);
StreamWeights odsw_dirichlet(const Vector& loglik, const DirichletPrior& prior);

/// lambda_1 = clamp(mu + sigma2 * (loglik1 - loglik2), 0, 1); lambda_2 = 1 - lambda_1.
double odsw_gaussian_two_stream(double loglik1, double loglik2, const GaussianPriorParams& prior);

/// Per-step oracle weights for a fully observed sequence. Missing streams get
/// weight 0 and the sub-simplex of present streams is solved; a step with no
/// present stream gets uniform weights (the filter skips that update anyway).
std::vector<StreamWeights> odsw_sequence(std::span<const Vector> states, std::span<const ObservationFrame> frames,
                                         const SystemModel& model, const OdswPrior& prior);

}  // namespace dswtrack
