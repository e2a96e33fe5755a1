#include "dswtrack/odsw.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dswtrack {

namespace {

constexpr double kBisectionTolerance = 1e-12;
constexpr int kMaxIterations = 200;

void check_alpha(const DirichletPrior& prior) {
  if (!(prior.alpha > 1.0) || !std::isfinite(prior.alpha)) {
    throw InvalidInput("Dirichlet prior: alpha must be > 1, got " + std::to_string(prior.alpha));
  }
}

// sum_m (alpha - 1) / (nu - l_m) - 1 for shifted log-likelihoods (max l_m == 0).
double constraint_gap(const Vector& shifted, double a1, double nu) {
  return (a1 / (nu - shifted.array())).sum() - 1.0;
}

}  // namespace

double stream_loglik(const Vector& y, const Vector& x, const ObservationStream& stream) {
  if (y.size() != stream.dim) {
    throw InvalidInput("stream_loglik: observation of stream '" + stream.label + "' has size " +
                       std::to_string(y.size()) + ", expected " + std::to_string(stream.dim));
  }
  Eigen::LLT<Matrix> llt(stream.noise);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("stream_loglik: R of stream '" + stream.label + "' is not positive definite");
  }
  const Vector residual = y - stream.function(x);
  const Vector white = llt.matrixL().solve(residual);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double d = static_cast<double>(stream.dim);
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + white.squaredNorm());
}

double dirichlet_objective(const StreamWeights& w, const Vector& loglik, const DirichletPrior& prior) {
  if (static_cast<std::size_t>(loglik.size()) != w.size()) {
    throw InvalidInput("dirichlet_objective: weight and log-likelihood sizes differ");
  }
  double value = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) {
    if (!(w[m] > 0.0)) {
      throw DomainError("dirichlet_objective: lambda_" + std::to_string(m + 1) + " = 0 (log 0 undefined)");
    }
    value += w[m] * loglik[static_cast<Eigen::Index>(m)] + (prior.alpha - 1.0) * std::log(w[m]);
  }
  return value;
}

DirichletSolution solve_odsw_dirichlet(const Vector& loglik, const DirichletPrior& prior) {
  check_alpha(prior);
  if (loglik.size() < 2) throw InvalidInput("odsw_dirichlet: at least two streams are required");
  if (!loglik.allFinite()) throw InvalidInput("odsw_dirichlet: log-likelihoods must be finite");

  const double top = loglik.maxCoeff();
  const Vector shifted = loglik.array() - top;
  const double a1 = prior.alpha - 1.0;
  const double m = static_cast<double>(loglik.size());

  // At nu = a1 the largest term alone equals 1, so the gap is positive; at
  // nu = M a1 every term is at most 1/M, so the gap is non-positive.
  double lo = a1;
  double hi = m * a1;
  while (constraint_gap(shifted, a1, lo) <= 0.0) lo *= 0.5;
  while (constraint_gap(shifted, a1, hi) > 0.0) hi *= 2.0;

  double nu = 0.5 * (lo + hi);
  double gap = constraint_gap(shifted, a1, nu);
  int it = 0;
  for (; it < kMaxIterations && std::abs(gap) > kBisectionTolerance; ++it) {
    if (gap > 0.0) {
      lo = nu;
    } else {
      hi = nu;
    }
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket collapsed to adjacent doubles
    nu = mid;
    gap = constraint_gap(shifted, a1, nu);
  }
  if (std::abs(gap) > 1e-9) {
    throw NumericalFailure("odsw_dirichlet: bisection did not converge after " + std::to_string(it) +
                           " iterations (residual " + std::to_string(gap) + ")");
  }

  Vector lambda = a1 / (nu - shifted.array());
  lambda /= lambda.sum();
  return DirichletSolution{StreamWeights(std::move(lambda)), nu + top, it};
}

StreamWeights odsw_dirichlet(const Vector& loglik, const DirichletPrior& prior) {
  return solve_odsw_dirichlet(loglik, prior).weights;
}

double odsw_gaussian_two_stream(double loglik1, double loglik2, const GaussianPriorParams& prior) {
  if (!(prior.sigma2 > 0.0) || !(prior.mu >= 0.0 && prior.mu <= 1.0)) {
    throw InvalidInput("Gaussian prior: need sigma2 > 0 and mu in [0, 1]");
  }
  const double raw = prior.mu + prior.sigma2 * (loglik1 - loglik2);
  if (std::isnan(raw)) throw InvalidInput("odsw_gaussian_two_stream: log-likelihood ratio is NaN");
  return std::clamp(raw, 0.0, 1.0);
}

std::vector<StreamWeights> odsw_sequence(std::span<const Vector> states, std::span<const ObservationFrame> frames,
                                         const SystemModel& model, const OdswPrior& prior) {
  if (states.size() != frames.size()) {
    throw InvalidInput("odsw_sequence: " + std::to_string(states.size()) + " states but " +
                       std::to_string(frames.size()) + " frames");
  }
  const std::size_t streams = model.stream_count();
  if (std::holds_alternative<GaussianPriorParams>(prior) && streams != 2) {
    throw UnsupportedConfiguration("odsw_sequence: the Gaussian prior requires exactly 2 streams, model has " +
                                   std::to_string(streams));
  }
  if (const auto* d = std::get_if<DirichletPrior>(&prior)) check_alpha(*d);

  std::vector<StreamWeights> out;
  out.reserve(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& frame = frames[k];
    if (frame.observations.size() != streams) {
      throw InvalidInput("odsw_sequence: frame " + std::to_string(k + 1) + " has wrong stream count");
    }
    std::vector<std::size_t> present;
    for (std::size_t m = 0; m < streams; ++m) {
      if (frame.present(m)) present.push_back(m);
    }
    if (present.empty()) {
      out.push_back(StreamWeights::uniform(streams));
      continue;
    }
    if (present.size() == 1) {
      out.push_back(StreamWeights::one_hot(streams, present.front()));
      continue;
    }
    Vector loglik(static_cast<Eigen::Index>(present.size()));
    for (std::size_t i = 0; i < present.size(); ++i) {
      loglik[static_cast<Eigen::Index>(i)] =
          stream_loglik(*frame.observations[present[i]], states[k], model.stream(present[i]));
    }
    Vector full = Vector::Zero(static_cast<Eigen::Index>(streams));
    if (const auto* gp = std::get_if<GaussianPriorParams>(&prior)) {
      const double l1 = odsw_gaussian_two_stream(loglik[0], loglik[1], *gp);
      full << l1, 1.0 - l1;
    } else {
      const StreamWeights sub = odsw_dirichlet(loglik, std::get<DirichletPrior>(prior));
      for (std::size_t i = 0; i < present.size(); ++i) full[static_cast<Eigen::Index>(present[i])] = sub[i];
    }
    out.emplace_back(std::move(full));
  }
  return out;
}

}  // namespace dswtrack
