#include <vector>
#include <string>

#include "dswtrack/filter.hpp"

namespace dswtrack {

namespace {

void check_inputs(const Matrix& cov, std::span<const Matrix> jacobians, std::span<const Matrix> noise,
                  const StreamWeights& w) {
  const std::size_t m = jacobians.size();
  if (m == 0) throw InvalidInput("compute_gains: at least one stream is required");
  if (noise.size() != m || w.size() != m) {
    throw InvalidInput("compute_gains: got " + std::to_string(m) + " Jacobians, " +
                       std::to_string(noise.size()) + " noise matrices and " + std::to_string(w.size()) +
                       " weights");
  }
  if (cov.rows() != cov.cols() || cov.rows() == 0) {
    throw InvalidInput("compute_gains: predicted covariance must be square and non-empty");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (jacobians[i].cols() != cov.rows()) {
      throw InvalidInput("compute_gains: H_" + std::to_string(i + 1) + " has " +
                         std::to_string(jacobians[i].cols()) + " columns, expected " +
                         std::to_string(cov.rows()));
    }
    if (noise[i].rows() != jacobians[i].rows() || noise[i].cols() != jacobians[i].rows()) {
      throw InvalidInput("compute_gains: R_" + std::to_string(i + 1) + " does not match D_y of H_" +
                         std::to_string(i + 1));
    }
  }
}

Matrix spd_inverse(const Matrix& r, std::size_t index) {
  Eigen::LLT<Matrix> llt(r);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("compute_gains: R_" + std::to_string(index + 1) + " is not positive definite");
  }
  Matrix inv = llt.solve(Matrix::Identity(r.rows(), r.cols()));
  return 0.5 * (inv + inv.transpose());
}

std::vector<Matrix> invert_all(std::span<const Matrix> noise) {
  std::vector<Matrix> inv;
  inv.reserve(noise.size());
  for (std::size_t i = 0; i < noise.size(); ++i) inv.push_back(spd_inverse(noise[i], i));
  return inv;
}

}  // namespace

Matrix stream_coupling_matrix(const StreamWeights& w, const Matrix& cov) {
  const Eigen::Index m = static_cast<Eigen::Index>(w.size());
  const Eigen::Index d = cov.rows();
  Matrix out(m * d, m * d);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      out.block(i * d, j * d, d, d) = w.values()[j] * cov;
    }
  }
  return out;
}

GainSet compute_gains_from_inverses(const Matrix& predicted_cov, std::span<const Matrix> jacobians,
                                    std::span<const Matrix> noise_inverses, const StreamWeights& w) {
  check_inputs(predicted_cov, jacobians, noise_inverses, w);
  const Eigen::Index d = predicted_cov.rows();
  const std::size_t m = jacobians.size();

  // R^-1 U is block diagonal with blocks R_m^-1 H_m.
  std::vector<Matrix> rinv_h(m);
  // G U^T R^-1 U E = Sigma * sum_m lambda_m H_m^T R_m^-1 H_m.
  Matrix info = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < m; ++i) {
    rinv_h[i].noalias() = noise_inverses[i] * jacobians[i];
    if (w[i] != 0.0) info.noalias() += w[i] * (jacobians[i].transpose() * rinv_h[i]);
  }

  // Gamma = E (I + Sigma S)^-1 G. Block i of R^-1 B Sigma - R^-1 U Gamma U^T R^-1 B Sigma
  // is then R_i^-1 H_i [Sigma - (I + Sigma S)^-1 Sigma S Sigma] = R_i^-1 H_i (I + Sigma S)^-1 Sigma.
  Matrix core = Matrix::Identity(d, d);
  core.noalias() += predicted_cov * info;
  Eigen::PartialPivLU<Matrix> lu(core);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15)) {
    throw NumericalFailure("compute_gains: (I + U^T R^-1 U W) is singular (rcond " + std::to_string(rcond) + ")");
  }
  const Matrix reduced = lu.solve(predicted_cov);

  GainSet out;
  out.gains.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    // Stacked row block i is K_i^T = R_i^-1 H_i (I + Sigma S)^-1 Sigma.
    Matrix k = reduced.transpose() * rinv_h[i].transpose();
    if (!k.allFinite()) {
      throw NumericalFailure("compute_gains: non-finite gain for stream " + std::to_string(i + 1));
    }
    out.gains.push_back(std::move(k));
  }
  return out;
}

GainSet compute_gains(const Matrix& predicted_cov, std::span<const Matrix> jacobians,
                      std::span<const Matrix> noise_covariances, const StreamWeights& w) {
  check_inputs(predicted_cov, jacobians, noise_covariances, w);
  const auto inv = invert_all(noise_covariances);
  return compute_gains_from_inverses(predicted_cov, jacobians, inv, w);
}

GainSet compute_gains_explicit(const Matrix& predicted_cov, std::span<const Matrix> jacobians,
                               std::span<const Matrix> noise_covariances, const StreamWeights& w) {
  check_inputs(predicted_cov, jacobians, noise_covariances, w);
  const Eigen::Index d = predicted_cov.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(jacobians.size());
  std::vector<Eigen::Index> offsets(jacobians.size() + 1, 0);
  for (std::size_t i = 0; i < jacobians.size(); ++i) offsets[i + 1] = offsets[i] + jacobians[i].rows();
  const Eigen::Index n = offsets.back();

  Matrix r_inv = Matrix::Zero(n, n);
  Matrix u = Matrix::Zero(n, m * d);
  Matrix b(n, d);
  const auto inv = invert_all(noise_covariances);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto rows = jacobians[static_cast<std::size_t>(i)].rows();
    r_inv.block(offsets[i], offsets[i], rows, rows) = inv[static_cast<std::size_t>(i)];
    u.block(offsets[i], i * d, rows, d) = jacobians[static_cast<std::size_t>(i)];
    b.block(offsets[i], 0, rows, d) = jacobians[static_cast<std::size_t>(i)];
  }
  const Matrix coupling = stream_coupling_matrix(w, predicted_cov);
  const Matrix ut_rinv_u = u.transpose() * r_inv * u;
  const Matrix inner = Matrix::Identity(m * d, m * d) + ut_rinv_u * coupling;
  // Gamma = W inner^-1  <=>  inner^T Gamma^T = W^T
  Eigen::PartialPivLU<Matrix> lu(inner.transpose());
  if (!(lu.rcond() > 1e-15)) {
    throw NumericalFailure("compute_gains_explicit: (I + U^T R^-1 U W) is singular");
  }
  const Matrix gamma = lu.solve(coupling.transpose()).transpose();
  const Matrix stacked = (r_inv - r_inv * u * gamma * u.transpose() * r_inv) * b * predicted_cov;

  GainSet out;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto rows = jacobians[static_cast<std::size_t>(i)].rows();
    out.gains.push_back(stacked.block(offsets[i], 0, rows, d).transpose());
  }
  return out;
}

}  // namespace dswtrack
