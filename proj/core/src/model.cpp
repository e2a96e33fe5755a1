#include "dswtrack/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dswtrack {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw InvalidInput(std::string(what) + ": state contains non-finite values");
  }
}

void require_dim(const Vector& v, Eigen::Index dim, const char* what) {
  if (v.size() != dim) {
    std::ostringstream os;
    os << what << ": expected state of size " << dim << ", got " << v.size();
    throw InvalidInput(os.str());
  }
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// Central finite differences of `fn` at `x`, step scaled by the magnitude of each coordinate.
Matrix finite_difference_jacobian(const StateFunction& fn, const Vector& x, Eigen::Index rows) {
  Matrix jac(rows, x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Vector plus = x;
    Vector minus = x;
    plus[i] += h;
    minus[i] -= h;
    jac.col(i) = (fn(plus) - fn(minus)) / (2.0 * h);
  }
  return jac;
}

bool is_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

SystemModel::SystemModel(TransitionModel transition, std::vector<ObservationStream> streams)
    : transition_(std::move(transition)), streams_(std::move(streams)) {
  noise_inverse_.reserve(streams_.size());
  inverse_ok_.reserve(streams_.size());
  for (const auto& s : streams_) {
    Eigen::LLT<Matrix> llt;
    bool ok = s.noise.rows() == s.dim && s.noise.cols() == s.dim && s.dim > 0 &&
              s.noise.allFinite() && is_symmetric(s.noise);
    if (ok) {
      llt.compute(s.noise);
      ok = llt.info() == Eigen::Success;
    }
    if (ok) {
      Matrix inv = llt.solve(Matrix::Identity(s.dim, s.dim));
      inv = 0.5 * (inv + inv.transpose());
      ok = inv.allFinite();
      noise_inverse_.push_back(ok ? std::move(inv) : Matrix());
    } else {
      noise_inverse_.emplace_back();
    }
    inverse_ok_.push_back(ok);
  }
}

const Matrix& SystemModel::noise_inverse(std::size_t m) const {
  if (!inverse_ok_.at(m)) {
    throw InvalidInput("R_" + std::to_string(m + 1) + " (stream '" + streams_[m].label +
                       "') is not positive definite");
  }
  return noise_inverse_[m];
}

std::optional<std::size_t> SystemModel::find_stream(std::string_view label) const {
  for (std::size_t m = 0; m < streams_.size(); ++m) {
    if (streams_[m].label == label) return m;
  }
  return std::nullopt;
}

std::vector<std::string> SystemModel::labels() const {
  std::vector<std::string> out;
  out.reserve(streams_.size());
  for (const auto& s : streams_) out.push_back(s.label);
  return out;
}

Matrix cv_transition_matrix(const CvParams& p) {
  Matrix f(2, 2);
  f << 1.0, p.T, 0.0, 1.0;
  return f;
}

Vector cv_transition(const Vector& state, const CvParams& p) {
  require_dim(state, 2, "cv_transition");
  require_finite(state, "cv_transition");
  Vector out(2);
  out << state[0] + p.T * state[1], state[1];
  return out;
}

Matrix cv_process_noise(const CvParams& p) {
  const double t = p.T;
  Matrix q(2, 2);
  q << t * t * t / 3.0, t * t / 2.0, t * t / 2.0, t;
  return p.sigma_v2 * q;
}

Vector rvm_observe(const Vector& state, const RvmParams&) {
  require_dim(state, 2, "rvm_observe");
  require_finite(state, "rvm_observe");
  Vector y(2);
  y << std::cos(state[0]), std::sin(state[0]);
  return y;
}

Matrix rvm_jacobian(const Vector& state) {
  require_dim(state, 2, "rvm_jacobian");
  require_finite(state, "rvm_jacobian");
  Matrix h(2, 2);
  h << -std::sin(state[0]), 0.0, std::cos(state[0]), 0.0;
  return h;
}

TransitionModel make_cv_transition(const CvParams& p) {
  TransitionModel tm;
  tm.dim = 2;
  tm.function = [p](const Vector& x) { return cv_transition(x, p); };
  const Matrix f = cv_transition_matrix(p);
  tm.jacobian = [f](const Vector&) { return f; };
  tm.process_noise = cv_process_noise(p);
  return tm;
}

ObservationStream make_rvm_stream(std::string label, const RvmParams& p) {
  ObservationStream s;
  s.label = std::move(label);
  s.dim = 2;
  s.function = [p](const Vector& x) { return rvm_observe(x, p); };
  s.jacobian = [](const Vector& x) { return rvm_jacobian(x); };
  s.noise = p.sigma_w2 * Matrix::Identity(2, 2);
  return s;
}

ModelConfig default_model_config() {
  ModelConfig c;
  c.streams = {{"audio", RvmParams{}}, {"video", RvmParams{}}};
  return c;
}

SystemModel make_cv_rvm_model(const ModelConfig& config) {
  if (!(config.cv.T > 0.0) || !std::isfinite(config.cv.T)) {
    throw InvalidInput("model: T must be positive and finite");
  }
  if (!(config.cv.sigma_v2 >= 0.0) || !std::isfinite(config.cv.sigma_v2)) {
    throw InvalidInput("model: sigma_v2 must be non-negative and finite");
  }
  if (config.streams.empty()) {
    throw InvalidInput("model: at least one observation stream is required");
  }
  std::vector<ObservationStream> streams;
  for (const auto& sc : config.streams) {
    if (!(sc.params.sigma_w2 >= 0.0) || !std::isfinite(sc.params.sigma_w2)) {
      throw InvalidInput("model: stream '" + sc.label + "' sigma_w2 must be non-negative");
    }
    for (const auto& existing : streams) {
      if (existing.label == sc.label) {
        throw InvalidInput("model: duplicate stream label '" + sc.label + "'");
      }
    }
    streams.push_back(make_rvm_stream(sc.label, sc.params));
  }
  return SystemModel(make_cv_transition(config.cv), std::move(streams));
}

std::vector<std::string> validate_model(const SystemModel& model, const std::optional<Vector>& probe) {
  std::vector<std::string> violations;
  const auto& tm = model.transition();
  const int dx = tm.dim;

  if (dx <= 0) {
    violations.push_back("D_x must be positive");
    return violations;
  }
  if (model.stream_count() == 0) {
    violations.push_back("model has no observation streams (M must be >= 1)");
  }

  const Matrix& q = tm.process_noise;
  if (q.rows() != dx || q.cols() != dx) {
    violations.push_back("Q has shape " + std::to_string(q.rows()) + "x" + std::to_string(q.cols()) +
                         ", expected " + std::to_string(dx) + "x" + std::to_string(dx));
  } else if (!q.allFinite()) {
    violations.push_back("Q contains non-finite entries");
  } else if (!is_symmetric(q)) {
    violations.push_back("Q not symmetric");
  } else {
    Eigen::LDLT<Matrix> ldlt(q);
    const double tol = 1e-12 * std::max(1.0, q.cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < -tol) {
      violations.push_back("Q not positive semidefinite");
    }
  }

  for (std::size_t m = 0; m < model.stream_count(); ++m) {
    const auto& s = model.stream(m);
    const std::string name = "R_" + std::to_string(m + 1);
    if (s.dim <= 0) {
      violations.push_back("stream " + std::to_string(m + 1) + " ('" + s.label + "') has non-positive D_y");
      continue;
    }
    if (s.noise.rows() != s.dim || s.noise.cols() != s.dim) {
      violations.push_back(name + " has shape " + std::to_string(s.noise.rows()) + "x" +
                           std::to_string(s.noise.cols()) + ", expected " + std::to_string(s.dim) + "x" +
                           std::to_string(s.dim));
    } else if (!s.noise.allFinite()) {
      violations.push_back(name + " contains non-finite entries");
    } else if (!is_symmetric(s.noise)) {
      violations.push_back(name + " not symmetric");
    } else if (!model.has_noise_inverse(m)) {
      violations.push_back(name + " not positive definite");
    }
  }

  Vector x(dx);
  if (probe && probe->size() == dx) {
    x = *probe;
  } else {
    for (int i = 0; i < dx; ++i) x[i] = 0.3 + 0.17 * i;
  }

  auto check_jacobian = [&](const std::string& name, const StateFunction& fn, const JacobianFunction& jac,
                            Eigen::Index rows) {
    if (!fn || !jac) {
      violations.push_back(name + ": missing function or Jacobian");
      return;
    }
    try {
      const Vector y = fn(x);
      if (y.size() != rows) {
        violations.push_back(name + ": function output has size " + std::to_string(y.size()) + ", expected " +
                             std::to_string(rows));
        return;
      }
      const Matrix analytic = jac(x);
      if (analytic.rows() != rows || analytic.cols() != dx) {
        violations.push_back(name + ": Jacobian has shape " + std::to_string(analytic.rows()) + "x" +
                             std::to_string(analytic.cols()) + ", expected " + std::to_string(rows) + "x" +
                             std::to_string(dx));
        return;
      }
      const Matrix numeric = finite_difference_jacobian(fn, x, rows);
      const double err = (analytic - numeric).cwiseAbs().maxCoeff();
      const double scale = std::max(1.0, numeric.cwiseAbs().maxCoeff());
      if (!(err <= 1e-4 * scale)) {
        violations.push_back(name + ": Jacobian mismatch against finite differences (max abs error " +
                             fmt_double(err) + ")");
      }
    } catch (const std::exception& e) {
      violations.push_back(name + ": evaluation failed: " + e.what());
    }
  };

  check_jacobian("F (transition)", tm.function, tm.jacobian, dx);
  for (std::size_t m = 0; m < model.stream_count(); ++m) {
    const auto& s = model.stream(m);
    if (s.dim > 0) {
      check_jacobian("H_" + std::to_string(m + 1) + " ('" + s.label + "')", s.function, s.jacobian, s.dim);
    }
  }
  return violations;
}

}  // namespace dswtrack
