#include "dswtrack/timing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace dswtrack {

namespace {

using Clock = std::chrono::steady_clock;

GaussianBelief initial_belief(int dim) { return GaussianBelief{Vector::Zero(dim), Matrix::Identity(dim, dim)}; }

struct RunTimes {
  double dsw = 0.0;
  double ekf = 0.0;
  double checksum = 0.0;
};

RunTimes time_run(const SystemModel& model, std::span<const ObservationFrame> frames) {
  const auto weights = StreamWeights::uniform(model.stream_count());
  RunTimes t;

  auto start = Clock::now();
  GaussianBelief dsw = initial_belief(model.state_dim());
  for (const auto& f : frames) dsw = step(dsw, f, weights, model);
  t.dsw = std::chrono::duration<double>(Clock::now() - start).count();

  std::vector<Vector> stacked(model.stream_count());
  start = Clock::now();
  GaussianBelief ekf = initial_belief(model.state_dim());
  for (const auto& f : frames) {
    for (std::size_t m = 0; m < stacked.size(); ++m) stacked[m] = *f.observations[m];
    ekf = stacked_ekf_update(predict(ekf, model.transition()), stacked, model);
  }
  t.ekf = std::chrono::duration<double>(Clock::now() - start).count();

  // Keeps both loops observable to the optimizer.
  t.checksum = dsw.mean.sum() + ekf.mean.sum();
  return t;
}

}  // namespace

SystemModel identity_model(const TimingCondition& c) {
  if (c.state_dim <= 0 || c.obs_dim <= 0 || c.streams <= 0) {
    throw InvalidInput("timing condition: dimensions and stream count must be positive");
  }
  const int dx = c.state_dim;
  TransitionModel tm;
  tm.dim = dx;
  tm.function = [](const Vector& x) { return x; };
  tm.jacobian = [dx](const Vector&) { return Matrix::Identity(dx, dx); };
  tm.process_noise = Matrix::Identity(dx, dx);

  std::vector<ObservationStream> streams;
  const Matrix h = Matrix::Identity(c.obs_dim, dx);
  for (int m = 0; m < c.streams; ++m) {
    ObservationStream s;
    s.label = "s" + std::to_string(m + 1);
    s.dim = c.obs_dim;
    s.function = [h](const Vector& x) -> Vector { return h * x; };
    s.jacobian = [h](const Vector&) { return h; };
    s.noise = Matrix::Identity(c.obs_dim, c.obs_dim);
    streams.push_back(std::move(s));
  }
  return SystemModel(std::move(tm), std::move(streams));
}

GaussianBelief stacked_ekf_update(const GaussianBelief& predicted, std::span<const Vector> observations,
                                  const SystemModel& model) {
  const Eigen::Index dx = model.state_dim();
  Eigen::Index n = 0;
  for (const auto& s : model.streams()) n += s.dim;
  if (observations.size() != model.stream_count()) throw InvalidInput("stacked EKF: wrong observation count");

  Matrix h(n, dx);
  Matrix r = Matrix::Zero(n, n);
  Vector innovation(n);
  Eigen::Index row = 0;
  for (std::size_t m = 0; m < model.stream_count(); ++m) {
    const auto& s = model.stream(m);
    h.middleRows(row, s.dim) = s.jacobian(predicted.mean);
    r.block(row, row, s.dim, s.dim) = s.noise;
    innovation.segment(row, s.dim) = observations[m] - s.function(predicted.mean);
    row += s.dim;
  }
  const Matrix ph = predicted.covariance * h.transpose();
  Matrix innovation_cov = h * ph + r;
  Eigen::LLT<Matrix> llt(innovation_cov);
  if (llt.info() != Eigen::Success) throw NumericalFailure("stacked EKF: innovation covariance not positive definite");
  const Matrix gain = llt.solve(ph.transpose()).transpose();

  GaussianBelief out;
  out.mean = predicted.mean + gain * innovation;
  Matrix cov = (Matrix::Identity(dx, dx) - gain * h) * predicted.covariance;
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

std::vector<ObservationFrame> random_frames(const SystemModel& model, int steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ObservationFrame> frames(static_cast<std::size_t>(steps));
  for (auto& f : frames) {
    for (const auto& s : model.streams()) {
      Vector y(s.dim);
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = normal(rng);
      f.observations.emplace_back(std::move(y));
    }
  }
  return frames;
}

double zero_innovation_mean_gap(const TimingCondition& c, int steps) {
  const SystemModel model = identity_model(c);
  const auto weights = StreamWeights::uniform(model.stream_count());
  GaussianBelief dsw = initial_belief(model.state_dim());
  GaussianBelief ekf = dsw;
  dsw.mean.setLinSpaced(model.state_dim(), -1.0, 1.0);
  ekf.mean = dsw.mean;
  double gap = 0.0;
  for (int k = 0; k < steps; ++k) {
    const auto dsw_pred = predict(dsw, model.transition());
    const auto ekf_pred = predict(ekf, model.transition());
    ObservationFrame frame;
    std::vector<Vector> ekf_obs;
    for (const auto& s : model.streams()) {
      frame.observations.emplace_back(s.function(dsw_pred.mean));
      ekf_obs.push_back(s.function(ekf_pred.mean));
    }
    dsw = update(dsw_pred, frame, weights, model);
    ekf = stacked_ekf_update(ekf_pred, ekf_obs, model);
    gap = std::max(gap, (dsw.mean - ekf.mean).cwiseAbs().maxCoeff());
  }
  return gap;
}

std::vector<TimingResult> timing_benchmark(std::span<const TimingCondition> grid, const TimingConfig& cfg) {
  if (grid.empty()) throw InvalidInput("timing benchmark: empty condition grid");
  if (cfg.runs <= 0 || cfg.steps <= 0) throw InvalidInput("timing benchmark: runs and steps must be positive");

  std::vector<TimingResult> results;
  double sink = 0.0;
  for (std::size_t ci = 0; ci < grid.size(); ++ci) {
    const auto& c = grid[ci];
    const SystemModel model = identity_model(c);
    TimingResult res;
    res.condition = c;
    for (int run = -1; run < cfg.runs; ++run) {
      const auto seed = cfg.seed + ci * 1000003u + static_cast<std::uint64_t>(run + 1);
      const auto frames = random_frames(model, cfg.steps, seed);
      const RunTimes t = time_run(model, frames);
      sink += t.checksum;
      if (run < 0) continue;  // warm-up
      res.ratios.push_back(t.dsw / std::max(t.ekf, 1e-12));
    }
    const double n = static_cast<double>(res.ratios.size());
    res.ratio_mean = std::accumulate(res.ratios.begin(), res.ratios.end(), 0.0) / n;
    double ss = 0.0;
    for (double r : res.ratios) ss += (r - res.ratio_mean) * (r - res.ratio_mean);
    res.ratio_std = res.ratios.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::vector<double> sorted = res.ratios;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    res.ratio_median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    results.push_back(std::move(res));
  }
  if (!std::isfinite(sink)) throw NumericalFailure("timing benchmark: filters produced non-finite estimates");
  return results;
}

}  // namespace dswtrack
