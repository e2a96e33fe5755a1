#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dswtrack/filter.hpp"
#include "dswtrack/model.hpp"

namespace dswtrack {

struct TimingCondition {
  int state_dim = 5;
  int obs_dim = 1;
  int streams = 2;
};

struct TimingConfig {
  int runs = 25;
  int steps = 100;
  std::uint64_t seed = 0;
};

/// Runtime ratio T_DSW-EKF / T_EKF over Monte-Carlo runs of one condition.
struct TimingResult {
  TimingCondition condition;
  double ratio_mean = 0.0;
  double ratio_std = 0.0;
  double ratio_median = 0.0;
  std::vector<double> ratios;
};

/// Linear benchmark system with identity parameters: f(x) = x, Q = I and
/// M streams with H_m = I (D_y x D_x, rectangular) and R_m = I.
SystemModel identity_model(const TimingCondition& c);

/// Standard EKF update consuming all streams as one stacked observation of
/// dimension sum_m D_y_m with block-diagonal noise.
GaussianBelief stacked_ekf_update(const GaussianBelief& predicted, std::span<const Vector> observations,
                                  const SystemModel& model);

/// Random observation sequence for the identity model: y_{m,k} ~ N(0, I).
std::vector<ObservationFrame> random_frames(const SystemModel& model, int steps, std::uint64_t seed);

/// Feeds both filters observations equal to the predicted measurement and
/// returns the largest absolute difference between their posterior means.
double zero_innovation_mean_gap(const TimingCondition& c, int steps);

/// One warm-up run is discarded; measurements run serially.
std::vector<TimingResult> timing_benchmark(std::span<const TimingCondition> grid, const TimingConfig& cfg);

}  // namespace dswtrack
