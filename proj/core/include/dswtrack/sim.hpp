#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dswtrack/common.hpp"
#include "dswtrack/filter.hpp"
#include "dswtrack/model.hpp"

namespace dswtrack {

enum class DisturbanceKind {
  NoiseInflation,  // magnitude: SNR-like level in dB
  Bias,            // magnitude: azimuth offset in degrees
  Dropout,         // magnitude ignored
};

/// Degradation of one stream over the 1-based inclusive step range [first, last].
struct Disturbance {
  std::size_t stream = 0;
  int first = 1;
  int last = 1;
  DisturbanceKind kind = DisturbanceKind::NoiseInflation;
  double magnitude = 0.0;
};

struct ScenarioSpec {
  int length = 300;
  ModelConfig model = default_model_config();
  std::uint64_t seed = 0;
  std::vector<Disturbance> disturbances;
  /// Defaults to a seeded azimuth in [-60, 60] degrees with zero velocity.
  std::optional<Vector> initial_state;
};

/// A full trajectory: ground truth, per-stream observations and reliability
/// features, optionally annotated with weights and estimates.
struct SequenceRecord {
  std::string id;
  std::vector<std::string> labels;
  std::vector<Vector> states;
  std::vector<ObservationFrame> frames;
  std::vector<Vector> weights;
  std::vector<Vector> estimates;

  std::size_t size() const { return frames.size(); }
  bool has_ground_truth() const { return !states.empty(); }
  /// Ground-truth azimuth (first state component) per step.
  std::vector<double> true_azimuths() const;
};

/// Clean reliability level of the first stream (dB) and of the second stream.
inline constexpr double kCleanSnrDb = 40.0;
inline constexpr double kCleanPoseFeature = 1.0;
/// Ground-truth azimuth is reflected at +-150 degrees.
inline constexpr double kAzimuthLimitDeg = 150.0;

/// Throws InvalidInput for out-of-range intervals, non-finite magnitudes,
/// unknown streams or overlapping intervals on the same stream.
void validate_schedule(std::span<const Disturbance> schedule, int length, std::size_t streams);

/// Ground truth from the constant-velocity model with process noise, observations
/// h_m(x_k) + w_m; then the disturbance schedule and reliability features.
///
/// Random streams derived from `seed`: truth, one per stream for observation
/// noise, disturbance noise and feature jitter. Each is an mt19937_64 seeded
/// with std::seed_seq{seed, component}, so disturbances never shift the draws
/// of undisturbed steps.
SequenceRecord simulate_sequence(const ScenarioSpec& spec);

/// Applies a schedule to an existing record. Noise inflation at s dB adds
/// N(0, sigma_w2 * 10^(-s/10)) per component; a bias of beta degrees rotates the
/// observed vector by beta; dropout marks the observation absent.
SequenceRecord inject_disturbance(SequenceRecord record, std::span<const Disturbance> schedule,
                                  const ModelConfig& model, std::uint64_t seed);

/// Feature vector z_k for 0-based step k (before jitter): [SNR level of stream 1
/// in dB (clean 40), 1 - |bias of stream 2| / 20 deg clipped to [-1, 1] (clean 1)].
Vector reliability_levels(std::span<const Disturbance> schedule, int k);

/// reliability_levels() plus N(0, 0.01) jitter on every component.
Vector synth_reliability(std::span<const Disturbance> schedule, int k, std::mt19937_64& rng);

/// Seed of scenario `index` in a suite generated from one master seed.
inline std::uint64_t scenario_seed(std::uint64_t master, std::size_t index) { return master + index; }

}  // namespace dswtrack
