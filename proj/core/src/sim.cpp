#include "dswtrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dswtrack {

namespace {

enum Component : std::uint32_t {
  kTruthStream = 1,
  kDisturbanceStream = 2,
  kFeatureStream = 3,
  kObservationStreamBase = 16,  // + stream index
};

std::mt19937_64 component_rng(std::uint64_t seed, std::uint32_t component) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    component};
  return std::mt19937_64(seq);
}

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

Vector sample_gaussian(const Matrix& cov, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector draw(cov.rows());
  for (Eigen::Index i = 0; i < draw.size(); ++i) draw[i] = normal(rng);
  if (cov.isZero(0.0)) return Vector::Zero(cov.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * draw;
}

void reflect(Vector& state) {
  const double limit = deg2rad(kAzimuthLimitDeg);
  for (int guard = 0; guard < 8 && std::abs(state[0]) > limit; ++guard) {
    state[0] = state[0] > limit ? 2.0 * limit - state[0] : -2.0 * limit - state[0];
    state[1] = -state[1];
  }
}

const Disturbance* active(std::span<const Disturbance> schedule, std::size_t stream, DisturbanceKind kind,
                          int step) {
  for (const auto& d : schedule) {
    if (d.stream == stream && d.kind == kind && step >= d.first && step <= d.last) return &d;
  }
  return nullptr;
}

}  // namespace

std::vector<double> SequenceRecord::true_azimuths() const {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s[0]);
  return out;
}

void validate_schedule(std::span<const Disturbance> schedule, int length, std::size_t streams) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& d = schedule[i];
    const std::string where = "disturbance " + std::to_string(i + 1) + ": ";
    if (d.stream >= streams) throw InvalidInput(where + "stream index out of range");
    if (d.first < 1 || d.last > length || d.first > d.last) {
      throw InvalidInput(where + "interval [" + std::to_string(d.first) + ", " + std::to_string(d.last) +
                         "] is not within [1, " + std::to_string(length) + "]");
    }
    if (!std::isfinite(d.magnitude)) throw InvalidInput(where + "magnitude must be finite");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = schedule[j];
      if (o.stream == d.stream && o.first <= d.last && d.first <= o.last) {
        throw InvalidInput(where + "overlaps disturbance " + std::to_string(j + 1) + " on the same stream");
      }
    }
  }
}

Vector reliability_levels(std::span<const Disturbance> schedule, int k) {
  const int step = k + 1;
  Vector z(2);
  const auto* noise = active(schedule, 0, DisturbanceKind::NoiseInflation, step);
  z[0] = noise ? noise->magnitude : kCleanSnrDb;
  const auto* bias = active(schedule, 1, DisturbanceKind::Bias, step);
  z[1] = bias ? std::clamp(1.0 - std::abs(bias->magnitude) / 20.0, -1.0, 1.0) : kCleanPoseFeature;
  return z;
}

Vector synth_reliability(std::span<const Disturbance> schedule, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> jitter(0.0, 0.1);
  Vector z = reliability_levels(schedule, k);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] += jitter(rng);
  return z;
}

SequenceRecord inject_disturbance(SequenceRecord record, std::span<const Disturbance> schedule,
                                  const ModelConfig& model, std::uint64_t seed) {
  const int length = static_cast<int>(record.size());
  validate_schedule(schedule, length, model.streams.size());

  auto noise_rng = component_rng(seed, kDisturbanceStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < length; ++k) {
    auto& frame = record.frames[static_cast<std::size_t>(k)];
    for (const auto& d : schedule) {
      if (k + 1 < d.first || k + 1 > d.last) continue;
      auto& obs = frame.observations.at(d.stream);
      if (!obs) continue;
      switch (d.kind) {
        case DisturbanceKind::NoiseInflation: {
          const double var = model.streams[d.stream].params.sigma_w2 * std::pow(10.0, -d.magnitude / 10.0);
          const double sd = std::sqrt(var);
          for (Eigen::Index i = 0; i < obs->size(); ++i) (*obs)[i] += sd * normal(noise_rng);
          break;
        }
        case DisturbanceKind::Bias: {
          const double beta = deg2rad(d.magnitude);
          const double c = std::cos(beta);
          const double s = std::sin(beta);
          const Vector v = *obs;
          (*obs)[0] = c * v[0] - s * v[1];
          (*obs)[1] = s * v[0] + c * v[1];
          break;
        }
        case DisturbanceKind::Dropout:
          obs.reset();
          break;
      }
    }
  }

  auto feature_rng = component_rng(seed, kFeatureStream);
  for (int k = 0; k < length; ++k) {
    record.frames[static_cast<std::size_t>(k)].features = synth_reliability(schedule, k, feature_rng);
  }
  return record;
}

SequenceRecord simulate_sequence(const ScenarioSpec& spec) {
  if (spec.length < 1) throw InvalidInput("scenario: length K must be >= 1");
  const SystemModel model = make_cv_rvm_model(spec.model);
  validate_schedule(spec.disturbances, spec.length, model.stream_count());
  const auto length = static_cast<std::size_t>(spec.length);

  SequenceRecord record;
  record.id = "seed-" + std::to_string(spec.seed);
  record.labels = model.labels();

  auto truth_rng = component_rng(spec.seed, kTruthStream);
  Vector state(2);
  if (spec.initial_state) {
    if (spec.initial_state->size() != 2 || !spec.initial_state->allFinite()) {
      throw InvalidInput("scenario: initial_state must be a finite 2-vector");
    }
    state = *spec.initial_state;
  } else {
    std::uniform_real_distribution<double> azimuth(deg2rad(-60.0), deg2rad(60.0));
    state << azimuth(truth_rng), 0.0;
  }
  const auto& tm = model.transition();
  record.states.reserve(length);
  for (std::size_t k = 0; k < length; ++k) {
    state = tm.function(state) + sample_gaussian(tm.process_noise, truth_rng);
    reflect(state);
    record.states.push_back(state);
  }

  record.frames.resize(length);
  for (auto& f : record.frames) f.observations.resize(model.stream_count());
  for (std::size_t m = 0; m < model.stream_count(); ++m) {
    auto rng = component_rng(spec.seed, kObservationStreamBase + static_cast<std::uint32_t>(m));
    const auto& s = model.stream(m);
    for (std::size_t k = 0; k < length; ++k) {
      record.frames[k].observations[m] = s.function(record.states[k]) + sample_gaussian(s.noise, rng);
    }
  }
  return inject_disturbance(std::move(record), spec.disturbances, spec.model, spec.seed);
}

}  // namespace dswtrack
