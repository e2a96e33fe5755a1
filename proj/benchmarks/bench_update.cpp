#include <vector>

#include <benchmark/benchmark.h>

#include "dswtrack/filter.hpp"
#include "dswtrack/timing.hpp"

using namespace dswtrack;

namespace {

struct Fixture {
  explicit Fixture(const benchmark::State& state)
      : cond{static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), static_cast<int>(state.range(2))},
        model(identity_model(cond)),
        frames(random_frames(model, 1, 7)) {
    belief.mean = Vector::Zero(cond.state_dim);
    belief.covariance = Matrix::Identity(cond.state_dim, cond.state_dim);
    for (const auto& o : frames[0].observations) obs.push_back(*o);
  }
  TimingCondition cond;
  SystemModel model;
  std::vector<ObservationFrame> frames;
  std::vector<Vector> obs;
  GaussianBelief belief;
};

void args(benchmark::internal::Benchmark* b) {
  for (int dx : {5, 20, 100}) {
    for (int m : {2, 4}) b->Args({dx, 1, m});
  }
  b->Args({20, 5, 2});
}

void BM_DswUpdate(benchmark::State& state) {
  Fixture f(state);
  const auto w = StreamWeights::uniform(f.model.stream_count());
  for (auto _ : state) benchmark::DoNotOptimize(update(f.belief, f.frames[0], w, f.model));
}

void BM_StackedEkfUpdate(benchmark::State& state) {
  Fixture f(state);
  for (auto _ : state) benchmark::DoNotOptimize(stacked_ekf_update(f.belief, f.obs, f.model));
}

void BM_GainsStructured(benchmark::State& state) {
  Fixture f(state);
  std::vector<Matrix> H, R;
  for (std::size_t m = 0; m < f.model.stream_count(); ++m) {
    H.push_back(f.model.stream(m).jacobian(f.belief.mean));
    R.push_back(f.model.stream(m).noise);
  }
  const auto w = StreamWeights::uniform(f.model.stream_count());
  for (auto _ : state) benchmark::DoNotOptimize(compute_gains(f.belief.covariance, H, R, w));
}

void BM_GainsExplicit(benchmark::State& state) {
  Fixture f(state);
  std::vector<Matrix> H, R;
  for (std::size_t m = 0; m < f.model.stream_count(); ++m) {
    H.push_back(f.model.stream(m).jacobian(f.belief.mean));
    R.push_back(f.model.stream(m).noise);
  }
  const auto w = StreamWeights::uniform(f.model.stream_count());
  for (auto _ : state) benchmark::DoNotOptimize(compute_gains_explicit(f.belief.covariance, H, R, w));
}

}  // namespace

BENCHMARK(BM_DswUpdate)->Apply(args);
BENCHMARK(BM_StackedEkfUpdate)->Apply(args);
BENCHMARK(BM_GainsStructured)->Apply(args);
BENCHMARK(BM_GainsExplicit)->Apply(args);
BENCHMARK_MAIN();
