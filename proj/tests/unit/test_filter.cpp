#include <random>

#include <gtest/gtest.h>

#include "dswtrack/filter.hpp"
#include "oracles.hpp"

using namespace dswtrack;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

// Linear model with given F, Q and (H_m, R_m) per stream.
SystemModel linear_model(const Matrix& F, const Matrix& Q, const std::vector<Matrix>& H, const std::vector<Matrix>& R) {
  TransitionModel tm;
  tm.dim = static_cast<int>(F.rows());
  tm.function = [F](const Vector& x) -> Vector { return F * x; };
  tm.jacobian = [F](const Vector&) { return F; };
  tm.process_noise = Q;
  std::vector<ObservationStream> streams;
  for (std::size_t m = 0; m < H.size(); ++m) {
    ObservationStream s;
    s.label = "s" + std::to_string(m + 1);
    s.dim = static_cast<int>(H[m].rows());
    const Matrix h = H[m];
    s.function = [h](const Vector& x) -> Vector { return h * x; };
    s.jacobian = [h](const Vector&) { return h; };
    s.noise = R[m];
    streams.push_back(std::move(s));
  }
  return SystemModel(std::move(tm), std::move(streams));
}

using Ms = std::vector<Matrix>;

ObservationFrame frame_of(std::vector<std::optional<Vector>> obs) {
  ObservationFrame f;
  f.observations = std::move(obs);
  return f;
}

struct RandomSystem {
  Matrix sigma;
  std::vector<Matrix> H, R;
  Vector lambda;
};

RandomSystem random_system(std::mt19937_64& rng, int m, int dx) {
  RandomSystem s;
  s.sigma = oracle::random_spd(dx, rng, 0.1);
  std::uniform_int_distribution<int> dy(1, 3);
  for (int i = 0; i < m; ++i) {
    const int d = dy(rng);
    s.H.push_back(oracle::random_matrix(d, dx, rng));
    s.R.push_back(oracle::random_spd(d, rng, 0.2));
  }
  s.lambda = oracle::random_simplex(m, rng);
  return s;
}

}  // namespace

TEST(StreamWeights, EnforcesSimplex) {
  Vector bad(2);
  bad << 0.6, 0.6;
  EXPECT_THROW(StreamWeights{bad}, InvalidInput);
  bad << 1.2, -0.2;
  EXPECT_THROW(StreamWeights{bad}, InvalidInput);
  EXPECT_THROW(StreamWeights{Vector()}, InvalidInput);
  Vector ok(3);
  ok << 0.2, 0.3, 0.5;
  EXPECT_NO_THROW(StreamWeights{ok});
  EXPECT_DOUBLE_EQ(StreamWeights::uniform(4)[2], 0.25);
  EXPECT_DOUBLE_EQ(StreamWeights::one_hot(3, 1)[1], 1.0);
}

TEST(Predict, CvExampleMatchesHandComputation) {
  Matrix F(2, 2), Q(2, 2);
  F << 1, 1, 0, 1;
  Q << 0.1, 0.15, 0.15, 0.3;
  const auto model = linear_model(F, Q, {Matrix::Identity(1, 2)}, {scalar(1)});
  GaussianBelief b{Vector::Unit(2, 1), Matrix::Identity(2, 2)};
  const auto p = predict(b, model.transition());
  Matrix expect(2, 2);
  expect << 2.1, 1.15, 1.15, 1.3;
  EXPECT_TRUE(p.mean.isApprox(Vector::Ones(2)));
  EXPECT_TRUE(p.covariance.isApprox(expect, 1e-14));
}

TEST(Predict, IdentityWithoutNoiseIsFixedPoint) {
  std::mt19937_64 rng(1);
  const Matrix I = Matrix::Identity(3, 3);
  const auto model = linear_model(I, Matrix::Zero(3, 3), {I}, {I});
  const GaussianBelief b{oracle::random_matrix(3, 1, rng), oracle::random_spd(3, rng)};
  const auto p = predict(b, model.transition());
  EXPECT_TRUE(p.mean == b.mean);
  EXPECT_TRUE((p.covariance - b.covariance).isZero(1e-15));
}

TEST(Gains, ScalarExamples) {
  const Vector one = Vector::Ones(1);
  EXPECT_NEAR(compute_gains(scalar(1), Ms{scalar(1)}, Ms{scalar(1)}, StreamWeights(one)).gains[0](0, 0), 0.5, 1e-15);

  // [[1.5, 0.5], [0.5, 1.5]] x = [1, 1]  ->  x = [0.5, 0.5]
  const auto g = compute_gains(scalar(1), Ms{scalar(1), scalar(1)}, Ms{scalar(1), scalar(1)}, StreamWeights::uniform(2));
  EXPECT_NEAR(g.gains[0](0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g.gains[1](0, 0), 0.5, 1e-15);
}

TEST(Gains, OneHotWeightGivesSingleStreamGain) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    auto s = random_system(rng, 2, 4);
    const auto g = compute_gains(s.sigma, s.H, s.R, StreamWeights::one_hot(2, 0));
    const Matrix classic =
        s.sigma * s.H[0].transpose() * (s.H[0] * s.sigma * s.H[0].transpose() + s.R[0]).inverse();
    EXPECT_LE(oracle::rel_err(g.gains[0], classic), 1e-12);
  }
}

TEST(Gains, SatisfyBlockSystemAndMatchDenseSolve) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pm(1, 4), pd(1, 10);
  for (int i = 0; i < 100; ++i) {
    const int m = pm(rng);
    auto s = random_system(rng, m, pd(rng));
    const auto structured = compute_gains(s.sigma, s.H, s.R, StreamWeights(s.lambda));
    const auto explicit_form = compute_gains_explicit(s.sigma, s.H, s.R, StreamWeights(s.lambda));
    const auto dense = oracle::dense_gains(s.sigma, s.H, s.R, s.lambda);
    const Matrix post = oracle::weighted_posterior_cov(s.sigma, s.H, s.R, s.lambda);
    for (int j = 0; j < m; ++j) {
      const auto u = static_cast<std::size_t>(j);
      EXPECT_LE((structured.gains[u] - dense[u]).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LE((explicit_form.gains[u] - dense[u]).cwiseAbs().maxCoeff(), 1e-8);
      // K_m = Sigma_post H_m^T R_m^-1
      EXPECT_LE((structured.gains[u] - post * s.H[u].transpose() * s.R[u].inverse()).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(Gains, RejectMismatchedInputs) {
  EXPECT_THROW(compute_gains(scalar(1), Ms{scalar(1)}, Ms{scalar(1), scalar(1)}, StreamWeights::uniform(1)),
               InvalidInput);
  EXPECT_THROW(compute_gains(scalar(1), Ms{Matrix::Ones(1, 2)}, Ms{scalar(1)}, StreamWeights::uniform(1)),
               InvalidInput);
  EXPECT_THROW(compute_gains(scalar(1), Ms{scalar(1)}, Ms{scalar(-1)}, StreamWeights::uniform(1)), InvalidInput);
}

TEST(CouplingMatrix, HasRankStateDim) {
  std::mt19937_64 rng(4);
  for (int m = 2; m <= 4; ++m) {
    const Matrix sigma = oracle::random_spd(5, rng);
    const Matrix w = stream_coupling_matrix(StreamWeights(oracle::random_simplex(m, rng)), sigma);
    ASSERT_EQ(w.rows(), 5 * m);
    Eigen::JacobiSVD<Matrix> svd(w);
    const auto& sv = svd.singularValues();
    EXPECT_EQ((sv.array() > 1e-10 * sv[0]).count(), 5);
  }
}

TEST(Update, ZeroInnovationKeepsMean) {
  const auto model = linear_model(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                  {Matrix::Identity(2, 2), Matrix::Identity(1, 2)},
                                  {Matrix::Identity(2, 2), scalar(0.5)});
  Vector mean(2);
  mean << 0.3, -1.2;
  const GaussianBelief pred{mean, 2.0 * Matrix::Identity(2, 2)};
  const auto post = update(pred, frame_of({mean, mean.head(1)}), StreamWeights::uniform(2), model);
  EXPECT_TRUE((post.mean - mean).isZero(1e-15));
}

TEST(Update, ScalarTwoStreamHalvesCovariance) {
  const auto model = linear_model(scalar(1), scalar(0), {scalar(1), scalar(1)}, {scalar(1), scalar(1)});
  const GaussianBelief pred{Vector::Zero(1), scalar(1)};
  const Vector y = Vector::Ones(1);
  const auto post = update(pred, frame_of({y, y}), StreamWeights::uniform(2), model);
  EXPECT_NEAR(post.covariance(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(post.mean[0], 0.5, 1e-15);
}

TEST(Update, MatchesTextbookEkfForSingleStream) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const int dx = 2 + i % 5;
    const Matrix H = oracle::random_matrix(1 + i % 3, dx, rng);
    const Matrix R = oracle::random_spd(static_cast<int>(H.rows()), rng);
    const Matrix I = Matrix::Identity(dx, dx);
    const auto model = linear_model(I, Matrix::Zero(dx, dx), {H}, {R});
    const GaussianBelief b{oracle::random_matrix(dx, 1, rng), oracle::random_spd(dx, rng)};
    const Vector y = oracle::random_matrix(static_cast<int>(H.rows()), 1, rng);
    const auto post = step(b, frame_of({y}), StreamWeights::uniform(1), model);
    const auto ref = oracle::kalman_step({b.mean, b.covariance}, I, Matrix::Zero(dx, dx), H, R, y);
    EXPECT_LE(oracle::rel_err(post.mean, ref.x), 1e-12);
    EXPECT_LE(oracle::rel_err(post.covariance, ref.P), 1e-12);
  }
}

TEST(Update, OneHotWeightEqualsSingleStreamEkf) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const int dx = 3;
    std::vector<Matrix> H{oracle::random_matrix(2, dx, rng), oracle::random_matrix(1, dx, rng),
                          oracle::random_matrix(2, dx, rng)};
    std::vector<Matrix> R{oracle::random_spd(2, rng), oracle::random_spd(1, rng), oracle::random_spd(2, rng)};
    const Matrix I = Matrix::Identity(dx, dx);
    const auto model = linear_model(I, Matrix::Zero(dx, dx), H, R);
    const GaussianBelief b{oracle::random_matrix(dx, 1, rng), oracle::random_spd(dx, rng)};
    const auto frame = frame_of({oracle::random_matrix(2, 1, rng), oracle::random_matrix(1, 1, rng),
                                 oracle::random_matrix(2, 1, rng)});
    for (std::size_t m = 0; m < 3; ++m) {
      const auto post = update(b, frame, StreamWeights::one_hot(3, m), model);
      const auto ref = oracle::kalman_step({b.mean, b.covariance}, I, Matrix::Zero(dx, dx), H[m], R[m],
                                           *frame.observations[m]);
      EXPECT_LE(oracle::rel_err(post.mean, ref.x), 1e-10);
      EXPECT_LE(oracle::rel_err(post.covariance, ref.P), 1e-10);
    }
  }
}

TEST(Update, InformationNeverDecreasesAndCovarianceStaysSymmetric) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const int dx = 1 + i % 6;
    const int m = 1 + i % 4;
    auto s = random_system(rng, m, dx);
    const Matrix I = Matrix::Identity(dx, dx);
    const auto model = linear_model(I, Matrix::Zero(dx, dx), s.H, s.R);
    std::vector<std::optional<Vector>> obs;
    for (const auto& h : s.H) obs.emplace_back(oracle::random_matrix(static_cast<int>(h.rows()), 1, rng));
    const GaussianBelief pred{Vector::Zero(dx), s.sigma};
    const auto post = update(pred, frame_of(obs), StreamWeights(s.lambda), model);
    EXPECT_TRUE(post.covariance == post.covariance.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s.sigma - post.covariance);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
    // Information form: Sigma_post^-1 - Sigma^-1 = sum lambda_m H^T R^-1 H
    EXPECT_LE(oracle::rel_err(post.covariance, oracle::weighted_posterior_cov(s.sigma, s.H, s.R, s.lambda)), 1e-9);
  }
}

TEST(Update, MissingStreamRenormalizesRemainingWeights) {
  std::mt19937_64 rng(8);
  std::vector<Matrix> H{Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  std::vector<Matrix> R{oracle::random_spd(2, rng), oracle::random_spd(2, rng), oracle::random_spd(2, rng)};
  const auto model = linear_model(Matrix::Identity(2, 2), Matrix::Zero(2, 2), H, R);
  const GaussianBelief pred{Vector::Zero(2), Matrix::Identity(2, 2)};
  const Vector y1 = Vector::Ones(2), y3 = -Vector::Ones(2);
  Vector w(3);
  w << 0.2, 0.5, 0.3;
  const auto missing = update(pred, frame_of({y1, std::nullopt, y3}), StreamWeights(w), model);
  Vector renorm(3);
  renorm << 0.4, 0.0, 0.6;
  const auto explicit_zero = update(pred, frame_of({y1, Vector::Zero(2), y3}), StreamWeights(renorm), model);
  EXPECT_LE(oracle::rel_err(missing.mean, explicit_zero.mean), 1e-14);
  EXPECT_LE(oracle::rel_err(missing.covariance, explicit_zero.covariance), 1e-14);

  const auto weights = effective_weights(StreamWeights(w), frame_of({y1, std::nullopt, y3}));
  ASSERT_TRUE(weights.has_value());
  EXPECT_NEAR((*weights)[0], 0.4, 1e-15);
  EXPECT_EQ((*weights)[1], 0.0);
}

TEST(Update, AllAbsentOrZeroWeightSkipsUpdate) {
  const auto model = linear_model(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                  {Matrix::Identity(2, 2), Matrix::Identity(2, 2)},
                                  {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  GaussianBelief b{Vector::Ones(2), Matrix::Identity(2, 2)};
  const auto s = step(b, frame_of({std::nullopt, std::nullopt}), StreamWeights::uniform(2), model);
  const auto p = predict(b, model.transition());
  EXPECT_TRUE(s.mean == p.mean);
  EXPECT_TRUE(s.covariance == p.covariance);
  // Only the zero-weight stream is present.
  const auto z = step(b, frame_of({std::nullopt, Vector::Zero(2)}), StreamWeights::one_hot(2, 0), model);
  EXPECT_TRUE(z.mean == p.mean);
}

TEST(Update, RejectsWrongDimensions) {
  const auto model = linear_model(Matrix::Identity(2, 2), Matrix::Identity(2, 2), {Matrix::Identity(2, 2)},
                                  {Matrix::Identity(2, 2)});
  const GaussianBelief b{Vector::Zero(2), Matrix::Identity(2, 2)};
  EXPECT_THROW(update(b, frame_of({Vector::Zero(3)}), StreamWeights::uniform(1), model), InvalidInput);
  EXPECT_THROW(update(b, frame_of({Vector::Zero(2)}), StreamWeights::uniform(2), model), InvalidInput);
}

TEST(RunFilter, SingleStreamTrajectoryMatchesReferenceAndIsDeterministic) {
  std::mt19937_64 rng(9);
  Matrix F(2, 2);
  F << 1, 0.1, 0, 1;
  const Matrix Q = 0.05 * Matrix::Identity(2, 2);
  const Matrix H = Matrix::Identity(1, 2);
  const Matrix R = scalar(0.3);
  const auto model = linear_model(F, Q, {H}, {R});
  std::vector<ObservationFrame> frames;
  for (int k = 0; k < 100; ++k) frames.push_back(frame_of({oracle::random_matrix(1, 1, rng)}));
  const GaussianBelief init{Vector::Zero(2), Matrix::Identity(2, 2)};
  const auto traj = run_filter(init, frames, WeightSource::fixed(StreamWeights::uniform(1)), model);
  const auto again = run_filter(init, frames, WeightSource::fixed(StreamWeights::uniform(1)), model);
  oracle::KfState ref{init.mean, init.covariance};
  for (std::size_t k = 0; k < frames.size(); ++k) {
    ref = oracle::kalman_step(ref, F, Q, H, R, *frames[k].observations[0]);
    EXPECT_LE(oracle::rel_err(traj.beliefs[k].mean, ref.x), 1e-10);
    EXPECT_LE(oracle::rel_err(traj.beliefs[k].covariance, ref.P), 1e-10);
    EXPECT_TRUE(traj.beliefs[k].mean == again.beliefs[k].mean);
  }
  EXPECT_EQ(traj.applied_weights.size(), frames.size());
}

TEST(RunFilter, PerFrameWeightCountMustMatch) {
  const auto model = linear_model(scalar(1), scalar(1), {scalar(1)}, {scalar(1)});
  std::vector<ObservationFrame> frames(3, frame_of({Vector::Zero(1)}));
  const GaussianBelief init{Vector::Zero(1), scalar(1)};
  std::vector<StreamWeights> two(2, StreamWeights::uniform(1));
  EXPECT_THROW(run_filter(init, frames, WeightSource::per_frame(two), model), InvalidInput);
}
