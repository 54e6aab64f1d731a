#include "kftune/gp_surrogate.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "kftune/error.hpp"
#include "kftune/truth_sim.hpp"

namespace kftune {
namespace {

// Dense reference implementation: explicit inverse of the noisy Gram matrix.
Prediction brute_force_predict(const MatrixXd& X, const VectorXd& y, const Hyperparams& h,
                               double jitter, const VectorXd& q) {
  const auto n = X.rows();
  MatrixXd K(n, n);
  VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i) = matern32(q, X.row(i).transpose(), h);
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = matern32(X.row(i).transpose(), X.row(j).transpose(), h);
  }
  K.diagonal().array() += h.sigma_n2 + jitter;
  const MatrixXd Kinv = K.inverse();
  return {k.dot(Kinv * y), h.sigma0 - k.dot(Kinv * k)};
}

MatrixXd random_points(RngStream& rng, int n, int d) {
  MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = rng.uniform();
  return X;
}

TEST(Matern32, Examples) {
  const Hyperparams h{2.5, 0.3, 0.0};
  const VectorXd a = VectorXd::Constant(2, 0.4);
  EXPECT_DOUBLE_EQ(matern32(a, a, h), 2.5);
  EXPECT_LT(matern32(VectorXd::Zero(1), VectorXd::Constant(1, 100.0), h), 1e-100);
  const Hyperparams unit{1.0, 1.0, 0.0};
  const double want = (1 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0));
  EXPECT_NEAR(matern32(VectorXd::Zero(1), VectorXd::Ones(1), unit), want, 1e-15);
  EXPECT_NEAR(want, 0.48336, 1e-5);
  // Depends on the Euclidean distance only.
  EXPECT_NEAR(matern32((VectorXd(2) << 0, 0).finished(), (VectorXd(2) << 0.6, 0.8).finished(), unit), want, 1e-15);
}

TEST(Fit, SinglePoint) {
  const Hyperparams h{1.5, 0.2, 0.25};
  const SurrogateModel m = fit(MatrixXd::Constant(1, 1, 0.3), VectorXd::Constant(1, 4.0), h);
  EXPECT_NEAR(m.chol()(0, 0), std::sqrt(1.75), 1e-9);
}

TEST(Fit, DuplicateInputsWithoutNoiseAreRejected) {
  MatrixXd X(3, 1);
  X << 0.2, 0.5, 0.2;
  EXPECT_THROW(fit(X, VectorXd::Ones(3), Hyperparams{1, 0.2, 0.0}), InvalidArgument);
  EXPECT_NO_THROW(fit(X, VectorXd::Ones(3), Hyperparams{1, 0.2, 1e-6}));
}

TEST(Fit, CollinearPointsWithNoiseFactor) {
  MatrixXd X(3, 1);
  X << 0.1, 0.5, 0.9;
  const Hyperparams h{1.0, 0.2, 0.01};
  MatrixXd K(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) K(i, j) = matern32(X.row(i).transpose(), X.row(j).transpose(), h);
  K.diagonal().array() += h.sigma_n2;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(K);
  ASSERT_GT(eig.eigenvalues().minCoeff(), 0.0);
  const SurrogateModel m = fit(X, VectorXd::Ones(3), h);
  const MatrixXd LLt = m.chol() * m.chol().transpose();
  MatrixXd expected = K;
  expected.diagonal().array() += m.jitter();
  EXPECT_LT((LLt - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Fit, RejectsInputsOutsideUnitBox) {
  EXPECT_THROW(fit(MatrixXd::Constant(1, 1, 1.5), VectorXd::Ones(1), Hyperparams{}), InvalidArgument);
  EXPECT_THROW(fit(MatrixXd::Constant(2, 1, 0.5), VectorXd::Ones(1), Hyperparams{}), InvalidArgument);
  EXPECT_THROW(fit(MatrixXd::Constant(1, 1, 0.5), VectorXd::Ones(1), Hyperparams{1, -1, 0}), InvalidArgument);
}

TEST(Predict, RevertsToPriorFarFromData) {
  const Hyperparams h{3.0, 0.01, 1e-6};
  const SurrogateModel m = fit(MatrixXd::Zero(1, 1), VectorXd::Constant(1, 5.0), h);
  const Prediction p = m.predict(VectorXd::Ones(1));
  EXPECT_NEAR(p.mean, 0.0, 1e-12);
  EXPECT_NEAR(p.var, 3.0, 1e-12);
}

TEST(Predict, InterpolatesTrainingTargets) {
  RngStream rng(3, 1);
  const MatrixXd X = random_points(rng, 6, 2);
  VectorXd y(6);
  for (auto& v : y) v = rng.normal();
  const Hyperparams h{1.0, 0.5, 1e-12};
  const SurrogateModel m = fit(X, y, h);
  for (int i = 0; i < 6; ++i) {
    const Prediction p = m.predict(X.row(i).transpose());
    EXPECT_NEAR(p.mean, y(i), 1e-6);
    EXPECT_LE(p.var, 1e-6 * h.sigma0);
  }
}

TEST(Predict, SymmetricDataGivesZeroMidpoint) {
  MatrixXd X(2, 1);
  X << 0.25, 0.75;
  const SurrogateModel m = fit(X, (VectorXd(2) << 1, -1).finished(), Hyperparams{1, 0.3, 0.01});
  EXPECT_NEAR(m.predict(VectorXd::Constant(1, 0.5)).mean, 0.0, 1e-14);
  // Antisymmetric about the midpoint.
  EXPECT_NEAR(m.predict(VectorXd::Constant(1, 0.4)).mean, -m.predict(VectorXd::Constant(1, 0.6)).mean, 1e-12);
}

TEST(Predict, MatchesBruteForceOnRandomInstances) {
  RngStream rng(77, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    const int d = 1 + static_cast<int>(rng.below(3));
    const MatrixXd X = random_points(rng, n, d);
    VectorXd y(n);
    for (auto& v : y) v = 2 * rng.normal();
    const Hyperparams h{std::exp(-1 + 2 * rng.uniform()), std::exp(-2 + 2 * rng.uniform()),
                        std::exp(-8 + 6 * rng.uniform())};
    const SurrogateModel m = fit(X, y, h);
    for (int q = 0; q < 5; ++q) {
      const VectorXd qs = random_points(rng, 1, d).transpose();
      const Prediction got = m.predict(qs);
      const Prediction want = brute_force_predict(X, y, h, m.jitter(), qs);
      EXPECT_NEAR(got.mean, want.mean, 1e-8);
      EXPECT_NEAR(got.var, std::max(0.0, want.var), 1e-8);
    }
  }
}

TEST(Predict, VarianceDoesNotGrowWithMoreData) {
  RngStream rng(12, 0);
  const Hyperparams h{1.3, 0.25, 0.02};
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd X = random_points(rng, 10, 2);
    VectorXd y(10);
    for (auto& v : y) v = rng.normal();
    const VectorXd q = random_points(rng, 1, 2).transpose();
    double prev = h.sigma0;
    for (int n = 1; n <= 10; ++n) {
      const double var = fit(X.topRows(n), y.head(n), h).predict(q).var;
      EXPECT_LE(var, prev + 1e-9);
      prev = var;
    }
  }
}

TEST(Predict, CenteredTargetsUsePriorMean) {
  MatrixXd X(2, 1);
  X << 0.0, 0.1;
  const SurrogateModel m = fit(X, (VectorXd(2) << 4, 6).finished(), Hyperparams{1, 0.01, 1e-6}, true);
  EXPECT_DOUBLE_EQ(m.prior_mean(), 5.0);
  EXPECT_NEAR(m.predict(VectorXd::Ones(1)).mean, 5.0, 1e-9);
}

TEST(Nlml, SinglePointZeroTarget) {
  const Hyperparams h{2.0, 0.3, 0.5};
  const double want = 0.5 * std::log(2.5) + 0.5 * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(negative_log_marginal_likelihood(MatrixXd::Constant(1, 1, 0.5), VectorXd::Zero(1), h), want, 1e-9);
}

TEST(Nlml, TwoPointDirectOracle) {
  MatrixXd X(2, 2);
  X << 0.1, 0.2, 0.6, 0.9;
  const VectorXd y = (VectorXd(2) << 0.7, -1.3).finished();
  const Hyperparams h{1.7, 0.4, 0.05};
  const SurrogateModel m = fit(X, y, h);
  const double k12 = matern32(X.row(0).transpose(), X.row(1).transpose(), h);
  const double a = h.sigma0 + h.sigma_n2 + m.jitter();
  const double det = a * a - k12 * k12;
  const double quad = (a * y(0) * y(0) - 2 * k12 * y(0) * y(1) + a * y(1) * y(1)) / det;
  const double want = 0.5 * quad + 0.5 * std::log(det) + std::log(2 * std::numbers::pi);
  EXPECT_NEAR(negative_log_marginal_likelihood(X, y, h), want, 1e-10);
}

TEST(Nlml, TargetScalingOnlyChangesQuadraticTerm) {
  RngStream rng(2, 2);
  const MatrixXd X = random_points(rng, 5, 1);
  VectorXd y(5);
  for (auto& v : y) v = rng.normal();
  const Hyperparams h{1.0, 0.3, 0.01};
  const SurrogateModel m = fit(X, y, h);
  const double quad = y.dot(m.alpha());
  for (double c : {0.0, 0.5, 3.0}) {
    const double diff = negative_log_marginal_likelihood(X, c * y, h) - negative_log_marginal_likelihood(X, y, h);
    EXPECT_NEAR(diff, 0.5 * (c * c - 1) * quad, 1e-9);
  }
}

TEST(LearnHyperparams, ConstantTargets) {
  MatrixXd X(5, 1);
  X << 0.05, 0.3, 0.5, 0.7, 0.95;
  const VectorXd y = VectorXd::Constant(5, 3.0);
  const Hyperparams h = learn_hyperparams(X, y, Hyperparams{});
  EXPECT_LT(h.sigma_n2, 0.01 * 9.0);
  const SurrogateModel m = fit(X, y, h);
  for (double q : {0.2, 0.5, 0.8}) EXPECT_NEAR(m.predict(VectorXd::Constant(1, q)).mean, 3.0, 0.15);
}

TEST(LearnHyperparams, RecoversLengthScaleOfSampledFunction) {
  // One draw from the GP prior with ell = 0.2 on 40 points in [0, 1].
  RngStream rng(2718, 0);
  const Hyperparams truth{1.0, 0.2, 1e-4};
  const int n = 40;
  MatrixXd X(n, 1);
  for (int i = 0; i < n; ++i) X(i, 0) = (i + rng.uniform()) / n;
  MatrixXd K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K(i, j) = matern32(X.row(i).transpose(), X.row(j).transpose(), truth);
  K.diagonal().array() += truth.sigma_n2;
  const MatrixXd L = K.llt().matrixL();
  VectorXd xi(n);
  for (auto& v : xi) v = rng.normal();
  const VectorXd y = L * xi;

  const Hyperparams h = learn_hyperparams(X, y, Hyperparams{1.0, 1.0, 0.1});
  EXPECT_GT(h.ell, truth.ell / 2);
  EXPECT_LT(h.ell, truth.ell * 2);
}

TEST(LearnHyperparams, ZeroTargetsPushAmplitudeToLowerBound) {
  MatrixXd X(2, 1);
  X << 0.2, 0.8;
  const Hyperparams h = learn_hyperparams(X, VectorXd::Zero(2), Hyperparams{});
  EXPECT_TRUE(std::isfinite(h.sigma0));
  EXPECT_LT(std::log(h.sigma0), -5.0);
  EXPECT_GE(std::log(h.sigma0), -6.0 - 1e-12);
}

TEST(LearnHyperparams, NeverWorseThanCurrent) {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd X = random_points(rng, 8, 2);
    VectorXd y(8);
    for (auto& v : y) v = std::abs(rng.normal());
    const Hyperparams current{std::exp(rng.normal()), 0.1 + 0.5 * rng.uniform(), 0.01};
    const Hyperparams learned = learn_hyperparams(X, y, current);
    EXPECT_LE(negative_log_marginal_likelihood(X, y, learned),
              negative_log_marginal_likelihood(X, y, current) + 1e-12);
  }
  EXPECT_THROW(learn_hyperparams(MatrixXd::Zero(1, 1), VectorXd::Zero(1), Hyperparams{}), InvalidArgument);
}

TEST(Fit, GramFactorsAcrossHyperparameterBox) {
  RngStream rng(64, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 3;
    const MatrixXd X = random_points(rng, 30, d);
    const Hyperparams h{std::exp(-6 + 12 * rng.uniform()), std::exp(-4 + 6 * rng.uniform()),
                        std::exp(-10 + 12 * rng.uniform())};
    EXPECT_NO_THROW(fit(X, VectorXd::Ones(30), h));
  }
}

TEST(SurrogateGrid, LatticeCsv) {
  MatrixXd X(3, 2);
  X << 0.1, 0.2, 0.5, 0.5, 0.9, 0.1;
  const SurrogateModel m = fit(X, (VectorXd(3) << 1, 0.2, 2).finished(), Hyperparams{});
  const SearchBox box{(VectorXd(2) << 0.01, 0.01).finished(), (VectorXd(2) << 10, 10).finished()};
  const auto path = std::filesystem::temp_directory_path() / "kftune_grid_test.csv";
  write_surrogate_grid_csv(path, m, box, {"V", "R"}, 5);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "V,R,mu,sigma");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 10), "0.01,0.01,");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 25);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace kftune
