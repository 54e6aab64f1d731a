#include "kftune/kalman.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "kftune/error.hpp"
#include "kftune/truth_sim.hpp"
#include "kftune/tuner.hpp"
#include "test_util.hpp"

namespace kftune {
namespace {

using testing::random_matrix;
using testing::random_spd;

DiscreteModel scalar_model(double F, double Q, double H, double R) {
  DiscreteModel dm;
  dm.F = MatrixXd::Constant(1, 1, F);
  dm.B = MatrixXd::Zero(1, 1);
  dm.H = MatrixXd::Constant(1, 1, H);
  dm.Q = MatrixXd::Constant(1, 1, Q);
  dm.R = MatrixXd::Constant(1, 1, R);
  dm.dt = 1.0;
  return dm;
}

GaussianBelief scalar_belief(double x, double P) {
  return {VectorXd::Constant(1, x), MatrixXd::Constant(1, 1, P)};
}

TEST(Predict, IdentityDynamicsLeaveBeliefUnchanged) {
  DiscreteModel dm;
  dm.F = MatrixXd::Identity(2, 2);
  dm.B = MatrixXd::Zero(2, 1);
  dm.Q = MatrixXd::Zero(2, 2);
  dm.H = MatrixXd::Ones(1, 2);
  dm.R = MatrixXd::Ones(1, 1);
  const GaussianBelief prior{(VectorXd(2) << 1, -2).finished(),
                             (MatrixXd(2, 2) << 2, 0.5, 0.5, 1).finished()};
  const GaussianBelief out = predict(prior, dm, VectorXd::Constant(1, 3.0));
  EXPECT_EQ(out.mean, prior.mean);
  EXPECT_EQ(out.cov, prior.cov);
}

TEST(Predict, ScalarArithmetic) {
  const GaussianBelief out = predict(scalar_belief(1.0, 1.0), scalar_model(2.0, 0.5, 1, 1),
                                     VectorXd::Zero(1));
  EXPECT_DOUBLE_EQ(out.mean(0), 2.0);
  EXPECT_DOUBLE_EQ(out.cov(0, 0), 4.5);
}

TEST(Predict, RobotControlInput) {
  const DiscreteModel dm = discretize(robot_scenario().truth);
  const GaussianBelief prior{VectorXd::Zero(2), MatrixXd::Identity(2, 2)};
  const GaussianBelief out = predict(prior, dm, VectorXd::Constant(1, 2.0));
  EXPECT_NEAR(out.mean(0), 0.01, 1e-15);
  EXPECT_NEAR(out.mean(1), 0.2, 1e-15);
}

TEST(Predict, RejectsShapeMismatch) {
  const DiscreteModel dm = discretize(robot_scenario().truth);
  EXPECT_THROW(predict(scalar_belief(0, 1), dm, VectorXd::Zero(1)), InvalidArgument);
  const GaussianBelief b{VectorXd::Zero(2), MatrixXd::Identity(2, 2)};
  EXPECT_THROW(predict(b, dm, VectorXd::Zero(2)), InvalidArgument);
}

TEST(Update, ScalarOracle) {
  const UpdateResult r = update(scalar_belief(0.0, 1.0), scalar_model(1, 0, 1, 1),
                                VectorXd::Constant(1, 2.0));
  EXPECT_DOUBLE_EQ(r.innovation_cov(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(r.innovation(0), 2.0);
  EXPECT_DOUBLE_EQ(r.belief.mean(0), 1.0);  // K = 0.5
  EXPECT_DOUBLE_EQ(r.belief.cov(0, 0), 0.5);
}

TEST(Update, UninformativeMeasurement) {
  const UpdateResult r = update(scalar_belief(3.0, 2.0), scalar_model(1, 0, 1, 1e12),
                                VectorXd::Constant(1, 100.0));
  EXPECT_NEAR(r.belief.mean(0), 3.0, 1e-9);
  EXPECT_NEAR(r.belief.cov(0, 0), 2.0, 1e-9);
}

TEST(Update, ZeroInnovationKeepsMean) {
  const DiscreteModel dm = discretize(robot_scenario().truth);
  const GaussianBelief pred{(VectorXd(2) << 1.5, -0.3).finished(), MatrixXd::Identity(2, 2)};
  const UpdateResult r = update(pred, dm, dm.H * pred.mean);
  EXPECT_EQ(r.innovation(0), 0.0);
  EXPECT_TRUE(r.belief.mean.isApprox(pred.mean));
}

TEST(Update, SingularInnovationCovarianceIsAnError) {
  EXPECT_THROW(update(scalar_belief(0, 0), scalar_model(1, 0, 1, 0), VectorXd::Ones(1)),
               NotPositiveDefinite);
}

// Random PD instance: P (n x n), H (p x n), R (p x p).
struct Instance {
  GaussianBelief pred;
  DiscreteModel dm;
};

Instance random_instance(std::mt19937_64& gen, int n, int p) {
  Instance in;
  in.pred.mean = random_matrix(gen, n, 1);
  in.pred.cov = random_spd(gen, n);
  in.dm.F = MatrixXd::Identity(n, n);
  in.dm.B = MatrixXd::Zero(n, 1);
  in.dm.Q = MatrixXd::Zero(n, n);
  in.dm.H = random_matrix(gen, p, n);
  in.dm.R = random_spd(gen, p);
  return in;
}

TEST(Update, PosteriorCovarianceNeverExceedsPrediction) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = random_instance(gen, 1 + trial % 4, 1 + trial % 3);
    const UpdateResult r = update(in.pred, in.dm, random_matrix(gen, in.dm.H.rows(), 1));
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(in.pred.cov - r.belief.cov);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(Update, MatchesJosephForm) {
  std::mt19937_64 gen(19);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = random_instance(gen, 1 + trial % 4, 1 + trial % 3);
    const UpdateResult r = update(in.pred, in.dm, random_matrix(gen, in.dm.H.rows(), 1));
    const MatrixXd& P = in.pred.cov;
    const MatrixXd& H = in.dm.H;
    const MatrixXd S = H * P * H.transpose() + in.dm.R;
    const MatrixXd K = P * H.transpose() * S.inverse();
    const MatrixXd I = MatrixXd::Identity(P.rows(), P.rows());
    const MatrixXd joseph = (I - K * H) * P * (I - K * H).transpose() + K * in.dm.R * K.transpose();
    EXPECT_LT((r.belief.cov - joseph).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Update, InnovationsAreWhiteUnderMatchedModel) {
  const Scenario sc = robot_scenario();
  const DiscreteModel dm = discretize(sc.truth);
  double lag0 = 0.0, lag1 = 0.0;
  for (int run = 0; run < 50; ++run) {
    RngStream rng(2024, run);
    const Trajectory traj = simulate_truth(dm, sc.init, 200, sc.control, rng);
    GaussianBelief belief = sc.init;
    double prev = 0.0;
    for (long k = 0; k < traj.steps(); ++k) {
      const GaussianBelief pred = predict(belief, dm, traj.controls.row(k).transpose());
      const UpdateResult up = update(pred, dm, traj.measurements.row(k).transpose());
      const double e = up.innovation(0) / std::sqrt(up.innovation_cov(0, 0));
      lag0 += e * e;
      if (k > 0) lag1 += e * prev;
      prev = e;
      belief = up.belief;
    }
  }
  EXPECT_LE(std::abs(lag1 / lag0), 0.15);
}

}  // namespace
}  // namespace kftune
