#include "kftune/truth_sim.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "kftune/csv.hpp"
#include "kftune/error.hpp"

namespace kftune {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed),
      stream_id_(stream_id),
      engine_(splitmix64(splitmix64(master_seed) ^ splitmix64(~stream_id))) {}

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("RngStream::below: n must be positive");
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

GaussianSampler::GaussianSampler(const MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw InvalidArgument("GaussianSampler: covariance must be square");
  if (!cov.allFinite()) throw InvalidArgument("GaussianSampler: covariance has non-finite entries");
  const MatrixXd S = symmetrize(cov);
  const auto n = S.rows();
  if (n == 0 || S.cwiseAbs().maxCoeff() == 0.0) {
    zero_ = true;
    factor_ = MatrixXd::Zero(n, n);
    return;
  }
  Eigen::LDLT<MatrixXd> ldlt(S);
  VectorXd d = ldlt.vectorD();
  const double tol = 1e-12 * std::abs(S.trace());
  if (d.minCoeff() < -tol)
    throw NotPositiveDefinite("GaussianSampler: covariance is not positive semidefinite");
  d = d.cwiseMax(0.0).cwiseSqrt();
  // S = P' L D L' P, so P' L sqrt(D) is a square root of S.
  const MatrixXd L = ldlt.matrixL();
  factor_ = ldlt.transpositionsP().transpose() * (L * d.asDiagonal());
}

VectorXd GaussianSampler::draw(RngStream& rng) const {
  const auto n = factor_.rows();
  VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi(i) = rng.normal();
  if (zero_) return VectorXd::Zero(n);
  return factor_ * xi;
}

VectorXd sample_gaussian(const VectorXd& mean, const MatrixXd& cov, RngStream& rng) {
  if (mean.size() != cov.rows())
    throw InvalidArgument("sample_gaussian: mean and covariance sizes differ");
  return mean + GaussianSampler(cov).draw(rng);
}

VectorXd control_input(double k, const ControlProfile& profile, int input_dim) {
  return VectorXd::Constant(input_dim, profile.amplitude * std::cos(profile.frequency * k));
}

Trajectory simulate_truth(const DiscreteModel& truth, const GaussianBelief& init, long steps,
                          const ControlProfile& control, RngStream& rng) {
  if (steps < 1) throw InvalidArgument("simulate_truth: need at least one step");
  const auto n = truth.state_dim();
  const auto p = truth.meas_dim();
  const auto m = truth.input_dim();
  if (init.mean.size() != n || init.cov.rows() != n)
    throw InvalidArgument("simulate_truth: initial belief has the wrong dimension");

  const GaussianSampler process(truth.Q);
  const GaussianSampler meas(truth.R);

  Trajectory traj;
  traj.states.resize(steps, n);
  traj.measurements.resize(steps, p);
  traj.controls.resize(steps, m);

  VectorXd x = sample_gaussian(init.mean, init.cov, rng);
  traj.initial_state = x;
  for (long k = 1; k <= steps; ++k) {
    const VectorXd u = control_input(static_cast<double>(k), control, m);
    x = truth.F * x + truth.B * u + process.draw(rng);
    const VectorXd z = truth.H * x + meas.draw(rng);
    traj.states.row(k - 1) = x.transpose();
    traj.measurements.row(k - 1) = z.transpose();
    traj.controls.row(k - 1) = u.transpose();
  }
  return traj;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::vector<std::string> header{"k"};
  for (Eigen::Index i = 0; i < traj.states.cols(); ++i) header.push_back("x" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < traj.measurements.cols(); ++i)
    header.push_back("z" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < traj.controls.cols(); ++i)
    header.push_back("u" + std::to_string(i + 1));

  CsvWriter csv(path, header);
  for (long k = 0; k < traj.steps(); ++k) {
    csv.field(k + 1);
    for (Eigen::Index i = 0; i < traj.states.cols(); ++i) csv.field(traj.states(k, i));
    for (Eigen::Index i = 0; i < traj.measurements.cols(); ++i) csv.field(traj.measurements(k, i));
    for (Eigen::Index i = 0; i < traj.controls.cols(); ++i) csv.field(traj.controls(k, i));
    csv.end_row();
  }
}

}  // namespace kftune
