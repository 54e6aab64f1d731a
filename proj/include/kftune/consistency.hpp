#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kftune/kalman.hpp"
#include "kftune/truth_sim.hpp"

namespace kftune {

/// Cost reported when the time-averaged statistic is zero (log undefined)
/// or when the filter cannot be run at a design point.
inline constexpr double kCostCap = 1e6;

/// e' P^-1 e with e = x_true - belief.mean.
double nees(const VectorXd& x_true, const GaussianBelief& belief);
/// e' S^-1 e.
double nis(const VectorXd& innovation, const MatrixXd& S);

/// Elementwise mean over runs. Every run must have the same length.
VectorXd average_stats(const std::vector<VectorXd>& per_run);

/// Regularized lower incomplete gamma P(a, x): series below a + 1, Lentz
/// continued fraction for the upper tail above.
double regularized_gamma_p(double a, double x);
double chi2_cdf(double x, double dof);
/// Quantile by bisection on chi2_cdf, absolute tolerance 1e-9.
double chi2_inverse_cdf(double p, double dof);

struct ChiSquareBounds {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const { return v >= lower && v <= upper; }
};

/// Two-sided (1 - alpha) acceptance region for the average of `runs`
/// independent chi2(dof) samples: N * avg ~ chi2(N * dof).
ChiSquareBounds chi2_bounds(double alpha, long runs, int dof);

/// |log(mean_k(avg_k) / dof)|, or kCostCap when the mean is zero.
double j_cost(const VectorXd& avg_stats, int dof);

struct ConsistencyRecord {
  VectorXd avg_nees;
  VectorXd avg_nis;
  long n_runs = 0;
  int nx = 0;
  int nz = 0;
  double alpha = 0.05;
  ChiSquareBounds bounds_nees;
  ChiSquareBounds bounds_nis;
  double j_nees = 0.0;
  double j_nis = 0.0;

  double fraction_nees_inside() const;
  double fraction_nis_inside() const;
};

/// Monte Carlo consistency check of `filter` against data from `truth`.
struct TrialSetup {
  long n_runs = 10;
  long horizon = 200;
  std::uint64_t master_seed = 0;
  std::uint64_t first_stream = 0;  // run i uses stream first_stream + i
  double alpha = 0.05;
  int threads = 1;
};

/// Runs are independent and merged in run order, so the result does not
/// depend on `threads`. Filter failures propagate as NotPositiveDefinite.
ConsistencyRecord run_consistency_trials(const DiscreteModel& filter, const DiscreteModel& truth,
                                         const GaussianBelief& init, const ControlProfile& control,
                                         const TrialSetup& setup);

/// Columns: k, avg_nees, nees_lo, nees_hi, avg_nis, nis_lo, nis_hi.
void write_consistency_csv(const std::filesystem::path& path, const ConsistencyRecord& rec);

}  // namespace kftune
