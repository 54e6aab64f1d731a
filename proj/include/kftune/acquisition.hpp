#pragma once

#include "kftune/direct.hpp"
#include "kftune/gp_surrogate.hpp"

namespace kftune {

/// Standard normal CDF and PDF.
double normal_cdf(double z);
double normal_pdf(double z);

/// Expected improvement below `f_best` for a Gaussian prediction N(mean, sd^2):
/// (f_best - mean) Phi(Z) + sd phi(Z) with Z = (f_best - mean) / sd, and 0
/// when sd == 0.
double expected_improvement(double mean, double sd, double f_best);

/// EI of the surrogate's latent posterior at `q` (unit-box coordinates).
double expected_improvement(const VectorXd& q, const SurrogateModel& model, double f_best);

struct AcquisitionResult {
  VectorXd q;  // unit-box coordinates
  double ei = 0.0;
  long evaluations = 0;
};

/// Maximizes EI over the unit box with DIRECT applied to -EI.
AcquisitionResult maximize_expected_improvement(const SurrogateModel& model, double f_best,
                                                long budget);

}  // namespace kftune
