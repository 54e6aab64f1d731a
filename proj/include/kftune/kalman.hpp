#pragma once

#include "kftune/lti_model.hpp"

namespace kftune {

/// Filter belief: mean and covariance of the state estimate.
struct GaussianBelief {
  VectorXd mean;
  MatrixXd cov;
};

struct UpdateResult {
  GaussianBelief belief;
  VectorXd innovation;   // e = z - H x_pred
  MatrixXd innovation_cov;  // S = H P H' + R
};

/// Time update: mean <- F mean + B u, cov <- F cov F' + Q.
GaussianBelief predict(const GaussianBelief& prior, const DiscreteModel& dm, const VectorXd& u);

/// Measurement update. S^-1 is only ever applied through a Cholesky solve;
/// throws NotPositiveDefinite when S does not factor.
UpdateResult update(const GaussianBelief& pred, const DiscreteModel& dm, const VectorXd& z);

}  // namespace kftune
