#include "kftune/kalman.hpp"

#include <string>

#include "kftune/error.hpp"

namespace kftune {

GaussianBelief predict(const GaussianBelief& prior, const DiscreteModel& dm, const VectorXd& u) {
  const auto n = dm.F.rows();
  if (prior.mean.size() != n || prior.cov.rows() != n || prior.cov.cols() != n)
    throw InvalidArgument("predict: belief dimension does not match F (" + std::to_string(n) + ")");
  if (u.size() != dm.B.cols())
    throw InvalidArgument("predict: control has " + std::to_string(u.size()) +
                          " entries, B expects " + std::to_string(dm.B.cols()));
  GaussianBelief out;
  out.mean = dm.F * prior.mean + dm.B * u;
  out.cov = symmetrize(dm.F * prior.cov * dm.F.transpose() + dm.Q);
  return out;
}

UpdateResult update(const GaussianBelief& pred, const DiscreteModel& dm, const VectorXd& z) {
  const auto n = dm.H.cols();
  const auto p = dm.H.rows();
  if (pred.mean.size() != n || pred.cov.rows() != n || pred.cov.cols() != n)
    throw InvalidArgument("update: belief dimension does not match H");
  if (z.size() != p)
    throw InvalidArgument("update: measurement has " + std::to_string(z.size()) +
                          " entries, H expects " + std::to_string(p));

  UpdateResult out;
  const MatrixXd PHt = pred.cov * dm.H.transpose();
  out.innovation_cov = symmetrize(dm.H * PHt + dm.R);
  Eigen::LLT<MatrixXd> llt(out.innovation_cov);
  if (llt.info() != Eigen::Success || !out.innovation_cov.allFinite())
    throw NotPositiveDefinite("update: innovation covariance is not positive definite");

  // K = P H' S^-1  <=>  S K' = H P
  const MatrixXd K = llt.solve(PHt.transpose()).transpose();
  out.innovation = z - dm.H * pred.mean;
  out.belief.mean = pred.mean + K * out.innovation;
  out.belief.cov = symmetrize(pred.cov - K * out.innovation_cov * K.transpose());
  return out;
}

}  // namespace kftune
