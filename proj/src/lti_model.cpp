#include "kftune/lti_model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "kftune/error.hpp"

namespace kftune {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

std::string shape(const MatrixXd& M) {
  return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

}  // namespace

MatrixXd symmetrize(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

bool is_psd(const MatrixXd& M, double rel_tol) {
  if (M.rows() != M.cols() || !M.allFinite()) return false;
  if (M.size() == 0) return true;
  const MatrixXd S = symmetrize(M);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -rel_tol * std::abs(S.trace());
}

MatrixXd clamp_psd(const MatrixXd& M, double rel_tol) {
  require(M.rows() == M.cols(), "clamp_psd: matrix must be square, got " + shape(M));
  MatrixXd S = symmetrize(M);
  if (S.size() == 0) return S;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
  const double floor = -rel_tol * std::abs(S.trace());
  if (eig.eigenvalues().minCoeff() < floor) {
    throw NotPositiveDefinite("matrix is not positive semidefinite (min eigenvalue " +
                              std::to_string(eig.eigenvalues().minCoeff()) + ")");
  }
  if (eig.eigenvalues().minCoeff() >= 0.0) return S;
  const VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
  return symmetrize(eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose());
}

void ContinuousModel::validate() const {
  const auto n = A.rows();
  require(n > 0 && A.cols() == n, "A must be square and non-empty, got " + shape(A));
  require(G.rows() == n, "G must have " + std::to_string(n) + " rows, got " + shape(G));
  require(Gamma.rows() == n, "Gamma must have " + std::to_string(n) + " rows, got " + shape(Gamma));
  require(H.cols() == n && H.rows() > 0, "H must be p x " + std::to_string(n) + ", got " + shape(H));
  require(V.rows() == Gamma.cols() && V.cols() == Gamma.cols(),
          "V must be " + std::to_string(Gamma.cols()) + "x" + std::to_string(Gamma.cols()) +
              ", got " + shape(V));
  require(W.rows() == H.rows() && W.cols() == H.rows(),
          "W must be " + std::to_string(H.rows()) + "x" + std::to_string(H.rows()) + ", got " +
              shape(W));
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  require(A.allFinite() && G.allFinite() && Gamma.allFinite() && H.allFinite() &&
              V.allFinite() && W.allFinite(),
          "model matrices must be finite");
  if (!is_psd(V)) throw NotPositiveDefinite("V must be symmetric positive semidefinite");
  if (symmetrize(W).llt().info() != Eigen::Success)
    throw NotPositiveDefinite("W must be symmetric positive definite");
}

void DiscreteModel::validate() const {
  const auto n = F.rows();
  require(n > 0 && F.cols() == n, "F must be square and non-empty, got " + shape(F));
  require(B.rows() == n, "B must have " + std::to_string(n) + " rows, got " + shape(B));
  require(H.cols() == n && H.rows() > 0, "H must be p x " + std::to_string(n) + ", got " + shape(H));
  require(Q.rows() == n && Q.cols() == n, "Q must be " + std::to_string(n) + "x" +
                                              std::to_string(n) + ", got " + shape(Q));
  require(R.rows() == H.rows() && R.cols() == H.rows(), "R must match the rows of H");
  if (!is_psd(Q)) throw NotPositiveDefinite("Q must be symmetric positive semidefinite");
  if (symmetrize(R).llt().info() != Eigen::Success)
    throw NotPositiveDefinite("R must be symmetric positive definite");
}

MatrixXd matrix_exponential(const MatrixXd& M) {
  require(M.rows() == M.cols(), "matrix_exponential: matrix must be square, got " + shape(M));
  require(M.allFinite(), "matrix_exponential: matrix has non-finite entries");
  const auto n = M.rows();
  if (n == 0) return M;

  // Scale so that the 1-norm is at most 1/2, where the Taylor series
  // converges to full precision in under 20 terms.
  const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const MatrixXd scaled = M / std::ldexp(1.0, squarings);

  MatrixXd sum = MatrixXd::Identity(n, n);
  MatrixXd term = MatrixXd::Identity(n, n);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int k = 1; k <= 40; ++k) {
    term = (term * scaled) / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= eps * sum.cwiseAbs().maxCoeff()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

ZohResult zoh_discretize(const ContinuousModel& cm) {
  const auto n = cm.A.rows();
  const auto m = cm.G.cols();
  require(cm.A.cols() == n && cm.G.rows() == n, "zoh_discretize: A and G shapes disagree");
  require(cm.dt > 0.0, "zoh_discretize: dt must be positive");

  MatrixXd aug = MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = cm.A * cm.dt;
  aug.topRightCorner(n, m) = cm.G * cm.dt;
  const MatrixXd phi = matrix_exponential(aug);
  return {phi.topLeftCorner(n, n), phi.topRightCorner(n, m)};
}

MatrixXd van_loan_q(const MatrixXd& A, const MatrixXd& Gamma, const MatrixXd& V, double dt) {
  const auto n = A.rows();
  require(A.cols() == n, "van_loan_q: A must be square, got " + shape(A));
  require(Gamma.rows() == n, "van_loan_q: Gamma must have " + std::to_string(n) + " rows");
  require(V.rows() == Gamma.cols() && V.cols() == Gamma.cols(),
          "van_loan_q: V must be " + std::to_string(Gamma.cols()) + " square, got " + shape(V));
  require(std::isfinite(dt) && dt > 0.0, "van_loan_q: dt must be positive");
  if (!is_psd(V)) throw NotPositiveDefinite("van_loan_q: V must be positive semidefinite");

  MatrixXd M = MatrixXd::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = -A * dt;
  M.topRightCorner(n, n) = Gamma * symmetrize(V) * Gamma.transpose() * dt;
  M.bottomRightCorner(n, n) = A.transpose() * dt;
  const MatrixXd phi = matrix_exponential(M);
  const MatrixXd phi12 = phi.topRightCorner(n, n);
  const MatrixXd phi22 = phi.bottomRightCorner(n, n);
  return clamp_psd(phi22.transpose() * phi12);
}

MatrixXd discretize_r(const MatrixXd& W, double dt) {
  require(std::isfinite(dt) && dt > 0.0, "discretize_r: dt must be positive");
  require(W.rows() == W.cols() && W.rows() > 0, "discretize_r: W must be square, got " + shape(W));
  if (symmetrize(W).llt().info() != Eigen::Success)
    throw NotPositiveDefinite("discretize_r: W must be positive definite");
  return symmetrize(W) / dt;
}

DiscreteModel discretize(const ContinuousModel& cm) {
  cm.validate();
  auto [F, B] = zoh_discretize(cm);
  DiscreteModel dm;
  dm.F = std::move(F);
  dm.B = std::move(B);
  dm.H = cm.H;
  dm.Q = van_loan_q(cm.A, cm.Gamma, cm.V, cm.dt);
  dm.R = discretize_r(cm.W, cm.dt);
  dm.dt = cm.dt;
  return dm;
}

}  // namespace kftune
