#pragma once

#include <Eigen/Dense>

namespace kftune {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Continuous-time LTI plant
///   dx/dt = A x + G u + Gamma v,   z = H x + w
/// with white noise intensities V (process) and W (measurement).
struct ContinuousModel {
  MatrixXd A;      // n x n, 1/s
  MatrixXd G;      // n x m
  MatrixXd Gamma;  // n x w
  MatrixXd H;      // p x n
  MatrixXd V;      // w x w, symmetric PSD
  MatrixXd W;      // p x p, symmetric PD
  double dt = 0.0;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(G.cols()); }
  int meas_dim() const { return static_cast<int>(H.rows()); }

  /// Throws InvalidArgument / NotPositiveDefinite when the invariants fail.
  void validate() const;
};

/// Discrete-time model x_k = F x_{k-1} + B u_k + v_k,  z_k = H x_k + w_k.
struct DiscreteModel {
  MatrixXd F;
  MatrixXd B;
  MatrixXd H;
  MatrixXd Q;
  MatrixXd R;
  double dt = 0.0;

  int state_dim() const { return static_cast<int>(F.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
  int meas_dim() const { return static_cast<int>(H.rows()); }

  void validate() const;
};

struct ZohResult {
  MatrixXd F;
  MatrixXd B;
};

/// e^M by scaling and squaring of a truncated Taylor series.
MatrixXd matrix_exponential(const MatrixXd& M);

/// F = e^(A dt), B = (int_0^dt e^(A s) ds) G from exp([[A, G], [0, 0]] dt).
ZohResult zoh_discretize(const ContinuousModel& cm);

/// Discrete process noise covariance by Van Loan's construction. The result
/// is symmetrized and tiny negative eigenvalues (>= -1e-12 trace) clamped.
MatrixXd van_loan_q(const MatrixXd& A, const MatrixXd& Gamma, const MatrixXd& V, double dt);

/// R = W / dt.
MatrixXd discretize_r(const MatrixXd& W, double dt);

/// Full discretization of a continuous model.
DiscreteModel discretize(const ContinuousModel& cm);

// Small helpers shared across modules.
MatrixXd symmetrize(const MatrixXd& M);
bool is_psd(const MatrixXd& M, double rel_tol = 1e-12);
/// Symmetrize, check PSD within rel_tol * trace and clamp negative eigenvalues.
MatrixXd clamp_psd(const MatrixXd& M, double rel_tol = 1e-12);

}  // namespace kftune
