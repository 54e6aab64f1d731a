#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kftune/direct.hpp"

namespace kftune {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Matern-3/2 kernel amplitude, length-scale and observation noise variance.
struct Hyperparams {
  double sigma0 = 1.0;
  double ell = 0.2;
  double sigma_n2 = 0.01;

  void validate() const;
};

/// sigma0 * (1 + sqrt(3) r / ell) * exp(-sqrt(3) r / ell), r = |q1 - q2|.
double matern32(const VectorXd& q1, const VectorXd& q2, const Hyperparams& hyper);

struct Prediction {
  double mean = 0.0;
  double var = 0.0;
};

/// Zero-mean GP posterior conditioned on noisy observations.
///
/// Immutable once built by fit(). Inputs are rows of an n x d matrix in the
/// unit box. With `center_targets` the sample mean of the targets is used as
/// a constant prior mean instead of zero.
class SurrogateModel {
 public:
  const MatrixXd& inputs() const { return inputs_; }
  const VectorXd& targets() const { return targets_; }
  const Hyperparams& hyper() const { return hyper_; }
  /// Lower Cholesky factor of K + (sigma_n2 + jitter) I.
  const MatrixXd& chol() const { return chol_; }
  const VectorXd& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }
  double prior_mean() const { return offset_; }
  long size() const { return inputs_.rows(); }
  int dim() const { return static_cast<int>(inputs_.cols()); }

  /// Latent posterior mean and variance (variance clamped at 0).
  Prediction predict(const VectorXd& q) const;

 private:
  friend SurrogateModel fit(const MatrixXd&, const VectorXd&, const Hyperparams&, bool);

  MatrixXd inputs_;
  VectorXd targets_;
  Hyperparams hyper_;
  MatrixXd chol_;
  VectorXd alpha_;
  double jitter_ = 0.0;
  double offset_ = 0.0;
};

/// Factor K + sigma_n2 I with a 1e-10 sigma0 diagonal jitter, escalated
/// once by x100 on failure. Throws NotPositiveDefinite if that still fails,
/// and InvalidArgument for coincident inputs when sigma_n2 == 0.
SurrogateModel fit(const MatrixXd& inputs, const VectorXd& targets, const Hyperparams& hyper,
                   bool center_targets = false);

double negative_log_marginal_likelihood(const MatrixXd& inputs, const VectorXd& targets,
                                        const Hyperparams& hyper, bool center_targets = false);

/// Search box for log(sigma0), log(ell), log(sigma_n2).
struct HyperparamBounds {
  double log_sigma0_lo = -6.0, log_sigma0_hi = 6.0;
  double log_ell_lo = -4.0, log_ell_hi = 2.0;
  double log_noise_lo = -10.0, log_noise_hi = 2.0;
};

/// Maximum-likelihood hyperparameters: DIRECT over the log-parameter box,
/// then whichever of the optimum and `current` has the lower NLML.
Hyperparams learn_hyperparams(const MatrixXd& inputs, const VectorXd& targets,
                              const Hyperparams& current, long budget = 200,
                              bool center_targets = false, const HyperparamBounds& bounds = {});

/// Writes q_1..q_d (box units), mu, sigma on a regular lattice with
/// `points_per_dim` points along each axis of `box`.
void write_surrogate_grid_csv(const std::filesystem::path& path, const SurrogateModel& model,
                              const SearchBox& box, const std::vector<std::string>& names,
                              int points_per_dim);

}  // namespace kftune
