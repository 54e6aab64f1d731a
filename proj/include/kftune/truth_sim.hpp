#pragma once

#include <cstdint>
#include <filesystem>
#include <random>

#include "kftune/kalman.hpp"
#include "kftune/lti_model.hpp"

namespace kftune {

/// Reproducible random stream keyed by (master_seed, stream_id).
///
/// The engine seed is a SplitMix64 hash of the pair, so stream k produces the
/// same numbers no matter how many other streams exist or in which order they
/// are consumed. Normals come from Box-Muller on 53-bit uniforms (the spare
/// value is cached), which keeps sequences identical across standard
/// libraries; std::normal_distribution does not guarantee that.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform on [0, 1).
  double uniform();
  double normal();
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Draws from N(0, cov) using a pivoted LDL' factor with negative pivots
/// clamped to zero, so semidefinite covariances are accepted.
class GaussianSampler {
 public:
  explicit GaussianSampler(const MatrixXd& cov);
  VectorXd draw(RngStream& rng) const;
  const MatrixXd& factor() const { return factor_; }

 private:
  MatrixXd factor_;
  bool zero_ = false;
};

VectorXd sample_gaussian(const VectorXd& mean, const MatrixXd& cov, RngStream& rng);

/// u_k = amplitude * cos(frequency * k) in every input channel.
struct ControlProfile {
  double amplitude = 2.0;
  double frequency = 0.075;  // rad per step
};

VectorXd control_input(double k, const ControlProfile& profile, int input_dim = 1);

struct Trajectory {
  VectorXd initial_state;  // x_0
  MatrixXd states;         // T x n, row k-1 holds x_k
  MatrixXd measurements;   // T x p
  MatrixXd controls;       // T x m

  long steps() const { return states.rows(); }
};

/// Draw order: x_0 (n normals), then for k = 1..T the process noise v_k
/// (n normals) followed by the measurement noise w_k (p normals).
Trajectory simulate_truth(const DiscreteModel& truth, const GaussianBelief& init, long steps,
                          const ControlProfile& control, RngStream& rng);

/// CSV columns: k, x1..xn, z1..zp, u1..um.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace kftune
