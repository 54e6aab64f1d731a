#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kftune/acquisition.hpp"
#include "kftune/consistency.hpp"
#include "kftune/gp_surrogate.hpp"
#include "kftune/lti_model.hpp"
#include "kftune/truth_sim.hpp"

namespace kftune {

enum class ParamRole {
  ProcessNoiseIntensity,    // diagonal entry `index` of V
  MeasurementNoiseVariance  // diagonal entry `index` of the discrete R
};

enum class CostKind { Nees, Nis };

std::string to_string(ParamRole role);
std::string to_string(CostKind kind);

struct DesignParameter {
  std::string name;
  ParamRole role = ParamRole::ProcessNoiseIntensity;
  double lower = 0.0;
  double upper = 1.0;
  int index = 0;
};

/// The tunable filter parameters and the cost they are scored by.
struct DesignSpec {
  std::vector<DesignParameter> parameters;
  CostKind cost_kind = CostKind::Nees;

  int dim() const { return static_cast<int>(parameters.size()); }
  SearchBox box() const;
  std::vector<std::string> names() const;
  void validate() const;
};

struct TunerConfig {
  long n_runs = 10;       // Monte Carlo runs per cost evaluation
  long horizon = 200;     // steps per run
  int n_seed = 5;         // initial Latin-hypercube points
  int max_iterations = 35;
  double alpha = 0.05;    // chi-square bound rate, reporting only
  std::uint64_t master_seed = 1;
  long acquisition_budget = 1000;  // DIRECT evaluations per EI maximization
  long hyper_budget = 200;         // DIRECT evaluations per hyperparameter fit
  double stall_tolerance = 1e-4;
  int stall_window = 15;           // 0 disables stall termination
  bool common_random_numbers = false;
  bool center_targets = false;
  int threads = 1;
  Hyperparams initial_hyper{1.0, 0.2, 0.01};

  void validate() const;
};

/// True plant, filter initialization and control input of a tuning problem.
struct Scenario {
  ContinuousModel truth;
  GaussianBelief init;
  ControlProfile control;

  void validate() const;
};

struct Evaluation {
  int iteration = 0;   // 0 for seed points
  long eval_index = 0; // position in the evaluation sequence, selects the RNG streams
  VectorXd q;
  double cost = 0.0;
  bool failed = false;
};

struct TuningSession {
  DesignSpec spec;
  TunerConfig config;
  std::vector<Evaluation> history;
  std::vector<double> incumbent_trace;  // incumbent cost after each history entry
  std::vector<Hyperparams> hyper_trace; // hyperparameters used at each iteration
  std::optional<SurrogateModel> surrogate;
  int iterations = 0;
  std::string termination;

  const Evaluation& incumbent() const;
};

/// Latin hypercube: one point per stratum in every dimension, strata paired
/// by independent random permutations, uniform jitter within each stratum.
std::vector<VectorXd> seed_design(const SearchBox& box, int n_seed, RngStream& rng);

/// Discrete filter model for design point q: true F, B, H; Q from Van Loan
/// on the candidate V; R from the candidate R (both default to the truth).
DiscreteModel candidate_filter(const VectorXd& q, const DesignSpec& spec, const Scenario& scenario);

/// First RNG stream id used by evaluation `eval_index`.
std::uint64_t evaluation_stream(long eval_index, const TunerConfig& config);

/// Monte Carlo consistency record for design point q, as used by the cost.
ConsistencyRecord evaluate_consistency(const VectorXd& q, const DesignSpec& spec,
                                       const TunerConfig& config, const Scenario& scenario,
                                       long eval_index);

/// J_NEES or J_NIS at q. Filter failures are reported as kCostCap.
double evaluate_cost(const VectorXd& q, const DesignSpec& spec, const TunerConfig& config,
                     const Scenario& scenario, long eval_index);

/// Gaussian-process Bayesian optimization of the filter tuning cost.
TuningSession run_gpbo(const DesignSpec& spec, const TunerConfig& config, const Scenario& scenario);

/// Columns: iteration, <parameter names>, cost, incumbent_cost.
void write_history_csv(const std::filesystem::path& path, const TuningSession& session);

/// Robot on a 1D track: double integrator, position measurements,
/// u_k = 2 cos(0.075 k), dt = 0.1 s, V = 1, W = 0.1 (R = 1).
Scenario robot_scenario();

}  // namespace kftune
