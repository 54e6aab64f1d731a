#include "kftune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kftune/csv.hpp"
#include "kftune/error.hpp"

namespace kftune {

namespace {

// Stream reserved for the seed design, far from the evaluation streams.
constexpr std::uint64_t kDesignStream = std::uint64_t{1} << 63;

MatrixXd to_unit_rows(const std::vector<Evaluation>& history, const SearchBox& box) {
  MatrixXd U(static_cast<Eigen::Index>(history.size()), box.dim());
  for (std::size_t i = 0; i < history.size(); ++i)
    U.row(static_cast<Eigen::Index>(i)) = box.to_unit(history[i].q).cwiseMax(0.0).cwiseMin(1.0).transpose();
  return U;
}

VectorXd costs(const std::vector<Evaluation>& history) {
  VectorXd y(static_cast<Eigen::Index>(history.size()));
  for (std::size_t i = 0; i < history.size(); ++i) y(static_cast<Eigen::Index>(i)) = history[i].cost;
  return y;
}

// Fit, raising the noise floor if the Gram matrix refuses to factor.
SurrogateModel robust_fit(const MatrixXd& U, const VectorXd& y, Hyperparams& hyper, bool center) {
  for (int attempt = 0;; ++attempt) {
    try {
      return fit(U, y, hyper, center);
    } catch (const Error&) {
      if (attempt >= 8) throw;
      hyper.sigma_n2 = std::max(hyper.sigma_n2 * 10.0, 1e-6 * hyper.sigma0);
    }
  }
}

}  // namespace

std::string to_string(ParamRole role) {
  switch (role) {
    case ParamRole::ProcessNoiseIntensity: return "process_noise_intensity";
    case ParamRole::MeasurementNoiseVariance: return "measurement_noise_variance";
  }
  return "unknown";
}

std::string to_string(CostKind kind) { return kind == CostKind::Nees ? "nees" : "nis"; }

SearchBox DesignSpec::box() const {
  SearchBox b{VectorXd(dim()), VectorXd(dim())};
  for (int i = 0; i < dim(); ++i) {
    b.lower(i) = parameters[i].lower;
    b.upper(i) = parameters[i].upper;
  }
  return b;
}

std::vector<std::string> DesignSpec::names() const {
  std::vector<std::string> out;
  for (const auto& p : parameters) out.push_back(p.name);
  return out;
}

void DesignSpec::validate() const {
  if (parameters.empty() || parameters.size() > 8)
    throw InvalidArgument("design must have between 1 and 8 parameters");
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    const auto& p = parameters[i];
    if (p.name.empty()) throw InvalidArgument("design parameter " + std::to_string(i) + " has no name");
    if (!(p.lower < p.upper) || !std::isfinite(p.lower) || !std::isfinite(p.upper))
      throw InvalidArgument("design parameter '" + p.name + "' needs finite lower < upper");
    if (p.lower < 0.0)
      throw InvalidArgument("design parameter '" + p.name + "' is a variance and cannot go below 0");
    if (p.role == ParamRole::MeasurementNoiseVariance && p.lower <= 0.0)
      throw InvalidArgument("design parameter '" + p.name +
                            "' is a measurement variance and needs a positive lower bound");
    if (p.index < 0) throw InvalidArgument("design parameter '" + p.name + "' has a negative index");
    for (std::size_t j = 0; j < i; ++j)
      if (parameters[j].role == p.role && parameters[j].index == p.index)
        throw InvalidArgument("design parameters '" + parameters[j].name + "' and '" + p.name +
                              "' set the same matrix entry");
  }
}

void TunerConfig::validate() const {
  if (n_runs < 1) throw InvalidArgument("n_runs must be at least 1");
  if (horizon < 1) throw InvalidArgument("horizon must be at least 1");
  if (n_seed < 2) throw InvalidArgument("n_seed must be at least 2");
  if (max_iterations < 0) throw InvalidArgument("max_iterations must be non-negative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (acquisition_budget < 1) throw InvalidArgument("acquisition_budget must be positive");
  if (hyper_budget < 1) throw InvalidArgument("hyper_budget must be positive");
  if (stall_window < 0) throw InvalidArgument("stall_window must be non-negative");
  if (!(stall_tolerance >= 0.0)) throw InvalidArgument("stall_tolerance must be non-negative");
  if (threads < 1) throw InvalidArgument("threads must be at least 1");
  initial_hyper.validate();
}

void Scenario::validate() const {
  truth.validate();
  const auto n = truth.state_dim();
  if (init.mean.size() != n || init.cov.rows() != n || init.cov.cols() != n)
    throw InvalidArgument("initial state must match the state dimension " + std::to_string(n));
  if (symmetrize(init.cov).llt().info() != Eigen::Success)
    throw NotPositiveDefinite("initial covariance must be positive definite");
}

const Evaluation& TuningSession::incumbent() const {
  if (history.empty()) throw Error("session has no evaluations");
  auto it = std::min_element(history.begin(), history.end(),
                             [](const Evaluation& a, const Evaluation& b) { return a.cost < b.cost; });
  return *it;
}

std::vector<VectorXd> seed_design(const SearchBox& box, int n_seed, RngStream& rng) {
  box.validate();
  if (n_seed < 2) throw InvalidArgument("seed_design: n_seed must be at least 2");
  const int d = box.dim();
  std::vector<VectorXd> unit(n_seed, VectorXd(d));
  std::vector<int> perm(n_seed);
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n_seed - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    for (int i = 0; i < n_seed; ++i) unit[i](j) = (perm[i] + rng.uniform()) / n_seed;
  }
  std::vector<VectorXd> out;
  out.reserve(n_seed);
  for (const auto& u : unit) out.push_back(box.from_unit(u));
  return out;
}

DiscreteModel candidate_filter(const VectorXd& q, const DesignSpec& spec, const Scenario& scenario) {
  if (q.size() != spec.dim())
    throw InvalidArgument("design point has " + std::to_string(q.size()) + " entries, design has " +
                          std::to_string(spec.dim()));
  const ContinuousModel& cm = scenario.truth;
  MatrixXd V = cm.V;
  MatrixXd R = discretize_r(cm.W, cm.dt);
  for (int i = 0; i < spec.dim(); ++i) {
    const auto& p = spec.parameters[i];
    MatrixXd& target = p.role == ParamRole::ProcessNoiseIntensity ? V : R;
    if (p.index >= target.rows())
      throw InvalidArgument("design parameter '" + p.name + "' index is out of range");
    target(p.index, p.index) = q(i);
  }
  const ZohResult zoh = zoh_discretize(cm);
  DiscreteModel dm;
  dm.F = zoh.F;
  dm.B = zoh.B;
  dm.H = cm.H;
  dm.Q = van_loan_q(cm.A, cm.Gamma, V, cm.dt);
  dm.R = R;
  dm.dt = cm.dt;
  return dm;
}

std::uint64_t evaluation_stream(long eval_index, const TunerConfig& config) {
  if (config.common_random_numbers) return 0;
  return static_cast<std::uint64_t>(eval_index) * static_cast<std::uint64_t>(config.n_runs);
}

ConsistencyRecord evaluate_consistency(const VectorXd& q, const DesignSpec& spec,
                                       const TunerConfig& config, const Scenario& scenario,
                                       long eval_index) {
  const DiscreteModel truth = discretize(scenario.truth);
  const DiscreteModel filter = candidate_filter(q, spec, scenario);
  TrialSetup setup;
  setup.n_runs = config.n_runs;
  setup.horizon = config.horizon;
  setup.master_seed = config.master_seed;
  setup.first_stream = evaluation_stream(eval_index, config);
  setup.alpha = config.alpha;
  setup.threads = config.threads;
  return run_consistency_trials(filter, truth, scenario.init, scenario.control, setup);
}

double evaluate_cost(const VectorXd& q, const DesignSpec& spec, const TunerConfig& config,
                     const Scenario& scenario, long eval_index) {
  try {
    const ConsistencyRecord rec = evaluate_consistency(q, spec, config, scenario, eval_index);
    return spec.cost_kind == CostKind::Nees ? rec.j_nees : rec.j_nis;
  } catch (const NotPositiveDefinite&) {
    return kCostCap;
  }
}

TuningSession run_gpbo(const DesignSpec& spec, const TunerConfig& config, const Scenario& scenario) {
  spec.validate();
  config.validate();
  scenario.validate();
  const SearchBox box = spec.box();

  TuningSession session;
  session.spec = spec;
  session.config = config;

  long eval_index = 0;
  auto record = [&](const VectorXd& q, int iteration) {
    Evaluation e;
    e.iteration = iteration;
    e.eval_index = eval_index;
    e.q = q;
    try {
      e.cost = evaluate_cost(q, spec, config, scenario, eval_index);
    } catch (const Error&) {
      e.cost = kCostCap;
    }
    e.failed = e.cost >= kCostCap;
    ++eval_index;
    const double prev = session.incumbent_trace.empty() ? e.cost : session.incumbent_trace.back();
    session.history.push_back(std::move(e));
    session.incumbent_trace.push_back(std::min(prev, session.history.back().cost));
  };

  RngStream design_rng(config.master_seed, kDesignStream);
  for (const VectorXd& q : seed_design(box, config.n_seed, design_rng)) record(q, 0);

  Hyperparams hyper = config.initial_hyper;
  session.termination = "max_iterations";
  for (int j = 0; j < config.max_iterations; ++j) {
    const MatrixXd U = to_unit_rows(session.history, box);
    const VectorXd y = costs(session.history);
    if (j < 10 || j % 5 == 0)
      hyper = learn_hyperparams(U, y, hyper, config.hyper_budget, config.center_targets);
    const SurrogateModel model = robust_fit(U, y, hyper, config.center_targets);
    session.hyper_trace.push_back(hyper);

    const AcquisitionResult next =
        maximize_expected_improvement(model, y.minCoeff(), config.acquisition_budget);
    record(box.from_unit(next.q), j + 1);
    session.iterations = j + 1;

    const auto& trace = session.incumbent_trace;
    if (config.stall_window > 0 && session.iterations >= config.stall_window) {
      const double before = trace[trace.size() - 1 - config.stall_window];
      if (before - trace.back() < config.stall_tolerance) {
        session.termination = "stalled";
        break;
      }
    }
  }

  // Final surrogate over all data, for reporting.
  const MatrixXd U = to_unit_rows(session.history, box);
  const VectorXd y = costs(session.history);
  hyper = learn_hyperparams(U, y, hyper, config.hyper_budget, config.center_targets);
  session.surrogate = robust_fit(U, y, hyper, config.center_targets);
  return session;
}

void write_history_csv(const std::filesystem::path& path, const TuningSession& session) {
  std::vector<std::string> header{"iteration"};
  for (const auto& name : session.spec.names()) header.push_back(name);
  header.push_back("cost");
  header.push_back("incumbent_cost");
  CsvWriter csv(path, header);
  for (std::size_t i = 0; i < session.history.size(); ++i) {
    const Evaluation& e = session.history[i];
    csv.field(e.iteration);
    for (Eigen::Index j = 0; j < e.q.size(); ++j) csv.field(e.q(j));
    csv.field(e.cost).field(session.incumbent_trace[i]);
    csv.end_row();
  }
}

Scenario robot_scenario() {
  Scenario s;
  ContinuousModel& cm = s.truth;
  cm.A = (MatrixXd(2, 2) << 0, 1, 0, 0).finished();
  cm.G = (MatrixXd(2, 1) << 0, 1).finished();
  cm.Gamma = (MatrixXd(2, 1) << 0, 1).finished();
  cm.H = (MatrixXd(1, 2) << 1, 0).finished();
  cm.V = MatrixXd::Constant(1, 1, 1.0);
  cm.W = MatrixXd::Constant(1, 1, 0.1);
  cm.dt = 0.1;
  s.init.mean = VectorXd::Zero(2);
  s.init.cov = MatrixXd::Identity(2, 2);
  s.control = ControlProfile{2.0, 0.075};
  return s;
}

}  // namespace kftune
