#include "kftune/consistency.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "kftune/csv.hpp"
#include "kftune/error.hpp"

namespace kftune {

namespace {

double quadratic_form(const VectorXd& e, const MatrixXd& P, const char* who) {
  if (P.rows() != e.size() || P.cols() != e.size())
    throw InvalidArgument(std::string(who) + ": covariance and vector sizes differ");
  Eigen::LLT<MatrixXd> llt(symmetrize(P));
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite(std::string(who) + ": covariance is not positive definite");
  const VectorXd y = llt.matrixL().solve(e);
  return y.squaredNorm();
}

double gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a, x) by modified Lentz.
double gamma_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double nees(const VectorXd& x_true, const GaussianBelief& belief) {
  if (x_true.size() != belief.mean.size()) throw InvalidArgument("nees: state and estimate sizes differ");
  return quadratic_form(x_true - belief.mean, belief.cov, "nees");
}

double nis(const VectorXd& innovation, const MatrixXd& S) {
  return quadratic_form(innovation, S, "nis");
}

VectorXd average_stats(const std::vector<VectorXd>& per_run) {
  if (per_run.empty()) throw InvalidArgument("average_stats: need at least one run");
  const auto steps = per_run.front().size();
  VectorXd sum = VectorXd::Zero(steps);
  for (const auto& row : per_run) {
    if (row.size() != steps)
      throw InvalidArgument("average_stats: ragged input (" + std::to_string(row.size()) +
                            " vs " + std::to_string(steps) + " steps)");
    sum += row;
  }
  return sum / static_cast<double>(per_run.size());
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw InvalidArgument("regularized_gamma_p: a must be positive");
  if (std::isnan(x)) throw InvalidArgument("regularized_gamma_p: x is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double chi2_cdf(double x, double dof) { return regularized_gamma_p(0.5 * dof, 0.5 * x); }

double chi2_inverse_cdf(double p, double dof) {
  if (!(p > 0.0 && p < 1.0))
    throw InvalidArgument("chi2_inverse_cdf: p must lie in (0, 1), got " + std::to_string(p));
  if (!(dof > 0.0)) throw InvalidArgument("chi2_inverse_cdf: dof must be positive");
  double lo = 0.0;
  double hi = std::max(dof, 1.0);
  while (chi2_cdf(hi, dof) < p) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

ChiSquareBounds chi2_bounds(double alpha, long runs, int dof) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("chi2_bounds: alpha must lie in (0, 1)");
  if (runs < 1) throw InvalidArgument("chi2_bounds: need at least one run");
  if (dof < 1) throw InvalidArgument("chi2_bounds: dof must be positive");
  const double total_dof = static_cast<double>(runs) * dof;
  const double n = static_cast<double>(runs);
  return {chi2_inverse_cdf(0.5 * alpha, total_dof) / n,
          chi2_inverse_cdf(1.0 - 0.5 * alpha, total_dof) / n};
}

double j_cost(const VectorXd& avg_stats, int dof) {
  if (dof < 1) throw InvalidArgument("j_cost: dof must be positive");
  if (avg_stats.size() == 0) throw InvalidArgument("j_cost: empty statistic sequence");
  if ((avg_stats.array() < 0.0).any()) throw InvalidArgument("j_cost: statistics must be >= 0");
  const double mean = avg_stats.mean();
  if (!std::isfinite(mean)) return kCostCap;
  if (mean <= 0.0) return kCostCap;
  return std::min(std::abs(std::log(mean / dof)), kCostCap);
}

double ConsistencyRecord::fraction_nees_inside() const {
  long inside = 0;
  for (double v : avg_nees) inside += bounds_nees.contains(v);
  return avg_nees.size() ? static_cast<double>(inside) / avg_nees.size() : 0.0;
}

double ConsistencyRecord::fraction_nis_inside() const {
  long inside = 0;
  for (double v : avg_nis) inside += bounds_nis.contains(v);
  return avg_nis.size() ? static_cast<double>(inside) / avg_nis.size() : 0.0;
}

ConsistencyRecord run_consistency_trials(const DiscreteModel& filter, const DiscreteModel& truth,
                                         const GaussianBelief& init, const ControlProfile& control,
                                         const TrialSetup& setup) {
  if (setup.n_runs < 1 || setup.horizon < 1)
    throw InvalidArgument("run_consistency_trials: n_runs and horizon must be positive");
  if (filter.state_dim() != truth.state_dim() || filter.meas_dim() != truth.meas_dim())
    throw InvalidArgument("run_consistency_trials: filter and truth dimensions differ");

  const long runs = setup.n_runs;
  const long T = setup.horizon;
  std::vector<VectorXd> run_nees(runs), run_nis(runs);

  auto one_run = [&](long i) {
    RngStream rng(setup.master_seed, setup.first_stream + static_cast<std::uint64_t>(i));
    const Trajectory traj = simulate_truth(truth, init, T, control, rng);
    VectorXd e_x(T), e_z(T);
    GaussianBelief belief = init;
    for (long k = 0; k < T; ++k) {
      const GaussianBelief pred = predict(belief, filter, traj.controls.row(k).transpose());
      UpdateResult upd = update(pred, filter, traj.measurements.row(k).transpose());
      e_x(k) = nees(traj.states.row(k).transpose(), upd.belief);
      e_z(k) = nis(upd.innovation, upd.innovation_cov);
      belief = std::move(upd.belief);
    }
    run_nees[i] = std::move(e_x);
    run_nis[i] = std::move(e_z);
  };

  const int workers = std::max(1, std::min<int>(setup.threads, static_cast<int>(runs)));
  if (workers == 1) {
    for (long i = 0; i < runs; ++i) one_run(i);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (long i = w; i < runs; i += workers) one_run(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  ConsistencyRecord rec;
  rec.n_runs = runs;
  rec.nx = filter.state_dim();
  rec.nz = filter.meas_dim();
  rec.alpha = setup.alpha;
  rec.avg_nees = average_stats(run_nees);
  rec.avg_nis = average_stats(run_nis);
  rec.bounds_nees = chi2_bounds(setup.alpha, runs, rec.nx);
  rec.bounds_nis = chi2_bounds(setup.alpha, runs, rec.nz);
  rec.j_nees = j_cost(rec.avg_nees, rec.nx);
  rec.j_nis = j_cost(rec.avg_nis, rec.nz);
  return rec;
}

void write_consistency_csv(const std::filesystem::path& path, const ConsistencyRecord& rec) {
  CsvWriter csv(path, {"k", "avg_nees", "nees_lo", "nees_hi", "avg_nis", "nis_lo", "nis_hi"});
  for (Eigen::Index k = 0; k < rec.avg_nees.size(); ++k) {
    csv.field(static_cast<long>(k + 1))
        .field(rec.avg_nees(k))
        .field(rec.bounds_nees.lower)
        .field(rec.bounds_nees.upper)
        .field(rec.avg_nis(k))
        .field(rec.bounds_nis.lower)
        .field(rec.bounds_nis.upper);
    csv.end_row();
  }
}

}  // namespace kftune
