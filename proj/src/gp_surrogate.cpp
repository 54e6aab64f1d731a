#include "kftune/gp_surrogate.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "kftune/csv.hpp"
#include "kftune/error.hpp"

namespace kftune {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

MatrixXd gram(const MatrixXd& X, const Hyperparams& h) {
  const auto n = X.rows();
  MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = h.sigma0;
    for (Eigen::Index j = 0; j < i; ++j) {
      K(i, j) = matern32(X.row(i).transpose(), X.row(j).transpose(), h);
      K(j, i) = K(i, j);
    }
  }
  return K;
}

void check_training_set(const MatrixXd& inputs, const VectorXd& targets, const Hyperparams& h) {
  h.validate();
  if (inputs.rows() < 1) throw InvalidArgument("fit: need at least one training point");
  if (inputs.rows() != targets.size())
    throw InvalidArgument("fit: inputs and targets have different lengths");
  if (!inputs.allFinite() || !targets.allFinite())
    throw InvalidArgument("fit: training data must be finite");
  constexpr double slack = 1e-9;
  if ((inputs.array() < -slack).any() || (inputs.array() > 1.0 + slack).any())
    throw InvalidArgument("fit: inputs must lie in the unit box");
  if (h.sigma_n2 == 0.0) {
    for (Eigen::Index i = 0; i < inputs.rows(); ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        if ((inputs.row(i) - inputs.row(j)).norm() < 1e-12)
          throw InvalidArgument("fit: duplicate inputs " + std::to_string(j) + " and " +
                                std::to_string(i) + " with zero observation noise");
  }
}

}  // namespace

void Hyperparams::validate() const {
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw InvalidArgument("sigma0 must be positive");
  if (!(ell > 0.0) || !std::isfinite(ell)) throw InvalidArgument("ell must be positive");
  if (!(sigma_n2 >= 0.0) || !std::isfinite(sigma_n2))
    throw InvalidArgument("sigma_n2 must be non-negative");
}

double matern32(const VectorXd& q1, const VectorXd& q2, const Hyperparams& hyper) {
  const double s = kSqrt3 * (q1 - q2).norm() / hyper.ell;
  return hyper.sigma0 * (1.0 + s) * std::exp(-s);
}

SurrogateModel fit(const MatrixXd& inputs, const VectorXd& targets, const Hyperparams& hyper,
                   bool center_targets) {
  check_training_set(inputs, targets, hyper);
  const auto n = inputs.rows();
  const MatrixXd K = gram(inputs, hyper);

  SurrogateModel m;
  double jitter = 1e-10 * hyper.sigma0;
  for (int attempt = 0; attempt < 2; ++attempt, jitter *= 100.0) {
    MatrixXd Ky = K;
    Ky.diagonal().array() += hyper.sigma_n2 + jitter;
    Eigen::LLT<MatrixXd> llt(Ky);
    if (llt.info() == Eigen::Success && llt.matrixLLT().allFinite()) {
      m.chol_ = llt.matrixL();
      m.jitter_ = jitter;
      break;
    }
  }
  if (m.chol_.size() == 0)
    throw NotPositiveDefinite("fit: kernel matrix is too ill-conditioned to factor (n = " +
                              std::to_string(n) + ", ell = " + std::to_string(hyper.ell) +
                              ", sigma_n2 = " + std::to_string(hyper.sigma_n2) + ")");

  m.inputs_ = inputs;
  m.targets_ = targets;
  m.hyper_ = hyper;
  m.offset_ = center_targets ? targets.mean() : 0.0;
  const VectorXd centered = targets.array() - m.offset_;
  const VectorXd half = m.chol_.triangularView<Eigen::Lower>().solve(centered);
  m.alpha_ = m.chol_.transpose().triangularView<Eigen::Upper>().solve(half);
  return m;
}

Prediction SurrogateModel::predict(const VectorXd& q) const {
  if (q.size() != inputs_.cols())
    throw InvalidArgument("predict: query has dimension " + std::to_string(q.size()) +
                          ", model has " + std::to_string(inputs_.cols()));
  const auto n = inputs_.rows();
  VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i) k_star(i) = matern32(q, inputs_.row(i).transpose(), hyper_);
  const VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k_star);
  return {offset_ + k_star.dot(alpha_), std::max(0.0, hyper_.sigma0 - v.squaredNorm())};
}

double negative_log_marginal_likelihood(const MatrixXd& inputs, const VectorXd& targets,
                                        const Hyperparams& hyper, bool center_targets) {
  const SurrogateModel m = fit(inputs, targets, hyper, center_targets);
  const VectorXd centered = targets.array() - m.prior_mean();
  const double n = static_cast<double>(targets.size());
  return 0.5 * centered.dot(m.alpha()) + m.chol().diagonal().array().log().sum() +
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

Hyperparams learn_hyperparams(const MatrixXd& inputs, const VectorXd& targets,
                              const Hyperparams& current, long budget, bool center_targets,
                              const HyperparamBounds& bounds) {
  if (inputs.rows() < 2) throw InvalidArgument("learn_hyperparams: need at least two points");
  auto nlml_or_inf = [&](const Hyperparams& h) {
    try {
      const double v = negative_log_marginal_likelihood(inputs, targets, h, center_targets);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto from_log = [](const VectorXd& x) {
    return Hyperparams{std::exp(x(0)), std::exp(x(1)), std::exp(x(2))};
  };

  SearchBox box{VectorXd(3), VectorXd(3)};
  box.lower << bounds.log_sigma0_lo, bounds.log_ell_lo, bounds.log_noise_lo;
  box.upper << bounds.log_sigma0_hi, bounds.log_ell_hi, bounds.log_noise_hi;

  DirectOptions opts;
  opts.budget = budget;
  const DirectResult res =
      direct_optimize([&](const VectorXd& x) { return nlml_or_inf(from_log(x)); }, box, opts);

  const double current_value = nlml_or_inf(current);
  if (std::isfinite(res.value) && res.value < 1e12 && res.value < current_value)
    return from_log(res.x);
  return current;
}

void write_surrogate_grid_csv(const std::filesystem::path& path, const SurrogateModel& model,
                              const SearchBox& box, const std::vector<std::string>& names,
                              int points_per_dim) {
  const int d = box.dim();
  if (d != model.dim()) throw InvalidArgument("surrogate grid: box and model dimensions differ");
  if (points_per_dim < 2) throw InvalidArgument("surrogate grid: need at least 2 points per axis");
  std::vector<std::string> header;
  for (int i = 0; i < d; ++i)
    header.push_back(i < static_cast<int>(names.size()) ? names[i] : "q" + std::to_string(i + 1));
  header.push_back("mu");
  header.push_back("sigma");
  CsvWriter csv(path, header);

  std::vector<int> idx(d, 0);
  while (true) {
    VectorXd u(d);
    for (int i = 0; i < d; ++i) u(i) = static_cast<double>(idx[i]) / (points_per_dim - 1);
    const VectorXd q = box.from_unit(u);
    const Prediction p = model.predict(u);
    for (int i = 0; i < d; ++i) csv.field(q(i));
    csv.field(p.mean).field(std::sqrt(p.var));
    csv.end_row();
    // Last coordinate varies fastest.
    int axis = d - 1;
    while (axis >= 0 && ++idx[axis] == points_per_dim) idx[axis--] = 0;
    if (axis < 0) break;
  }
}

}  // namespace kftune
