#include "kftune/acquisition.hpp"

#include <cmath>
#include <numbers>

namespace kftune {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double expected_improvement(double mean, double sd, double f_best) {
  if (!(sd > 0.0)) return 0.0;
  const double gap = f_best - mean;
  const double z = gap / sd;
  return std::max(0.0, gap * normal_cdf(z) + sd * normal_pdf(z));
}

double expected_improvement(const VectorXd& q, const SurrogateModel& model, double f_best) {
  const Prediction p = model.predict(q);
  return expected_improvement(p.mean, std::sqrt(p.var), f_best);
}

AcquisitionResult maximize_expected_improvement(const SurrogateModel& model, double f_best,
                                                long budget) {
  DirectOptions opts;
  opts.budget = budget;
  const DirectResult res = direct_optimize(
      [&](const VectorXd& q) { return -expected_improvement(q, model, f_best); },
      SearchBox::unit(model.dim()), opts);
  return {res.x, -res.value, res.evaluations};
}

}  // namespace kftune
