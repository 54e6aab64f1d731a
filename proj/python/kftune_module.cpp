#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kftune/acquisition.hpp"
#include "kftune/config.hpp"
#include "kftune/consistency.hpp"
#include "kftune/direct.hpp"
#include "kftune/error.hpp"
#include "kftune/gp_surrogate.hpp"
#include "kftune/kalman.hpp"
#include "kftune/lti_model.hpp"
#include "kftune/tuner.hpp"

namespace py = pybind11;
using namespace kftune;

namespace {

py::dict session_to_dict(const TuningSession& s) {
  py::list history;
  for (std::size_t i = 0; i < s.history.size(); ++i) {
    const Evaluation& e = s.history[i];
    py::dict row;
    row["iteration"] = e.iteration;
    row["eval_index"] = e.eval_index;
    row["q"] = e.q;
    row["cost"] = e.cost;
    row["incumbent_cost"] = s.incumbent_trace[i];
    row["failed"] = e.failed;
    history.append(row);
  }
  const Evaluation& best = s.incumbent();
  py::dict out;
  out["names"] = s.spec.names();
  out["history"] = history;
  out["iterations"] = s.iterations;
  out["termination"] = s.termination;
  out["incumbent_q"] = best.q;
  out["incumbent_cost"] = best.cost;
  out["incumbent_eval_index"] = best.eval_index;
  if (s.surrogate) {
    const Hyperparams& h = s.surrogate->hyper();
    out["hyperparams"] = py::dict(py::arg("sigma0") = h.sigma0, py::arg("ell") = h.ell,
                                  py::arg("sigma_n2") = h.sigma_n2);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_kftune, m) {
  m.doc() = "Kalman filter noise tuning by Gaussian-process Bayesian optimization";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

  // Models
  py::class_<ContinuousModel>(m, "ContinuousModel")
      .def(py::init<>())
      .def(py::init([](MatrixXd A, MatrixXd G, MatrixXd Gamma, MatrixXd H, MatrixXd V, MatrixXd W, double dt) {
             ContinuousModel cm{A, G, Gamma, H, V, W, dt};
             cm.validate();
             return cm;
           }),
           py::arg("A"), py::arg("G"), py::arg("Gamma"), py::arg("H"), py::arg("V"), py::arg("W"), py::arg("dt"))
      .def_readwrite("A", &ContinuousModel::A)
      .def_readwrite("G", &ContinuousModel::G)
      .def_readwrite("Gamma", &ContinuousModel::Gamma)
      .def_readwrite("H", &ContinuousModel::H)
      .def_readwrite("V", &ContinuousModel::V)
      .def_readwrite("W", &ContinuousModel::W)
      .def_readwrite("dt", &ContinuousModel::dt)
      .def("validate", &ContinuousModel::validate);

  py::class_<DiscreteModel>(m, "DiscreteModel")
      .def(py::init<>())
      .def(py::init([](MatrixXd F, MatrixXd B, MatrixXd H, MatrixXd Q, MatrixXd R, double dt) {
             DiscreteModel dm{F, B, H, Q, R, dt};
             dm.validate();
             return dm;
           }),
           py::arg("F"), py::arg("B"), py::arg("H"), py::arg("Q"), py::arg("R"), py::arg("dt") = 0.0)
      .def_readwrite("F", &DiscreteModel::F)
      .def_readwrite("B", &DiscreteModel::B)
      .def_readwrite("H", &DiscreteModel::H)
      .def_readwrite("Q", &DiscreteModel::Q)
      .def_readwrite("R", &DiscreteModel::R)
      .def_readwrite("dt", &DiscreteModel::dt)
      .def("validate", &DiscreteModel::validate);

  m.def("matrix_exponential", &matrix_exponential, py::arg("M"));
  m.def("zoh_discretize", [](const ContinuousModel& cm) {
    const ZohResult r = zoh_discretize(cm);
    return py::make_tuple(r.F, r.B);
  }, py::arg("model"), "Returns (F, B).");
  m.def("van_loan_q", &van_loan_q, py::arg("A"), py::arg("Gamma"), py::arg("V"), py::arg("dt"));
  m.def("discretize_r", &discretize_r, py::arg("W"), py::arg("dt"));
  m.def("discretize", &discretize, py::arg("model"));

  // Filter
  py::class_<GaussianBelief>(m, "GaussianBelief")
      .def(py::init([](VectorXd mean, MatrixXd cov) { return GaussianBelief{mean, cov}; }), py::arg("mean"),
           py::arg("cov"))
      .def_readwrite("mean", &GaussianBelief::mean)
      .def_readwrite("cov", &GaussianBelief::cov);
  m.def("predict", &kftune::predict, py::arg("prior"), py::arg("model"), py::arg("u"));
  m.def("update", [](const GaussianBelief& pred, const DiscreteModel& dm, const VectorXd& z) {
    const UpdateResult r = update(pred, dm, z);
    return py::make_tuple(r.belief, r.innovation, r.innovation_cov);
  }, py::arg("predicted"), py::arg("model"), py::arg("z"), "Returns (posterior, innovation, S).");

  // Consistency statistics
  m.def("nees", &nees, py::arg("x_true"), py::arg("belief"));
  m.def("nis", &nis, py::arg("innovation"), py::arg("S"));
  m.def("chi2_cdf", &chi2_cdf, py::arg("x"), py::arg("dof"));
  m.def("chi2_inverse_cdf", &chi2_inverse_cdf, py::arg("p"), py::arg("dof"));
  m.def("chi2_bounds", [](double alpha, long runs, int dof) {
    const ChiSquareBounds b = chi2_bounds(alpha, runs, dof);
    return py::make_tuple(b.lower, b.upper);
  }, py::arg("alpha"), py::arg("runs"), py::arg("dof"));
  m.def("j_cost", &j_cost, py::arg("avg_stats"), py::arg("dof"));

  // Surrogate
  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init([](double s0, double ell, double n2) { return Hyperparams{s0, ell, n2}; }),
           py::arg("sigma0") = 1.0, py::arg("ell") = 0.2, py::arg("sigma_n2") = 0.01)
      .def_readwrite("sigma0", &Hyperparams::sigma0)
      .def_readwrite("ell", &Hyperparams::ell)
      .def_readwrite("sigma_n2", &Hyperparams::sigma_n2)
      .def("__repr__", [](const Hyperparams& h) {
        return "Hyperparams(sigma0=" + std::to_string(h.sigma0) + ", ell=" + std::to_string(h.ell) +
               ", sigma_n2=" + std::to_string(h.sigma_n2) + ")";
      });
  m.def("matern32", &matern32, py::arg("q1"), py::arg("q2"), py::arg("hyper"));
  py::class_<SurrogateModel>(m, "SurrogateModel")
      .def_property_readonly("hyper", &SurrogateModel::hyper)
      .def_property_readonly("jitter", &SurrogateModel::jitter)
      .def_property_readonly("size", &SurrogateModel::size)
      .def("predict", [](const SurrogateModel& s, const VectorXd& q) {
        const Prediction p = s.predict(q);
        return py::make_tuple(p.mean, p.var);
      }, py::arg("q"), "Returns (mean, variance).")
      .def("expected_improvement", [](const SurrogateModel& s, const VectorXd& q, double f_best) {
        return expected_improvement(q, s, f_best);
      }, py::arg("q"), py::arg("f_best"));
  m.def("fit", &fit, py::arg("inputs"), py::arg("targets"), py::arg("hyper"), py::arg("center_targets") = false);
  m.def("negative_log_marginal_likelihood", &negative_log_marginal_likelihood, py::arg("inputs"),
        py::arg("targets"), py::arg("hyper"), py::arg("center_targets") = false);
  m.def("learn_hyperparams", [](const MatrixXd& X, const VectorXd& y, const Hyperparams& current, long budget) {
    return learn_hyperparams(X, y, current, budget);
  }, py::arg("inputs"), py::arg("targets"), py::arg("current") = Hyperparams{}, py::arg("budget") = 200);
  m.def("expected_improvement", py::overload_cast<double, double, double>(&expected_improvement),
        py::arg("mean"), py::arg("sd"), py::arg("f_best"));

  m.def("direct_optimize", [](const std::function<double(const VectorXd&)>& f, const VectorXd& lower,
                              const VectorXd& upper, long budget) {
    const DirectResult r = direct_optimize(f, SearchBox{lower, upper}, DirectOptions{.budget = budget});
    return py::make_tuple(r.x, r.value, r.evaluations);
  }, py::arg("objective"), py::arg("lower"), py::arg("upper"), py::arg("budget") = 1000,
        "Minimizes objective over the box. Returns (x, value, evaluations).");

  // Tuning
  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def_readwrite("name", &ScenarioConfig::name)
      .def_readwrite("output_dir", &ScenarioConfig::output_dir)
      .def_property("master_seed", [](const ScenarioConfig& c) { return c.tuner.master_seed; },
                    [](ScenarioConfig& c, std::uint64_t s) { c.tuner.master_seed = s; })
      .def_property("max_iterations", [](const ScenarioConfig& c) { return c.tuner.max_iterations; },
                    [](ScenarioConfig& c, int n) { c.tuner.max_iterations = n; })
      .def_property("n_runs", [](const ScenarioConfig& c) { return c.tuner.n_runs; },
                    [](ScenarioConfig& c, long n) { c.tuner.n_runs = n; })
      .def_property("cost", [](const ScenarioConfig& c) { return to_string(c.design.cost_kind); },
                    [](ScenarioConfig& c, const std::string& k) {
                      if (k != "nees" && k != "nis") throw InvalidArgument("cost must be nees or nis");
                      c.design.cost_kind = k == "nees" ? CostKind::Nees : CostKind::Nis;
                    })
      .def_property_readonly("parameter_names", [](const ScenarioConfig& c) { return c.design.names(); })
      .def_property_readonly("truth", [](const ScenarioConfig& c) { return c.scenario.truth; })
      .def("truth_point", &truth_point)
      .def("to_json", [](const ScenarioConfig& c) { return config_to_json(c); });
  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));
  m.def("bundled_config", &bundled_config, py::arg("name"));
  m.def("evaluate_cost", [](const ScenarioConfig& c, const VectorXd& q, long eval_index) {
    return evaluate_cost(q, c.design, c.tuner, c.scenario, eval_index);
  }, py::arg("config"), py::arg("q"), py::arg("eval_index") = 0);
  m.def("run_gpbo", [](const ScenarioConfig& c) {
    TuningSession s;
    {
      py::gil_scoped_release release;
      s = run_gpbo(c.design, c.tuner, c.scenario);
    }
    return session_to_dict(s);
  }, py::arg("config"));
}
