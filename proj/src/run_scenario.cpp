#include "kftune/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "kftune/csv.hpp"
#include "kftune/error.hpp"

namespace kftune {

namespace {

using json = nlohmann::ordered_json;

void write_session_json(const std::filesystem::path& path, const ScenarioConfig& cfg,
                        const TuningSession& session, double wall_seconds) {
  const Evaluation& best = session.incumbent();
  const VectorXd truth = truth_point(cfg);
  json incumbent_q = json::object();
  json truth_q = json::object();
  for (int i = 0; i < cfg.design.dim(); ++i) {
    incumbent_q[cfg.design.parameters[i].name] = best.q(i);
    truth_q[cfg.design.parameters[i].name] = truth(i);
  }
  const Hyperparams& h = session.surrogate->hyper();

  json doc;
  doc["config"] = json::parse(config_to_json(cfg));
  doc["seeds"] = {{"master_seed", cfg.tuner.master_seed},
                  {"design_stream", "2^63"},
                  {"evaluation_streams", cfg.tuner.common_random_numbers
                                             ? "run"
                                             : "eval_index * n_runs + run"}};
  doc["evaluations"] = session.history.size();
  doc["iterations"] = session.iterations;
  doc["termination"] = session.termination;
  doc["incumbent"] = {{"q", incumbent_q},
                      {"cost", best.cost},
                      {"iteration", best.iteration},
                      {"eval_index", best.eval_index}};
  doc["truth"] = truth_q;
  doc["distance_to_truth"] = (best.q - truth).norm();
  doc["surrogate_hyperparams"] = {{"sigma0", h.sigma0}, {"ell", h.ell}, {"sigma_n2", h.sigma_n2}};
  doc["wall_time_seconds"] = wall_seconds;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
}

}  // namespace

int run_scenario(const ScenarioConfig& cfg, std::ostream& log) {
  try {
    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);

    log << "scenario " << cfg.name << ": " << cfg.design.dim() << " parameter(s), cost "
        << to_string(cfg.design.cost_kind) << ", " << cfg.tuner.n_seed << " seeds + up to "
        << cfg.tuner.max_iterations << " iterations, master seed " << cfg.tuner.master_seed << '\n';

    const TuningSession session = run_gpbo(cfg.design, cfg.tuner, cfg.scenario);
    const Evaluation& best = session.incumbent();

    write_history_csv(dir / "history.csv", session);
    write_surrogate_grid_csv(dir / "surrogate_grid.csv", *session.surrogate, cfg.design.box(),
                             cfg.design.names(), cfg.effective_grid_points());
    try {
      const ConsistencyRecord rec =
          evaluate_consistency(best.q, cfg.design, cfg.tuner, cfg.scenario, best.eval_index);
      write_consistency_csv(dir / "consistency.csv", rec);
    } catch (const NotPositiveDefinite& e) {
      log << "warning: incumbent filter could not be re-run for consistency.csv: " << e.what() << '\n';
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_session_json(dir / "session.json", cfg, session, wall);

    const VectorXd truth = truth_point(cfg);
    log << "incumbent:";
    for (int i = 0; i < cfg.design.dim(); ++i)
      log << ' ' << cfg.design.parameters[i].name << '=' << format_double(best.q(i));
    log << "  cost=" << format_double(best.cost) << '\n';
    log << "truth:";
    for (int i = 0; i < cfg.design.dim(); ++i)
      log << ' ' << cfg.design.parameters[i].name << '=' << format_double(truth(i));
    log << "  distance=" << format_double((best.q - truth).norm()) << '\n';
    log << session.history.size() << " evaluations (" << session.termination << "), artifacts in "
        << dir.string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace kftune
