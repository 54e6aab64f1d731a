#include "kftune/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kftune/error.hpp"

namespace kftune {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path.empty() ? "document" : path, "must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double get_number(const json& obj, const std::string& path, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const std::string& path, const char* key, double fallback) {
  return obj.contains(key) ? get_number(obj, path, key) : fallback;
}

long integer_or(const json& obj, const std::string& path, const char* key, long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(path, key), "must be an integer");
  return v.get<long>();
}

bool bool_or(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(join(path, key), "must be true or false");
  return v.get<bool>();
}

std::string string_or(const json& obj, const std::string& path, const char* key,
                      const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(join(path, key), "must be a string");
  return v.get<std::string>();
}

VectorXd get_vector(const json& v, const std::string& field) {
  if (v.is_number()) return VectorXd::Constant(1, v.get<double>());
  if (!v.is_array() || v.empty()) fail(field, "must be a non-empty array of numbers");
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(field, "entry " + std::to_string(i) + " is not a number");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

// A number is accepted as a 1x1 matrix; otherwise a non-empty array of equal-length rows.
MatrixXd get_matrix(const json& v, const std::string& field) {
  if (v.is_number()) return MatrixXd::Constant(1, 1, v.get<double>());
  if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty())
    fail(field, "must be a number or a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      fail(field, "row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) fail(field, "entry (" + std::to_string(r) + "," + std::to_string(c) + ") is not a number");
      out(r, c) = x.get<double>();
    }
  }
  return out;
}

json matrix_json(const MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ParamRole parse_role(const std::string& s, const std::string& field) {
  if (s == "process_noise_intensity" || s == "V") return ParamRole::ProcessNoiseIntensity;
  if (s == "measurement_noise_variance" || s == "R") return ParamRole::MeasurementNoiseVariance;
  fail(field, "unknown role '" + s + "' (expected process_noise_intensity or measurement_noise_variance)");
}

CostKind parse_cost(const std::string& s, const std::string& field) {
  if (s == "nees") return CostKind::Nees;
  if (s == "nis") return CostKind::Nis;
  fail(field, "unknown cost '" + s + "' (expected nees or nis)");
}

void parse_model(const json& m, ScenarioConfig& cfg) {
  reject_unknown(m, "model", {"A", "G", "Gamma", "H", "dt", "V", "W"});
  std::vector<std::string> missing;
  for (const char* k : {"A", "G", "Gamma", "H", "dt", "V", "W"})
    if (!m.contains(k)) missing.push_back(std::string("model.") + k);
  if (!missing.empty()) {
    std::string list;
    for (const auto& s : missing) list += (list.empty() ? "" : ", ") + s;
    throw ConfigError("missing required fields: " + list);
  }
  ContinuousModel& cm = cfg.scenario.truth;
  cm.A = get_matrix(m.at("A"), "model.A");
  cm.G = get_matrix(m.at("G"), "model.G");
  cm.Gamma = get_matrix(m.at("Gamma"), "model.Gamma");
  cm.H = get_matrix(m.at("H"), "model.H");
  cm.V = get_matrix(m.at("V"), "model.V");
  cm.W = get_matrix(m.at("W"), "model.W");
  cm.dt = get_number(m, "model", "dt");
  if (!(cm.dt > 0.0) || !std::isfinite(cm.dt)) fail("model.dt", "must be a positive number of seconds");

  const auto n = cm.A.rows();
  if (cm.A.cols() != n) fail("model.A", "must be square");
  if (cm.G.rows() != n) fail("model.G", "must have " + std::to_string(n) + " rows to match A");
  if (cm.Gamma.rows() != n) fail("model.Gamma", "must have " + std::to_string(n) + " rows to match A");
  if (cm.H.cols() != n) fail("model.H", "must have " + std::to_string(n) + " columns to match A");
  if (cm.V.rows() != cm.Gamma.cols() || cm.V.cols() != cm.Gamma.cols())
    fail("model.V", "must be square with the column count of Gamma (" + std::to_string(cm.Gamma.cols()) + ")");
  if (cm.W.rows() != cm.H.rows() || cm.W.cols() != cm.H.rows())
    fail("model.W", "must be square with the row count of H (" + std::to_string(cm.H.rows()) + ")");
}

}  // namespace

int ScenarioConfig::effective_grid_points() const {
  if (grid_points > 0) return grid_points;
  return design.dim() == 1 ? 101 : 41;
}

ScenarioConfig parse_config(const std::string& text) {
  json doc;
  const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
  if (blank) {
    doc = json::object();
  } else {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      // Translate the byte offset into line/column.
      std::size_t line = 1, col = 1;
      for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      throw ConfigError("syntax error at line " + std::to_string(line) + ", column " +
                        std::to_string(col) + ": " + e.what());
    }
  }

  reject_unknown(doc, "", {"scenario", "model", "initial_state", "control", "design", "tuner", "output"});
  {
    std::string missing;
    for (const char* k : {"model", "design"})
      if (!doc.contains(k)) missing += (missing.empty() ? "" : ", ") + std::string(k);
    if (!missing.empty())
      throw ConfigError("missing required fields: " + missing +
                        " (model needs A, G, Gamma, H, dt, V, W; design needs parameters)");
  }

  ScenarioConfig cfg;
  cfg.name = string_or(doc, "", "scenario", "custom");
  parse_model(doc.at("model"), cfg);
  const auto n = cfg.scenario.truth.state_dim();

  if (doc.contains("initial_state")) {
    const json& s = doc.at("initial_state");
    reject_unknown(s, "initial_state", {"mean", "cov"});
    cfg.scenario.init.mean = s.contains("mean") ? get_vector(s.at("mean"), "initial_state.mean") : VectorXd::Zero(n);
    cfg.scenario.init.cov = s.contains("cov") ? get_matrix(s.at("cov"), "initial_state.cov") : MatrixXd::Identity(n, n);
  } else {
    cfg.scenario.init.mean = VectorXd::Zero(n);
    cfg.scenario.init.cov = MatrixXd::Identity(n, n);
  }
  if (cfg.scenario.init.mean.size() != n) fail("initial_state.mean", "must have " + std::to_string(n) + " entries");
  if (cfg.scenario.init.cov.rows() != n || cfg.scenario.init.cov.cols() != n)
    fail("initial_state.cov", "must be " + std::to_string(n) + "x" + std::to_string(n));

  if (doc.contains("control")) {
    const json& c = doc.at("control");
    reject_unknown(c, "control", {"amplitude", "frequency"});
    cfg.scenario.control.amplitude = number_or(c, "control", "amplitude", 2.0);
    cfg.scenario.control.frequency = number_or(c, "control", "frequency", 0.075);
  }

  {
    const json& d = doc.at("design");
    reject_unknown(d, "design", {"cost", "parameters"});
    cfg.design.cost_kind = parse_cost(string_or(d, "design", "cost", "nees"), "design.cost");
    if (!d.contains("parameters")) throw ConfigError("missing required fields: design.parameters");
    const json& ps = d.at("parameters");
    if (!ps.is_array() || ps.empty()) fail("design.parameters", "must be a non-empty array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string path = "design.parameters[" + std::to_string(i) + "]";
      const json& p = ps[i];
      reject_unknown(p, path, {"name", "role", "lower", "upper", "index"});
      for (const char* k : {"role", "lower", "upper"})
        if (!p.contains(k)) throw ConfigError("missing required fields: " + path + "." + k);
      DesignParameter param;
      param.role = parse_role(string_or(p, path, "role", ""), path + ".role");
      param.name = string_or(p, path, "name", param.role == ParamRole::ProcessNoiseIntensity ? "V" : "R");
      param.lower = get_number(p, path, "lower");
      param.upper = get_number(p, path, "upper");
      param.index = static_cast<int>(integer_or(p, path, "index", 0));
      const auto limit = param.role == ParamRole::ProcessNoiseIntensity ? cfg.scenario.truth.V.rows()
                                                                        : cfg.scenario.truth.W.rows();
      if (param.index < 0 || param.index >= limit)
        fail(path + ".index", "must be in [0, " + std::to_string(limit) + ")");
      cfg.design.parameters.push_back(std::move(param));
    }
  }

  if (doc.contains("tuner")) {
    const json& t = doc.at("tuner");
    const std::string p = "tuner";
    reject_unknown(t, p, {"n_runs", "horizon", "n_seed", "max_iterations", "alpha", "master_seed",
                          "acquisition_budget", "hyper_budget", "stall_tolerance", "stall_window",
                          "common_random_numbers", "center_targets", "threads", "initial_hyper"});
    TunerConfig& tc = cfg.tuner;
    tc.n_runs = integer_or(t, p, "n_runs", tc.n_runs);
    tc.horizon = integer_or(t, p, "horizon", tc.horizon);
    tc.n_seed = static_cast<int>(integer_or(t, p, "n_seed", tc.n_seed));
    tc.max_iterations = static_cast<int>(integer_or(t, p, "max_iterations", tc.max_iterations));
    tc.alpha = number_or(t, p, "alpha", tc.alpha);
    if (t.contains("master_seed")) {
      const json& s = t.at("master_seed");
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        fail("tuner.master_seed", "must be a non-negative integer");
      tc.master_seed = s.get<std::uint64_t>();
    }
    tc.acquisition_budget = integer_or(t, p, "acquisition_budget", tc.acquisition_budget);
    tc.hyper_budget = integer_or(t, p, "hyper_budget", tc.hyper_budget);
    tc.stall_tolerance = number_or(t, p, "stall_tolerance", tc.stall_tolerance);
    tc.stall_window = static_cast<int>(integer_or(t, p, "stall_window", tc.stall_window));
    tc.common_random_numbers = bool_or(t, p, "common_random_numbers", tc.common_random_numbers);
    tc.center_targets = bool_or(t, p, "center_targets", tc.center_targets);
    tc.threads = static_cast<int>(integer_or(t, p, "threads", tc.threads));
    if (t.contains("initial_hyper")) {
      const json& h = t.at("initial_hyper");
      reject_unknown(h, "tuner.initial_hyper", {"sigma0", "ell", "sigma_n2"});
      tc.initial_hyper.sigma0 = number_or(h, "tuner.initial_hyper", "sigma0", tc.initial_hyper.sigma0);
      tc.initial_hyper.ell = number_or(h, "tuner.initial_hyper", "ell", tc.initial_hyper.ell);
      tc.initial_hyper.sigma_n2 = number_or(h, "tuner.initial_hyper", "sigma_n2", tc.initial_hyper.sigma_n2);
    }
  }

  if (doc.contains("output")) {
    const json& o = doc.at("output");
    reject_unknown(o, "output", {"dir", "grid_points"});
    cfg.output_dir = string_or(o, "output", "dir", cfg.output_dir);
    cfg.grid_points = static_cast<int>(integer_or(o, "output", "grid_points", 0));
    if (cfg.grid_points != 0 && cfg.grid_points < 2) fail("output.grid_points", "must be 0 (auto) or at least 2");
  }

  try {
    cfg.scenario.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  try {
    cfg.design.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("design: ") + e.what());
  }
  try {
    cfg.tuner.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("tuner: ") + e.what());
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ScenarioConfig& cfg, int indent) {
  const ContinuousModel& cm = cfg.scenario.truth;
  json doc;
  doc["scenario"] = cfg.name;
  doc["model"] = {{"A", matrix_json(cm.A)},         {"G", matrix_json(cm.G)},
                  {"Gamma", matrix_json(cm.Gamma)}, {"H", matrix_json(cm.H)},
                  {"dt", cm.dt},                    {"V", matrix_json(cm.V)},
                  {"W", matrix_json(cm.W)}};
  doc["initial_state"] = {{"mean", vector_json(cfg.scenario.init.mean)},
                          {"cov", matrix_json(cfg.scenario.init.cov)}};
  doc["control"] = {{"amplitude", cfg.scenario.control.amplitude},
                    {"frequency", cfg.scenario.control.frequency}};
  json params = json::array();
  for (const auto& p : cfg.design.parameters)
    params.push_back({{"name", p.name}, {"role", to_string(p.role)}, {"lower", p.lower},
                      {"upper", p.upper}, {"index", p.index}});
  doc["design"] = {{"cost", to_string(cfg.design.cost_kind)}, {"parameters", params}};
  const TunerConfig& t = cfg.tuner;
  doc["tuner"] = {{"n_runs", t.n_runs},
                  {"horizon", t.horizon},
                  {"n_seed", t.n_seed},
                  {"max_iterations", t.max_iterations},
                  {"alpha", t.alpha},
                  {"master_seed", t.master_seed},
                  {"acquisition_budget", t.acquisition_budget},
                  {"hyper_budget", t.hyper_budget},
                  {"stall_tolerance", t.stall_tolerance},
                  {"stall_window", t.stall_window},
                  {"common_random_numbers", t.common_random_numbers},
                  {"center_targets", t.center_targets},
                  {"threads", t.threads},
                  {"initial_hyper",
                   {{"sigma0", t.initial_hyper.sigma0},
                    {"ell", t.initial_hyper.ell},
                    {"sigma_n2", t.initial_hyper.sigma_n2}}}};
  doc["output"] = {{"dir", cfg.output_dir}, {"grid_points", cfg.grid_points}};
  return doc.dump(indent);
}

std::string bundled_config_text(const std::string& name) {
  static const char* kModel = R"(
  "model": {
    "A": [[0, 1], [0, 0]],
    "G": [[0], [1]],
    "Gamma": [[0], [1]],
    "H": [[1, 0]],
    "dt": 0.1,
    "V": [[1.0]],
    "W": [[0.1]]
  },
  "initial_state": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]},
  "control": {"amplitude": 2.0, "frequency": 0.075},)";
  if (name == "case1") {
    return std::string("{\n  \"scenario\": \"case1\",") + kModel + R"(
  "design": {
    "cost": "nees",
    "parameters": [
      {"name": "V", "role": "process_noise_intensity", "lower": 0.0, "upper": 10.0}
    ]
  },
  "tuner": {"n_runs": 10, "horizon": 200, "n_seed": 5, "max_iterations": 35, "master_seed": 1,
            "stall_window": 0},
  "output": {"dir": "out/case1"}
}
)";
  }
  if (name == "case2") {
    return std::string("{\n  \"scenario\": \"case2\",") + kModel + R"(
  "design": {
    "cost": "nees",
    "parameters": [
      {"name": "V", "role": "process_noise_intensity", "lower": 0.01, "upper": 10.0},
      {"name": "R", "role": "measurement_noise_variance", "lower": 0.01, "upper": 10.0}
    ]
  },
  "tuner": {"n_runs": 10, "horizon": 200, "n_seed": 10, "max_iterations": 100, "master_seed": 1,
            "stall_window": 0},
  "output": {"dir": "out/case2"}
}
)";
  }
  throw ConfigError("scenario: unknown bundled scenario '" + name + "' (expected case1 or case2)");
}

ScenarioConfig bundled_config(const std::string& name) { return parse_config(bundled_config_text(name)); }

VectorXd truth_point(const ScenarioConfig& cfg) {
  const ContinuousModel& cm = cfg.scenario.truth;
  const MatrixXd R = discretize_r(cm.W, cm.dt);
  VectorXd q(cfg.design.dim());
  for (int i = 0; i < cfg.design.dim(); ++i) {
    const auto& p = cfg.design.parameters[i];
    q(i) = p.role == ParamRole::ProcessNoiseIntensity ? cm.V(p.index, p.index) : R(p.index, p.index);
  }
  return q;
}

}  // namespace kftune
