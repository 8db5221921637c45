#include "gaussflow/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gaussflow/errors.hpp"

namespace gaussflow {

const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::two_oscillator: return "two_oscillator";
    case ModelKind::qbm: return "qbm";
    case ModelKind::custom: return "custom";
  }
  return "?";
}

namespace {

constexpr std::pair<Output, const char*> kOutputNames[] = {
    {Output::trajectory, "trajectory"},
    {Output::coefficients, "coefficients"},
    {Output::critical_time, "critical_time"},
    {Output::purity_rate, "purity_rate"},
    {Output::correlation_rate, "correlation_rate"},
    {Output::wigner_grid, "wigner_grid"},
    {Output::qbm_residual, "qbm_residual"},
};

}  // namespace

const char* to_string(Output o) {
  for (const auto& [v, name] : kOutputNames) {
    if (v == o) return name;
  }
  return "?";
}

Output output_from_string(const std::string& s) {
  for (const auto& [v, name] : kOutputNames) {
    if (s == name) return v;
  }
  throw std::invalid_argument("unknown output '" + s + "'");
}

bool Scenario::wants(Output o) const {
  return std::find(outputs.begin(), outputs.end(), o) != outputs.end();
}

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& key,
                         const std::string& msg) const {
    const int line = node.IsDefined() && node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
    std::ostringstream out;
    out << origin_;
    if (line > 0) out << ":" << line;
    if (!key.empty()) out << ": key '" << key << "'";
    out << ": " << msg;
    throw ScenarioError(out.str(), line, key);
  }

  void allow_keys(const YAML::Node& map, const std::string& where,
                  std::initializer_list<const char*> keys) const {
    if (!map.IsMap()) fail(map, where, "expected a mapping");
    for (const auto& kv : map) {
      const auto k = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        std::string allowed;
        for (const char* a : keys) allowed += std::string(allowed.empty() ? "" : ", ") + a;
        fail(kv.first, where.empty() ? k : where + "." + k,
             "unknown key (allowed: " + allowed + ")");
      }
    }
  }

  double number(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, key, "expected a number");
    try {
      const double v = node.as<double>();
      if (!std::isfinite(v)) fail(node, key, "must be finite");
      return v;
    } catch (const YAML::BadConversion&) {
      fail(node, key, "expected a number, got '" + node.Scalar() + "'");
    }
  }

  double number(const YAML::Node& map, const std::string& key, const std::string& path,
                std::optional<double> fallback) const {
    const YAML::Node n = map[key];
    if (!n) {
      if (fallback) return *fallback;
      fail(map, path, "missing required key '" + key + "'");
    }
    return number(n, path);
  }

  int integer(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, key, "expected an integer");
    try {
      return node.as<int>();
    } catch (const YAML::BadConversion&) {
      fail(node, key, "expected an integer, got '" + node.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, key, "expected a string");
    return node.Scalar();
  }

  VectorXd vector(const YAML::Node& node, const std::string& key) const {
    if (!node.IsSequence()) fail(node, key, "expected a list of numbers");
    VectorXd v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = number(node[i], key + "[" + std::to_string(i) + "]");
    }
    return v;
  }

  MatrixXd matrix(const YAML::Node& node, const std::string& key) const {
    if (!node.IsSequence() || node.size() == 0) fail(node, key, "expected a list of rows");
    const std::size_t rows = node.size();
    std::size_t cols = 0;
    MatrixXd m;
    for (std::size_t i = 0; i < rows; ++i) {
      const VectorXd r = vector(node[i], key + "[" + std::to_string(i) + "]");
      if (i == 0) {
        cols = static_cast<std::size_t>(r.size());
        m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      } else if (static_cast<std::size_t>(r.size()) != cols) {
        fail(node[i], key, "rows have different lengths");
      }
      m.row(static_cast<Eigen::Index>(i)) = r.transpose();
    }
    return m;
  }

 private:
  std::string origin_;
};

void parse_model(const Reader& rd, const YAML::Node& doc, Scenario& sc) {
  const YAML::Node model = doc["model"];
  if (!model) rd.fail(doc, "model", "missing required key (two_oscillator | qbm | custom)");
  const std::string kind = rd.text(model, "model");
  const YAML::Node p = doc["parameters"];
  if (!p) rd.fail(doc, "parameters", "missing required key");

  if (kind == "two_oscillator") {
    sc.model = ModelKind::two_oscillator;
    rd.allow_keys(p, "parameters", {"omega_s", "omega_e", "omega_e_sq", "gamma"});
    sc.two_oscillator.omega_s = rd.number(p, "omega_s", "parameters.omega_s", std::nullopt);
    if (p["omega_e"] && p["omega_e_sq"]) {
      rd.fail(p, "parameters", "give omega_e or omega_e_sq, not both");
    }
    if (p["omega_e"]) {
      const double w = rd.number(p["omega_e"], "parameters.omega_e");
      sc.two_oscillator.omega_e_sq = w * w;
    } else {
      sc.two_oscillator.omega_e_sq =
          rd.number(p, "omega_e_sq", "parameters.omega_e_sq", std::nullopt);
    }
    sc.two_oscillator.gamma = rd.number(p, "gamma", "parameters.gamma", std::nullopt);
    if (!(sc.two_oscillator.omega_s > 0)) {
      rd.fail(p["omega_s"], "parameters.omega_s", "must be positive");
    }
    sc.system = two_oscillator_system(sc.two_oscillator);
  } else if (kind == "qbm") {
    sc.model = ModelKind::qbm;
    rd.allow_keys(p, "parameters", {"mass", "omega_s", "k", "masses"});
    sc.qbm.mass = rd.number(p, "mass", "parameters.mass", 1.0);
    sc.qbm.omega_s = rd.number(p, "omega_s", "parameters.omega_s", std::nullopt);
    if (!p["k"]) rd.fail(p, "parameters.k", "missing list of spring constants");
    const VectorXd k = rd.vector(p["k"], "parameters.k");
    sc.qbm.k.assign(k.data(), k.data() + k.size());
    if (p["masses"]) {
      const VectorXd m = rd.vector(p["masses"], "parameters.masses");
      sc.qbm.masses.assign(m.data(), m.data() + m.size());
    }
    try {
      sc.system = qbm_build(sc.qbm);
    } catch (const std::invalid_argument& e) {
      rd.fail(p, "parameters", e.what());
    }
  } else if (kind == "custom") {
    sc.model = ModelKind::custom;
    rd.allow_keys(p, "parameters", {"system_hessian", "environment_hessian", "coupling"});
    for (const char* key : {"system_hessian", "environment_hessian", "coupling"}) {
      if (!p[key]) rd.fail(p, std::string("parameters.") + key, "missing required key");
    }
    sc.system_hessian = rd.matrix(p["system_hessian"], "parameters.system_hessian");
    sc.environment_hessian = rd.matrix(p["environment_hessian"], "parameters.environment_hessian");
    sc.coupling = rd.matrix(p["coupling"], "parameters.coupling");
    for (const auto& [key, m] : {std::pair<const char*, const MatrixXd*>{"system_hessian", &sc.system_hessian},
                                 {"environment_hessian", &sc.environment_hessian}}) {
      if (m->rows() != m->cols() || m->rows() % 2 != 0) {
        rd.fail(p[key], std::string("parameters.") + key, "must be square with even size");
      }
      if (!is_symmetric(*m)) rd.fail(p[key], std::string("parameters.") + key, "must be symmetric");
    }
    try {
      sc.system.emplace(QuadraticHamiltonian<double>(sc.system_hessian),
                        QuadraticHamiltonian<double>(sc.environment_hessian), sc.coupling);
    } catch (const std::invalid_argument& e) {
      rd.fail(p["coupling"], "parameters.coupling", e.what());
    }
  } else {
    rd.fail(model, "model", "unknown model '" + kind + "' (two_oscillator | qbm | custom)");
  }

  if (const YAML::Node drive = doc["coupling_drive"]) {
    rd.allow_keys(drive, "coupling_drive", {"omega", "phase"});
    CouplingDrive d;
    d.omega = rd.number(drive, "omega", "coupling_drive.omega", std::nullopt);
    d.phase = rd.number(drive, "phase", "coupling_drive.phase", 0.0);
    sc.drive = d;
    const BipartiteSystem base = *sc.system;
    const MatrixXd g = base.coupling(0);
    sc.system.emplace(base.system(), base.environment(),
                      MatrixSchedule<double>::varying(g.rows(), g.cols(), [g, d](double t) {
                        return MatrixXd(g * std::cos(d.omega * t + d.phase));
                      }));
  }
}

GaussianState<double> parse_state(const Reader& rd, const YAML::Node& node, const std::string& key,
                                  const QuadraticHamiltonian<double>& h, double validity_tol,
                                  std::string* label) {
  const Eigen::Index n = h.dof();
  if (!node) rd.fail(node, key, "missing required key");
  GaussianState<double> state;
  std::string preset;
  YAML::Node map;
  if (node.IsScalar()) {
    preset = node.Scalar();
  } else {
    map = node;
    rd.allow_keys(map, key, {"preset", "beta", "tau", "r", "mean", "covariance"});
    if (map["preset"]) preset = rd.text(map["preset"], key + ".preset");
  }

  auto param = [&](const char* name) {
    if (!map || !map[name]) rd.fail(node, key, "preset '" + preset + "' needs '" + name + "'");
    return rd.number(map[name], key + "." + name);
  };

  if (preset.empty()) {
    if (!map["covariance"]) rd.fail(node, key, "give a preset or an explicit covariance");
    const MatrixXd cov = rd.matrix(map["covariance"], key + ".covariance");
    if (cov.rows() != 2 * n || cov.cols() != 2 * n) {
      rd.fail(map["covariance"], key + ".covariance",
              "expected " + std::to_string(2 * n) + "x" + std::to_string(2 * n));
    }
    if (!is_symmetric(cov)) rd.fail(map["covariance"], key + ".covariance", "must be symmetric");
    state = GaussianState<double>(cov);
    *label = "explicit";
  } else if (preset == "vacuum") {
    state = vacuum_state(n);
    *label = "vacuum";
  } else if (preset == "thermal") {
    const double beta = param("beta");
    if (!(beta > 0)) rd.fail(map["beta"], key + ".beta", "must be positive");
    try {
      state = thermal_state(h, beta);
    } catch (const std::invalid_argument& e) {
      rd.fail(node, key, e.what());
    }
    *label = "thermal(beta=" + std::to_string(beta) + ")";
  } else if (preset == "isotropic") {
    const double tau = param("tau");
    if (!(tau > 0)) rd.fail(map["tau"], key + ".tau", "must be positive");
    state = isotropic_thermal_state(n, tau);
    *label = "isotropic(tau=" + std::to_string(tau) + ")";
  } else if (preset == "squeezed") {
    state = squeezed_state(n, param("r"));
    *label = "squeezed";
  } else {
    rd.fail(node, key, "unknown preset '" + preset + "' (vacuum | thermal | isotropic | squeezed)");
  }
  if (map && map["covariance"] && !preset.empty()) {
    rd.fail(map["covariance"], key + ".covariance", "cannot be combined with a preset");
  }
  if (map && map["mean"]) {
    const VectorXd mean = rd.vector(map["mean"], key + ".mean");
    if (mean.size() != 2 * n) {
      rd.fail(map["mean"], key + ".mean", "expected " + std::to_string(2 * n) + " entries");
    }
    state.mean = mean;
  }

  const auto report = validate(state, validity_tol);
  if (!report.valid) {
    std::ostringstream msg;
    if (!report.positive_definite) {
      msg << "covariance is not positive-definite";
    } else {
      msg << "not a quantum state: smallest symplectic eigenvalue "
          << report.min_symplectic_eigenvalue << " is below the bound 1/2";
    }
    const YAML::Node at = map && map["covariance"] ? map["covariance"] : node;
    const int line = at.Mark().line >= 0 ? at.Mark().line + 1 : 0;
    throw InvalidStateError(
        std::string("") + "state '" + key + "'" + (line > 0 ? " (line " + std::to_string(line) + ")" : "") +
            ": " + msg.str(),
        report.positive_definite ? report.min_symplectic_eigenvalue : 0.0);
  }
  return state;
}

Scenario parse_one(const Reader& rd, const YAML::Node& doc, const std::string& origin,
                   const std::string& default_name) {
  if (!doc.IsMap()) rd.fail(doc, "", "a scenario must be a mapping");
  rd.allow_keys(doc, "",
                {"name", "model", "parameters", "coupling_drive", "system_state",
                 "environment_state", "time", "picture", "outputs", "tolerances", "wigner",
                 "critical_time", "qbm_residual"});
  Scenario sc;
  sc.origin = origin;
  sc.name = doc["name"] ? rd.text(doc["name"], "name") : default_name;

  if (const YAML::Node tol = doc["tolerances"]) {
    rd.allow_keys(tol, "tolerances",
                  {"integrator", "validity", "singular_rcond", "critical_margin", "critical_rel",
                   "wigner_boundary", "wigner_spectral"});
    auto& t = sc.tolerances;
    t.integrator = rd.number(tol, "integrator", "tolerances.integrator", t.integrator);
    t.validity = rd.number(tol, "validity", "tolerances.validity", t.validity);
    t.singular_rcond = rd.number(tol, "singular_rcond", "tolerances.singular_rcond", t.singular_rcond);
    t.critical_margin = rd.number(tol, "critical_margin", "tolerances.critical_margin", t.critical_margin);
    t.critical_rel = rd.number(tol, "critical_rel", "tolerances.critical_rel", t.critical_rel);
    t.wigner_boundary = rd.number(tol, "wigner_boundary", "tolerances.wigner_boundary", t.wigner_boundary);
    t.wigner_spectral = rd.number(tol, "wigner_spectral", "tolerances.wigner_spectral", t.wigner_spectral);
    if (!(t.integrator > 0)) rd.fail(tol, "tolerances.integrator", "must be positive");
  }

  parse_model(rd, doc, sc);
  const auto& sys = *sc.system;
  sc.system_state = parse_state(rd, doc["system_state"], "system_state", sys.system(),
                                sc.tolerances.validity, &sc.system_state_label);
  sc.environment_state = parse_state(rd, doc["environment_state"], "environment_state",
                                     sys.environment(), sc.tolerances.validity,
                                     &sc.environment_state_label);

  const YAML::Node time = doc["time"];
  if (!time) rd.fail(doc, "time", "missing required key (t_max, steps)");
  rd.allow_keys(time, "time", {"t_max", "steps"});
  sc.t_max = rd.number(time, "t_max", "time.t_max", std::nullopt);
  if (!time["steps"]) rd.fail(time, "time.steps", "missing required key");
  sc.steps = rd.integer(time["steps"], "time.steps");
  if (!(sc.t_max > 0)) rd.fail(time["t_max"], "time.t_max", "must be positive");
  if (sc.steps < 1) rd.fail(time["steps"], "time.steps", "must be at least 1");

  if (const YAML::Node pic = doc["picture"]) {
    try {
      sc.picture = picture_from_string(rd.text(pic, "picture"));
    } catch (const std::invalid_argument& e) {
      rd.fail(pic, "picture", e.what());
    }
  }

  if (const YAML::Node outs = doc["outputs"]) {
    if (!outs.IsSequence()) rd.fail(outs, "outputs", "expected a list");
    for (std::size_t i = 0; i < outs.size(); ++i) {
      const std::string s = rd.text(outs[i], "outputs");
      try {
        const Output o = output_from_string(s);
        if (!sc.wants(o)) sc.outputs.push_back(o);
      } catch (const std::invalid_argument& e) {
        rd.fail(outs[i], "outputs", e.what());
      }
    }
  } else {
    sc.outputs = {Output::trajectory};
  }

  if (const YAML::Node w = doc["wigner"]) {
    rd.allow_keys(w, "wigner", {"half_width", "points", "padding", "order", "times"});
    auto& ws = sc.wigner;
    ws.half_width = rd.number(w, "half_width", "wigner.half_width", ws.half_width);
    if (w["points"]) ws.points = rd.integer(w["points"], "wigner.points");
    if (w["padding"]) ws.padding = rd.integer(w["padding"], "wigner.padding");
    if (w["order"]) ws.order = rd.integer(w["order"], "wigner.order");
    if (w["times"]) {
      const VectorXd t = rd.vector(w["times"], "wigner.times");
      ws.times.assign(t.data(), t.data() + t.size());
    }
    if (!(ws.half_width > 0)) rd.fail(w, "wigner.half_width", "must be positive");
    if (ws.points < 4) rd.fail(w, "wigner.points", "must be at least 4");
  }

  if (const YAML::Node c = doc["critical_time"]) {
    rd.allow_keys(c, "critical_time", {"t_max", "step"});
    if (c["t_max"]) sc.critical.t_max = rd.number(c["t_max"], "critical_time.t_max");
    sc.critical.step = rd.number(c, "step", "critical_time.step", 0.0);
  }

  if (const YAML::Node r = doc["qbm_residual"]) {
    rd.allow_keys(r, "qbm_residual", {"initial", "steps"});
    if (r["initial"]) {
      const VectorXd z0 = rd.vector(r["initial"], "qbm_residual.initial");
      if (z0.size() != 2 * (sys.d() + sys.N())) {
        rd.fail(r["initial"], "qbm_residual.initial",
                "expected " + std::to_string(2 * (sys.d() + sys.N())) + " entries");
      }
      sc.residual.initial = z0;
    }
    if (r["steps"]) sc.residual.steps = rd.integer(r["steps"], "qbm_residual.steps");
  }
  if (sc.wants(Output::qbm_residual) && sc.model != ModelKind::qbm) {
    rd.fail(doc["outputs"], "outputs", "qbm_residual requires model: qbm");
  }
  return sc;
}

YAML::Node load_yaml(const std::string& text, const std::string& origin) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    const int line = e.mark.line >= 0 ? e.mark.line + 1 : 0;
    throw ScenarioError(origin + ":" + std::to_string(line) + ": malformed YAML: " + e.msg, line, "");
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  const Reader rd(origin);
  const YAML::Node doc = load_yaml(text, origin);
  if (doc.IsSequence()) {
    rd.fail(doc, "", "document is a list of scenarios; use parse_scenarios");
  }
  return parse_one(rd, doc, origin, "scenario");
}

std::vector<Scenario> parse_scenarios(const std::string& text, const std::string& origin) {
  const Reader rd(origin);
  const YAML::Node doc = load_yaml(text, origin);
  std::vector<Scenario> out;
  if (doc.IsSequence()) {
    if (doc.size() == 0) rd.fail(doc, "", "empty scenario list");
    std::set<std::string> names;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "run_%03zu", i);
      out.push_back(parse_one(rd, doc[i], origin, buf));
      if (!names.insert(out.back().name).second) {
        rd.fail(doc[i], "name", "duplicate scenario name '" + out.back().name + "'");
      }
    }
  } else {
    out.push_back(parse_one(rd, doc, origin, "scenario"));
  }
  return out;
}

std::vector<Scenario> load_scenarios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenarios(buf.str(), path);
}

}  // namespace gaussflow
