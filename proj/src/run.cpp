#include "gaussflow/run.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "gaussflow/errors.hpp"
#include "gaussflow/version.hpp"

namespace gaussflow {

using nlohmann::json;

TableFormat table_format_from_string(const std::string& s) {
  if (s == "csv") return TableFormat::csv;
  if (s == "json") return TableFormat::json;
  throw std::invalid_argument("unknown format '" + s + "' (csv | json)");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  // shortest round-trip form; it never needs more than 17 significant digits
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::optional<std::string> failure;
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(number_or_null(m(i, j)));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string write_table(const Table& t, const std::filesystem::path& dir, const std::string& stem,
                        TableFormat format) {
  const std::string file = stem + (format == TableFormat::csv ? ".csv" : ".json");
  std::ofstream out(dir / file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
  if (format == TableFormat::csv) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
      out << '\n';
    }
    if (t.failure) out << "# FAILED: " << *t.failure << '\n';
  } else {
    json doc;
    doc["columns"] = t.columns;
    json rows = json::array();
    for (const auto& row : t.rows) {
      json r = json::array();
      for (double v : row) r.push_back(number_or_null(v));
      rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(rows);
    doc["failure"] = t.failure ? json(*t.failure) : json(nullptr);
    out << doc.dump(1) << '\n';
  }
  return file;
}

void append_matrix_columns(std::vector<std::string>& cols, const std::string& name, Eigen::Index r,
                           Eigen::Index c) {
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      cols.push_back(name + "_" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
}

void append_vector_columns(std::vector<std::string>& cols, const std::string& name, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) cols.push_back(name + "_" + std::to_string(i));
}

void append_row_major(std::vector<double>& row, const MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
  }
}

json failure_entry(Output o, const std::exception& e) {
  json f;
  f["output"] = to_string(o);
  f["message"] = e.what();
  if (const auto* s = dynamic_cast<const SingularBlockError*>(&e)) {
    f["error"] = "singular_block";
    f["t"] = s->time();
    f["det"] = s->determinant();
    f["rcond"] = s->reciprocal_condition();
  } else if (const auto* g = dynamic_cast<const GridError*>(&e)) {
    (void)g;
    f["error"] = "grid";
  } else if (const auto* i = dynamic_cast<const IntegratorError*>(&e)) {
    f["error"] = "integrator";
    f["t"] = i->time();
  } else if (const auto* v = dynamic_cast<const InvalidStateError*>(&e)) {
    f["error"] = "invalid_state";
    f["min_symplectic_eigenvalue"] = v->min_symplectic_eigenvalue();
  } else if (dynamic_cast<const std::invalid_argument*>(&e)) {
    f["error"] = "invalid_argument";
  } else {
    f["error"] = "runtime";
  }
  return f;
}

json tolerances_json(const ScenarioTolerances& t, double integrator) {
  return json{{"integrator", integrator},
              {"validity", t.validity},
              {"singular_rcond", t.singular_rcond},
              {"critical_margin", t.critical_margin},
              {"critical_rel", t.critical_rel},
              {"wigner_boundary", t.wigner_boundary},
              {"wigner_spectral", t.wigner_spectral},
              {"symmetry", tolerances::kSymmetry},
              {"positive_definite", tolerances::kPositiveDefinite}};
}

json state_json(const GaussianState<double>& s, const std::string& label) {
  const auto rep = validate(s);
  json j;
  j["label"] = label;
  j["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
  j["covariance"] = matrix_json(s.cov);
  j["valid"] = rep.valid;
  j["pure"] = rep.pure;
  j["partially_pure"] = rep.partially_pure;
  j["symplectic_eigenvalues"] =
      std::vector<double>(rep.symplectic_eigenvalues.data(),
                          rep.symplectic_eigenvalues.data() + rep.symplectic_eigenvalues.size());
  return j;
}

}  // namespace

json validation_report(const Scenario& sc) {
  const auto& sys = sc.bipartite();
  json j;
  j["name"] = sc.name;
  j["model"] = to_string(sc.model);
  j["d"] = sys.d();
  j["N"] = sys.N();
  j["autonomous"] = sys.is_autonomous();
  j["system_state"] = state_json(sc.system_state, sc.system_state_label);
  j["environment_state"] = state_json(sc.environment_state, sc.environment_state_label);
  j["total_hessian"] = matrix_json(total_hessian(sys, 0));
  return j;
}

RunReport run(const Scenario& sc, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto& sys = sc.bipartite();
  const std::vector<Output> outputs = options.outputs.value_or(sc.outputs);
  FlowOptions flow_opts;
  flow_opts.tol = options.integrator_tol.value_or(sc.tolerances.integrator);
  std::filesystem::create_directories(options.out_dir);

  RunReport report;
  report.out_dir = options.out_dir;
  json& summary = report.summary;
  summary["version"] = kVersion;
  summary["scenario"] = {{"name", sc.name},
                         {"origin", sc.origin},
                         {"model", to_string(sc.model)},
                         {"d", sys.d()},
                         {"N", sys.N()},
                         {"autonomous", sys.is_autonomous()},
                         {"system_state", sc.system_state_label},
                         {"environment_state", sc.environment_state_label},
                         {"t_max", sc.t_max},
                         {"steps", sc.steps},
                         {"picture", to_string(sc.picture)}};
  json outs = json::array();
  for (Output o : outputs) outs.push_back(to_string(o));
  summary["scenario"]["outputs"] = outs;
  summary["tolerances"] = tolerances_json(sc.tolerances, flow_opts.tol);
  summary["files"] = json::object();
  summary["diagnostics"] = json::object();
  summary["failures"] = json::array();
  summary["warnings"] = json::array();

  auto wants = [&](Output o) { return std::find(outputs.begin(), outputs.end(), o) != outputs.end(); };
  auto fail = [&](Output o, const std::exception& e) {
    summary["failures"].push_back(failure_entry(o, e));
    report.ok = false;
  };

  const Eigen::Index d = sys.d();
  const Eigen::Index N = sys.N();
  std::optional<FlowBundle> flow;
  auto get_flow = [&]() -> const FlowBundle& {
    if (!flow) {
      flow = full_flow(sys, uniform_grid(sc.t_max, sc.steps), flow_opts);
      summary["diagnostics"]["max_symplectic_deviation"] = flow->diagnostics.max_symplectic_deviation;
      summary["diagnostics"]["integrator_steps"] = flow->diagnostics.integrator_steps;
      summary["diagnostics"]["used_exponential"] = flow->diagnostics.used_exponential;
    }
    return *flow;
  };

  if (wants(Output::trajectory)) {
    Table t;
    t.columns = {"t"};
    append_matrix_columns(t.columns, "gamma", 2 * d, 2 * d);
    append_vector_columns(t.columns, "mean", 2 * d);
    for (const char* c : {"purity", "linear_entropy", "von_neumann_entropy", "det_phi_ii"}) {
      t.columns.push_back(c);
    }
    try {
      const auto traj = evolve_reduced(get_flow(), sc.system_state, sc.environment_state);
      double min_lambda = std::numeric_limits<double>::infinity();
      double max_logdet_drift = 0;
      for (const auto& p : traj.points) {
        std::vector<double> row{p.t};
        append_row_major(row, p.cov);
        for (Eigen::Index i = 0; i < p.mean.size(); ++i) row.push_back(p.mean(i));
        row.insert(row.end(), {p.purity, p.linear_entropy, p.von_neumann_entropy, p.det_ii});
        t.rows.push_back(std::move(row));
        min_lambda = std::min(min_lambda, p.min_symplectic_eigenvalue);
        max_logdet_drift =
            std::max(max_logdet_drift, std::abs(p.total_log_det - traj.points.front().total_log_det));
      }
      summary["diagnostics"]["min_symplectic_eigenvalue"] = number_or_null(min_lambda);
      summary["diagnostics"]["max_total_log_det_drift"] = number_or_null(max_logdet_drift);
      summary["final_purity"] = number_or_null(traj.points.back().purity);
    } catch (const std::exception& e) {
      t.failure = e.what();
      fail(Output::trajectory, e);
    }
    summary["files"]["trajectory"] = write_table(t, options.out_dir, "trajectory", options.format);
  }

  if (wants(Output::coefficients)) {
    Table t;
    t.columns = {"t"};
    append_matrix_columns(t.columns, "A", 2 * d, 2 * d);
    append_matrix_columns(t.columns, "B", 2 * d, 2 * d);
    append_vector_columns(t.columns, "v", 2 * d);
    append_matrix_columns(t.columns, "Theta", 2 * d, 2 * d);
    try {
      for (const auto& snap : get_flow().snapshots) {
        const auto c = master_coefficients(snap, sc.environment_state, sc.picture);
        if (c.rcond_ii < sc.tolerances.singular_rcond) {
          throw SingularBlockError("ii block is singular at t = " + format_double(c.t), c.t,
                                   c.det_ii, c.rcond_ii);
        }
        std::vector<double> row{c.t};
        append_row_major(row, c.A);
        append_row_major(row, c.B);
        for (Eigen::Index i = 0; i < c.v.size(); ++i) row.push_back(c.v(i));
        append_row_major(row, c.Theta);
        t.rows.push_back(std::move(row));
      }
    } catch (const std::exception& e) {
      t.failure = e.what();
      fail(Output::coefficients, e);
    }
    summary["files"]["coefficients"] = write_table(t, options.out_dir, "coefficients", options.format);
  }

  if (wants(Output::critical_time)) {
    try {
      CriticalTimeOptions co;
      co.step = sc.critical.step;
      co.margin = sc.tolerances.critical_margin;
      co.rel_tol = sc.tolerances.critical_rel;
      co.flow = flow_opts;
      const auto r = critical_time(sys, sc.critical.t_max.value_or(sc.t_max), co);
      summary["t_c"] = r.t_c ? json(*r.t_c) : json(nullptr);
      summary["critical_time"] = {{"t_c", summary["t_c"]},
                                  {"t_max", r.t_max},
                                  {"step", r.step},
                                  {"min_abs_det", r.min_abs_det},
                                  {"coupling_norm", r.coupling_norm}};
      for (const auto& w : r.warnings) summary["warnings"].push_back("critical_time: " + w);
    } catch (const std::exception& e) {
      fail(Output::critical_time, e);
    }
    summary["files"]["critical_time"] = "summary.json";
  }

  if (wants(Output::purity_rate)) {
    try {
      const auto r = purity_rate_initial(sys, sc.system_state, sc.environment_state);
      summary["ddot_purity"] = r.value;
      summary["purity_rate"] = {{"ddot_purity", r.value},
                                {"fluctuation_term", r.fluctuation_term},
                                {"quantum_term", r.quantum_term}};
    } catch (const std::exception& e) {
      fail(Output::purity_rate, e);
    }
    summary["files"]["purity_rate"] = "summary.json";
  }

  if (wants(Output::correlation_rate)) {
    try {
      const auto r = correlation_rate(sys, sc.system_state, sc.environment_state);
      summary["correlation_rate"] = {{"rate", matrix_json(r.rate)},
                                     {"criterion", matrix_json(r.criterion)},
                                     {"norm", r.norm},
                                     {"correlates", r.correlates}};
    } catch (const std::exception& e) {
      fail(Output::correlation_rate, e);
    }
    summary["files"]["correlation_rate"] = "summary.json";
  }

  if (wants(Output::wigner_grid)) {
    Table t;
    t.columns = {"t"};
    append_vector_columns(t.columns, "z", 2 * d);
    t.columns.push_back("value");
    json per_time = json::array();
    try {
      if (d > 2) throw std::invalid_argument("wigner_grid: only d <= 2 is supported");
      const auto& ws = sc.wigner;
      const WignerGrid initial =
          sample_gaussian(make_wigner_grid(d, ws.half_width, ws.points), sc.system_state);
      WignerGridOptions wo;
      wo.padding = ws.padding;
      wo.interpolation_order = ws.order;
      wo.boundary_tol = sc.tolerances.wigner_boundary;
      wo.spectral_tol = sc.tolerances.wigner_spectral;
      const std::vector<double> times = ws.times.empty() ? std::vector<double>{sc.t_max} : ws.times;
      for (double tt : times) {
        const auto snap = flow_at(sys, tt, flow_opts);
        const WignerGrid g = reduced_wigner_grid(initial, snap, sc.environment_state, wo);
        const WignerGrid exact =
            sample_gaussian(initial, reduced_state(snap, sc.system_state, sc.environment_state));
        double peak = 0;
        double err = 0;
        for (std::size_t k = 0; k < g.size(); ++k) {
          peak = std::max(peak, std::abs(exact.values[k]));
          err = std::max(err, std::abs(g.values[k] - exact.values[k]));
          std::vector<double> row{tt};
          const VectorXd z = g.point(k);
          row.insert(row.end(), z.data(), z.data() + z.size());
          row.push_back(g.values[k]);
          t.rows.push_back(std::move(row));
        }
        per_time.push_back({{"t", tt},
                            {"mass", grid_mass(g)},
                            {"boundary_max", boundary_max(g)},
                            {"max_error_vs_gaussian", err / peak}});
      }
    } catch (const std::exception& e) {
      t.failure = e.what();
      fail(Output::wigner_grid, e);
    }
    summary["wigner"] = per_time;
    summary["files"]["wigner_grid"] = write_table(t, options.out_dir, "wigner", options.format);
  }

  if (wants(Output::qbm_residual)) {
    Table t;
    t.columns = {"t", "x", "residual"};
    try {
      if (sc.model != ModelKind::qbm) throw std::invalid_argument("qbm_residual requires model qbm");
      VectorXd z0 = VectorXd::Zero(2 * (d + N));
      z0(0) = 0.1;
      if (sc.residual.initial) z0 = *sc.residual.initial;
      const auto r = qbm_residual(sc.qbm, z0, sc.t_max, sc.residual.steps.value_or(sc.steps));
      for (std::size_t k = 0; k < r.times.size(); ++k) t.rows.push_back({r.times[k], r.x[k], r.residual[k]});
      summary["qbm_residual"] = {{"sup_norm", r.sup_norm}, {"points", r.times.size()}};
    } catch (const std::exception& e) {
      t.failure = e.what();
      fail(Output::qbm_residual, e);
    }
    summary["files"]["qbm_residual"] = write_table(t, options.out_dir, "qbm_residual", options.format);
  }

  summary["status"] = report.ok ? "ok" : "failed";
  summary["timing"] = {
      {"wall_seconds",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  std::ofstream out(options.out_dir / "summary.json");
  out << summary.dump(2) << '\n';
  return report;
}

}  // namespace gaussflow
