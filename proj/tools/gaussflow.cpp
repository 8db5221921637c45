// Command-line front end: gaussflow <subcommand> --scenario FILE [--out DIR] [--tol X] [--format csv|json]

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <map>

#include "gaussflow/errors.hpp"
#include "gaussflow/run.hpp"
#include "gaussflow/scenario.hpp"
#include "gaussflow/version.hpp"

namespace {

using nlohmann::json;
namespace gf = gaussflow;

json error_json(const std::exception& e) {
  json j{{"status", "error"}, {"message", e.what()}};
  if (const auto* s = dynamic_cast<const gf::ScenarioError*>(&e)) {
    j["error"] = "scenario";
    j["line"] = s->line();
    j["key"] = s->key();
  } else if (const auto* v = dynamic_cast<const gf::InvalidStateError*>(&e)) {
    j["error"] = "invalid_state";
    j["min_symplectic_eigenvalue"] = v->min_symplectic_eigenvalue();
  } else if (dynamic_cast<const std::invalid_argument*>(&e)) {
    j["error"] = "invalid_argument";
  } else {
    j["error"] = "runtime";
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian open-system dynamics from scenario files"};
  app.set_version_flag("--version", std::string(gf::kVersion));
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::optional<double> tol;
  std::string format = "csv";

  const std::map<std::string, std::optional<gf::Output>> commands{
      {"simulate", std::nullopt},
      {"coefficients", gf::Output::coefficients},
      {"critical-time", gf::Output::critical_time},
      {"purity-rate", gf::Output::purity_rate},
      {"correlation-rate", gf::Output::correlation_rate},
      {"wigner", gf::Output::wigner_grid},
      {"qbm-residual", gf::Output::qbm_residual},
  };
  const std::map<std::string, std::string> help{
      {"simulate", "run every output listed in the scenario"},
      {"coefficients", "master-equation coefficients on the time grid"},
      {"critical-time", "first zero of det Phi_ii"},
      {"purity-rate", "second derivative of the purity at t = 0"},
      {"correlation-rate", "initial rate of system-environment correlations"},
      {"wigner", "reduced Wigner function on a phase-space grid"},
      {"qbm-residual", "residual of the bath integro-differential equation"},
  };

  auto add_common = [&](CLI::App* sub, bool with_output) {
    sub->add_option("--scenario", scenario_path, "scenario file (YAML)")->required()->check(CLI::ExistingFile);
    if (!with_output) return;
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--tol", tol, "integrator tolerance (overrides the scenario)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--format", format, "table format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
  };
  for (const auto& [name, _] : commands) add_common(app.add_subcommand(name, help.at(name)), true);
  add_common(app.add_subcommand("validate", "parse the scenario and report state validity"), false);

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  std::vector<gf::Scenario> scenarios;
  try {
    scenarios = gf::load_scenarios(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << error_json(e).dump() << '\n';
    return 2;
  }

  if (cmd == "validate") {
    json out = json::array();
    for (const auto& sc : scenarios) out.push_back(gf::validation_report(sc));
    std::cout << (out.size() == 1 ? out[0] : out).dump(2) << '\n';
    return 0;
  }

  gf::RunOptions opts;
  opts.integrator_tol = tol;
  opts.format = gf::table_format_from_string(format);
  if (const auto& only = commands.at(cmd)) opts.outputs = std::vector<gf::Output>{*only};

  bool ok = true;
  json listing = json::array();
  for (const auto& sc : scenarios) {
    opts.out_dir = scenarios.size() == 1 ? std::filesystem::path(out_dir)
                                         : std::filesystem::path(out_dir) / sc.name;
    try {
      const auto report = gf::run(sc, opts);
      listing.push_back({{"name", sc.name},
                         {"status", report.ok ? "ok" : "failed"},
                         {"out", opts.out_dir.string()}});
      if (!report.ok) {
        ok = false;
        std::cerr << json{{"status", "failed"},
                          {"name", sc.name},
                          {"failures", report.summary["failures"]}}
                         .dump()
                  << '\n';
      }
    } catch (const std::exception& e) {
      ok = false;
      json err = error_json(e);
      err["name"] = sc.name;
      std::cerr << err.dump() << '\n';
      listing.push_back({{"name", sc.name}, {"status", "error"}});
    }
  }
  std::cout << listing.dump(2) << '\n';
  return ok ? 0 : 1;
}
