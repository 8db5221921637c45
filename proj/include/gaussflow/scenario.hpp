#pragma once

// Scenario documents (YAML) describing one run, or a top-level list of runs.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaussflow/bipartite.hpp"
#include "gaussflow/models.hpp"
#include "gaussflow/reduced.hpp"
#include "gaussflow/states.hpp"
#include "gaussflow/wigner_grid.hpp"

namespace gaussflow {

// Schema violation; the message carries origin, line and key.
class ScenarioError : public std::invalid_argument {
 public:
  ScenarioError(const std::string& what, int line, std::string key)
      : std::invalid_argument(what), line_(line), key_(std::move(key)) {}
  int line() const noexcept { return line_; }  // 1-based, 0 if unknown
  const std::string& key() const noexcept { return key_; }

 private:
  int line_;
  std::string key_;
};

enum class ModelKind { two_oscillator, qbm, custom };
const char* to_string(ModelKind m);

enum class Output {
  trajectory,
  coefficients,
  critical_time,
  purity_rate,
  correlation_rate,
  wigner_grid,
  qbm_residual,
};
const char* to_string(Output o);
Output output_from_string(const std::string& s);

struct ScenarioTolerances {
  double integrator = tolerances::kIntegrator;
  double validity = tolerances::kValidity;
  double singular_rcond = tolerances::kSingularBlock;
  double critical_margin = 1e-6;
  double critical_rel = 1e-10;
  double wigner_boundary = 1e-8;
  double wigner_spectral = 1e-8;
};

struct CouplingDrive {
  double omega = 0;
  double phase = 0;
};

struct WignerSettings {
  double half_width = 8;
  int points = 256;
  int padding = 4;
  int order = 5;
  std::vector<double> times;  // empty: t_max only
};

struct CriticalTimeSettings {
  std::optional<double> t_max;  // defaults to the time grid end
  double step = 0;              // 0: automatic
};

struct QBMResidualSettings {
  std::optional<VectorXd> initial;  // default: x = 0.1, everything else 0
  std::optional<int> steps;         // defaults to time.steps
};

struct Scenario {
  std::string name;
  std::string origin;  // file path or "<string>"
  ModelKind model = ModelKind::two_oscillator;
  TwoOscillatorParams two_oscillator;
  QBMParams qbm;
  MatrixXd system_hessian;       // custom model
  MatrixXd environment_hessian;  // custom model
  MatrixXd coupling;             // custom model
  std::optional<CouplingDrive> drive;

  std::optional<BipartiteSystem> system;
  GaussianState<double> system_state;
  GaussianState<double> environment_state;
  std::string system_state_label;
  std::string environment_state_label;

  double t_max = 10;
  int steps = 1000;
  Picture picture = Picture::interaction;
  std::vector<Output> outputs;
  ScenarioTolerances tolerances;
  WignerSettings wigner;
  CriticalTimeSettings critical;
  QBMResidualSettings residual;

  const BipartiteSystem& bipartite() const { return *system; }
  bool wants(Output o) const;
};

// A single scenario document; a top-level list is rejected here.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");

// One scenario per entry of a top-level list, or a single one.
std::vector<Scenario> parse_scenarios(const std::string& text,
                                      const std::string& origin = "<string>");

std::vector<Scenario> load_scenarios(const std::string& path);

}  // namespace gaussflow
