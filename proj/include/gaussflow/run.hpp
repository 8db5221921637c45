#pragma once

// Orchestration of a scenario run: computes the requested outputs, writes the
// tables and a summary document.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaussflow/scenario.hpp"

namespace gaussflow {

enum class TableFormat { csv, json };
TableFormat table_format_from_string(const std::string& s);

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::optional<double> integrator_tol;        // overrides the scenario value
  TableFormat format = TableFormat::csv;
  std::optional<std::vector<Output>> outputs;  // overrides the scenario list
};

struct RunReport {
  bool ok = true;
  std::filesystem::path out_dir;
  nlohmann::json summary;
};

RunReport run(const Scenario& scenario, const RunOptions& options);

// Validity of both initial states and basic facts about the assembled system.
nlohmann::json validation_report(const Scenario& scenario);

// Shortest representation that round-trips, at most 17 significant digits.
std::string format_double(double v);

}  // namespace gaussflow
