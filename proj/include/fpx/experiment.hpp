#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpx/common.hpp"
#include "fpx/solver.hpp"

namespace fpx::exp {

/// One experiment: a model, a starting point, output times, the methods to
/// compare, and grid/solver settings.  Parsed from `key = value` text where
/// dotted keys form tables (param.*, grid.*, solver.*) and whitespace
/// separates array elements.
struct ExperimentSpec {
  std::string model_id;
  std::map<std::string, double> params;
  std::vector<double> y0;
  std::vector<double> times;
  std::vector<std::string> methods;
  // 1 entry in 1D; 3 entries (t11 t12 t22) for a symmetric 2D matrix
  std::optional<std::vector<double>> theta_override;
  SolverConfig solver;
  std::string out_dir;
  std::string reference;  // empty = solver if present, else exact, else first
};

ExperimentSpec parse_spec_text(const std::string& text,
                               const std::string& origin = "<config>");
ExperimentSpec parse_spec_file(const std::string& path);

std::vector<std::string> preset_names();
/// Throws invalid_argument for unknown names.
const std::string& preset_text(const std::string& name);

/// Run every method x time, write one CSV per pair plus summary.json, and
/// return the run directory.  threads <= 0 selects hardware concurrency.
std::string run_experiment(const ExperimentSpec& spec,
                           const std::string& out_override = "",
                           int threads = 0);

/// Mode-doubling convergence study at the largest requested time, reported
/// as a JSON document.
std::string converge_json(const ExperimentSpec& spec);

}  // namespace fpx::exp
