#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "oscidiff/cellsolve.hpp"
#include "oscidiff/fields.hpp"
#include "oscidiff/grid.hpp"
#include "oscidiff/harness.hpp"

namespace oscidiff::cli {

struct FieldSpec {
  std::string name;                       // builtin name; empty when file is set
  std::map<std::string, double> params;
  std::string file;
};

/// Precomputed inputs for the corrector command (constant tensors only).
struct ArtifactPaths {
  std::string cells;
  std::string homog;
  std::vector<std::string> micro;  // one per eps
  bool any() const { return !cells.empty() || !homog.empty() || !micro.empty(); }
};

/// One experiment: everything a subcommand needs, fully resolved.
struct ExperimentConfig {
  FieldSpec field;
  int dim = 1;  // taken from the field
  double p = 0.5;
  double r = 1.0;
  std::string regime = "auto";
  CellGrid cell_grid;
  MacroGrid grid;
  std::vector<std::string> eps_text;  // as written, e.g. "1/16"
  std::vector<double> eps;
  std::string u0 = "sine";
  std::string f = "one";
  std::string out = "oscidiff-out";
  unsigned seed = 1;
  int probes = 64;
  double u0abs = 1.0;
  std::vector<double> u0abs_grid;
  double newton_tol = 1e-9;
  double solver_tol = 1e-10;
  ArtifactPaths artifacts;

  Regime resolved_regime() const;
  StudyConfig study(const PeriodicMatrixField& field, int jobs) const;
  CellSolverOptions cell_options() const;
  NewtonOptions newton_options() const;
};

/// Parses and validates a config document. Every error is an Error with code
/// InvalidConfig (or ParseError for malformed JSON) whose message starts with
/// the offending key, e.g. "config: eps[2]: ...". The field is not loaded
/// here, but its dimension is needed for grid defaults.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source);

/// The resolved config as JSON; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& cfg);

PeriodicMatrixField load_config_field(const ExperimentConfig& cfg);

/// Parses "1/16", "0.0625" or a JSON number into eps.
double parse_eps(const nlohmann::json& v, std::string* text);

}  // namespace oscidiff::cli
