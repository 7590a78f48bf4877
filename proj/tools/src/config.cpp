#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "oscidiff/error.hpp"
#include "oscidiff/io.hpp"

namespace oscidiff::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw Error(Errc::InvalidConfig, "config: " + key + ": " + msg);
}

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      fail(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}

double number(const json& obj, const std::string& key, const std::string& path, double def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int integer(const json& obj, const std::string& key, const std::string& path, int def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

std::string text(const json& obj, const std::string& key, const std::string& path,
                 const std::string& def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

int default_nt(double r) {
  if (r < 2.0) return 1024;
  if (r == 2.0) return 8192;
  return 65536;
}

std::string eps_label(double eps) {
  const double m = std::round(-std::log2(eps));
  std::ostringstream os;
  os << "1/" << static_cast<long long>(std::llround(std::exp2(m)));
  return os.str();
}

}  // namespace

double parse_eps(const json& v, std::string* label) {
  double eps = 0.0;
  if (v.is_number()) {
    eps = v.get<double>();
  } else if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        eps = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
      } else {
        const std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        std::size_t u1 = 0, u2 = 0;
        const double a = std::stod(num, &u1), b = std::stod(den, &u2);
        if (u1 != num.size() || u2 != den.size() || b == 0.0) throw std::invalid_argument(s);
        eps = a / b;
      }
    } catch (const std::exception&) {
      throw Error(Errc::InvalidConfig, "cannot parse '" + s + "' as a number");
    }
  } else {
    throw Error(Errc::InvalidConfig, "expected a number or a fraction string");
  }
  if (!(eps > 0.0)) throw Error(Errc::InvalidConfig, "eps must be positive");
  if (!is_dyadic(eps)) throw Error(Errc::InvalidConfig, "not a dyadic eps (expected 1/2^m)");
  if (label) *label = eps_label(eps);
  return eps;
}

PeriodicMatrixField load_config_field(const ExperimentConfig& cfg) {
  if (!cfg.field.file.empty()) return load_field(cfg.field.file);
  return make_builtin_field(cfg.field.name, cfg.field.params);
}

Regime ExperimentConfig::resolved_regime() const {
  if (regime == "auto") return regime_for(r, p);
  if (regime == "classical") return Regime::Classical;
  if (regime == "subcritical") return Regime::Subcritical;
  if (regime == "supercritical") return Regime::Supercritical;
  // "critical"
  return regime_for(2.0, p);
}

CellSolverOptions ExperimentConfig::cell_options() const {
  CellSolverOptions o;
  o.solver_tol = solver_tol;
  return o;
}

NewtonOptions ExperimentConfig::newton_options() const {
  NewtonOptions o;
  o.tol = newton_tol;
  return o;
}

StudyConfig ExperimentConfig::study(const PeriodicMatrixField& fld, int jobs) const {
  StudyConfig s;
  s.field = &fld;
  s.p = p;
  s.r = r;
  s.regime = resolved_regime();
  s.eps = eps;
  s.grid = grid;
  s.cell_grid = cell_grid;
  s.data = make_data(dim, u0, f);
  s.newton = newton_options();
  s.cell_opts = cell_options();
  s.u0abs_grid = u0abs_grid;
  s.jobs = jobs;
  return s;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) fail("<root>", "expected a JSON object");
  reject_unknown(doc, "",
                 {"field", "p", "r", "regime", "grids", "eps", "data", "out", "seed", "probes",
                  "u0abs", "u0abs_grid", "newton_tol", "solver_tol", "artifacts"});
  ExperimentConfig c;

  if (!doc.contains("field")) fail("field", "missing");
  const auto& fj = doc.at("field");
  if (fj.is_string()) {
    c.field.name = fj.get<std::string>();
  } else if (fj.is_object()) {
    reject_unknown(fj, "field", {"name", "params", "file"});
    c.field.name = text(fj, "name", "field.name", "");
    c.field.file = text(fj, "file", "field.file", "");
    if (fj.contains("params")) {
      const auto& pj = fj.at("params");
      if (!pj.is_object()) fail("field.params", "expected an object");
      for (auto it = pj.begin(); it != pj.end(); ++it) {
        if (!it.value().is_number()) fail("field.params." + it.key(), "expected a number");
        c.field.params[it.key()] = it.value().get<double>();
      }
    }
  } else {
    fail("field", "expected a builtin name or an object");
  }
  if (c.field.name.empty() == c.field.file.empty())
    fail("field", "give exactly one of 'name' and 'file'");
  try {
    c.dim = load_config_field(c).dim();
  } catch (const Error& e) {
    fail(c.field.file.empty() ? "field.name" : "field.file", std::string(e.message()));
  }

  c.p = number(doc, "p", "p", c.p);
  c.r = number(doc, "r", "r", c.r);
  if (!(c.p > 0.0 && c.p <= 2.0)) fail("p", "must lie in (0, 2]");
  if (!(c.r > 0.0)) fail("r", "must be positive");
  c.regime = text(doc, "regime", "regime", "auto");
  static const std::set<std::string> regimes{"auto", "classical", "subcritical", "critical",
                                             "supercritical"};
  if (!regimes.count(c.regime))
    fail("regime", "expected auto | classical | subcritical | critical | supercritical");
  Regime regime{};
  try {
    regime = c.resolved_regime();
  } catch (const Error& e) {
    fail("regime", std::string(e.message()));
  }
  if (is_critical(regime) && !(c.p < 2.0)) fail("p", "critical regime requires p < 2");
  if (regime == Regime::Classical && !load_config_field(c).s_independent())
    fail("regime", "classical regime requires an s-independent field");

  const json grids = doc.value("grids", json::object());
  if (!grids.is_object()) fail("grids", "expected an object");
  reject_unknown(grids, "grids", {"My", "Ms", "nx", "nt", "T"});
  c.cell_grid = CellGrid::defaults(c.dim);
  c.cell_grid.My = integer(grids, "My", "grids.My", c.cell_grid.My);
  c.cell_grid.Ms = integer(grids, "Ms", "grids.Ms", c.cell_grid.Ms);
  c.grid.dim = c.dim;
  c.grid.nx = integer(grids, "nx", "grids.nx", c.dim == 1 ? 1023 : 255);
  c.grid.nt = integer(grids, "nt", "grids.nt", default_nt(c.r));
  c.grid.T = number(grids, "T", "grids.T", 0.25);
  try {
    c.cell_grid.validate();
  } catch (const Error& e) {
    fail("grids", std::string(e.message()));
  }
  try {
    c.grid.validate();
  } catch (const Error& e) {
    fail("grids", std::string(e.message()));
  }

  const json eps = doc.value("eps", json::array({"1/8", "1/16", "1/32"}));
  if (!eps.is_array() || eps.empty()) fail("eps", "expected a non-empty array");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const std::string key = "eps[" + std::to_string(i) + "]";
    std::string label;
    double e = 0.0;
    try {
      e = parse_eps(eps[i], &label);
    } catch (const Error& err) {
      fail(key, std::string(err.message()));
    }
    if (!c.eps.empty() && !(e < c.eps.back())) fail(key, "eps list must be strictly decreasing");
    c.eps.push_back(e);
    c.eps_text.push_back(label);
  }
  if ((c.grid.nx + 1) * c.eps.back() < 8.0 - 1e-12)
    fail("grids.nx", "the finest eps needs at least 8 grid points per period");

  const json data = doc.value("data", json::object());
  if (!data.is_object()) fail("data", "expected an object");
  reject_unknown(data, "data", {"u0", "f"});
  c.u0 = text(data, "u0", "data.u0", c.u0);
  c.f = text(data, "f", "data.f", c.f);
  try {
    (void)make_data(c.dim, c.u0, c.f);
  } catch (const Error& e) {
    fail("data", std::string(e.message()));
  }

  c.out = text(doc, "out", "out", c.out);
  const int seed = integer(doc, "seed", "seed", 1);
  if (seed < 0) fail("seed", "must be non-negative");
  c.seed = static_cast<unsigned>(seed);
  c.probes = integer(doc, "probes", "probes", c.probes);
  if (c.probes < 1) fail("probes", "must be positive");
  c.u0abs = number(doc, "u0abs", "u0abs", c.u0abs);
  if (!(c.u0abs >= 0.0)) fail("u0abs", "must be non-negative");
  if (doc.contains("u0abs_grid")) {
    const auto& g = doc.at("u0abs_grid");
    if (!g.is_array()) fail("u0abs_grid", "expected an array");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g[i].is_number()) fail("u0abs_grid[" + std::to_string(i) + "]", "expected a number");
      c.u0abs_grid.push_back(g[i].get<double>());
    }
    if (c.u0abs_grid.size() < 4) fail("u0abs_grid", "needs at least 4 entries");
    if (c.u0abs_grid.front() != 0.0) fail("u0abs_grid", "must start with 0");
    for (std::size_t i = 1; i < c.u0abs_grid.size(); ++i)
      if (!(c.u0abs_grid[i] > c.u0abs_grid[i - 1])) fail("u0abs_grid", "must be increasing");
  }
  c.newton_tol = number(doc, "newton_tol", "newton_tol", c.newton_tol);
  c.solver_tol = number(doc, "solver_tol", "solver_tol", c.solver_tol);
  if (!(c.newton_tol > 0.0)) fail("newton_tol", "must be positive");
  if (!(c.solver_tol > 0.0)) fail("solver_tol", "must be positive");

  if (doc.contains("artifacts")) {
    const auto& a = doc.at("artifacts");
    if (!a.is_object()) fail("artifacts", "expected an object");
    reject_unknown(a, "artifacts", {"cells", "homog", "micro"});
    c.artifacts.cells = text(a, "cells", "artifacts.cells", "");
    c.artifacts.homog = text(a, "homog", "artifacts.homog", "");
    if (a.contains("micro")) {
      const auto& m = a.at("micro");
      if (!m.is_array()) fail("artifacts.micro", "expected an array of paths");
      for (const auto& v : m) {
        if (!v.is_string()) fail("artifacts.micro", "expected an array of paths");
        c.artifacts.micro.push_back(v.get<std::string>());
      }
    }
  }
  return c;
}

ExperimentConfig parse_config_text(const std::string& txt, const std::string& source) {
  json doc;
  try {
    doc = json::parse(txt);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < txt.size(); ++i)
      if (txt[i] == '\n') ++line;
    throw Error(Errc::ParseError,
                source + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json j;
  if (c.field.file.empty()) {
    j["field"] = {{"name", c.field.name}, {"params", c.field.params}};
  } else {
    j["field"] = {{"file", c.field.file}};
  }
  j["p"] = c.p;
  j["r"] = c.r;
  j["regime"] = c.regime;
  j["grids"] = {{"My", c.cell_grid.My}, {"Ms", c.cell_grid.Ms}, {"nx", c.grid.nx},
                {"nt", c.grid.nt},      {"T", c.grid.T}};
  j["eps"] = c.eps_text;
  j["data"] = {{"u0", c.u0}, {"f", c.f}};
  j["out"] = c.out;
  j["seed"] = c.seed;
  j["probes"] = c.probes;
  j["u0abs"] = c.u0abs;
  if (!c.u0abs_grid.empty()) j["u0abs_grid"] = c.u0abs_grid;
  j["newton_tol"] = c.newton_tol;
  j["solver_tol"] = c.solver_tol;
  if (c.artifacts.any()) {
    json a = json::object();
    if (!c.artifacts.cells.empty()) a["cells"] = c.artifacts.cells;
    if (!c.artifacts.homog.empty()) a["homog"] = c.artifacts.homog;
    if (!c.artifacts.micro.empty()) a["micro"] = c.artifacts.micro;
    j["artifacts"] = a;
  }
  return j;
}

}  // namespace oscidiff::cli
