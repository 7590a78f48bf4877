#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <variant>

#include "CLI11.hpp"

#include "oscidiff/assembly.hpp"
#include "oscidiff/error.hpp"
#include "oscidiff/io.hpp"

namespace oscidiff::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_short(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

using Cell = std::variant<double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Assertion {
  std::string name;
  bool ok = true;
  std::string detail;
};

class AssertionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Collects tables and assertion results of one command; writes CSV files,
/// the JSON mirror and the config echo.
class Output {
 public:
  Output(const ExperimentConfig& cfg, const Options& opts, std::ostream& out)
      : cfg_(cfg), opts_(opts), out_(out), dir_(opts.out.empty() ? cfg.out : opts.out) {
    fs::create_directories(dir_);
    save_text(path("config.json"), to_json(cfg_).dump(2) + "\n");
  }

  std::string path(const std::string& file) const { return (fs::path(dir_) / file).string(); }

  void table(const Table& t) {
    std::vector<std::size_t> width(t.columns.size());
    std::vector<std::vector<std::string>> shown;
    for (std::size_t c = 0; c < t.columns.size(); ++c) width[c] = t.columns[c].size();
    for (const auto& row : t.rows) {
      std::vector<std::string> cells;
      for (std::size_t c = 0; c < row.size(); ++c) {
        cells.push_back(std::holds_alternative<double>(row[c]) ? fmt_short(std::get<double>(row[c]))
                                                               : std::get<std::string>(row[c]));
        width[c] = std::max(width[c], cells.back().size());
      }
      shown.push_back(std::move(cells));
    }
    out_ << "# " << t.name << "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c)
      out_ << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << t.columns[c];
    out_ << "\n";
    for (const auto& row : shown) {
      for (std::size_t c = 0; c < row.size(); ++c)
        out_ << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << row[c];
      out_ << "\n";
    }
    out_ << "\n";

    std::ostringstream csv;
    for (std::size_t c = 0; c < t.columns.size(); ++c) csv << (c ? "," : "") << t.columns[c];
    csv << "\n";
    json rows = json::array();
    for (const auto& row : t.rows) {
      json jr = json::object();
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (std::holds_alternative<double>(row[c])) {
          csv << (c ? "," : "") << fmt17(std::get<double>(row[c]));
          jr[t.columns[c]] = std::get<double>(row[c]);
        } else {
          csv << (c ? "," : "") << std::get<std::string>(row[c]);
          jr[t.columns[c]] = std::get<std::string>(row[c]);
        }
      }
      csv << "\n";
      rows.push_back(jr);
    }
    save_text(path(t.name + ".csv"), csv.str());
    mirror_["tables"][t.name] = rows;
  }

  void check(const std::string& name, bool ok, const std::string& detail) {
    assertions_.push_back({name, ok, detail});
  }

  json& extra() { return mirror_; }

  /// Prints the assertion summary, writes the JSON mirror, and throws on any
  /// failed assertion.
  void finish() {
    if (!assertions_.empty()) {
      Table t{opts_.command + "_assertions", {"assertion", "result", "detail"}, {}};
      for (const auto& a : assertions_)
        t.rows.push_back({a.name, std::string(a.ok ? "pass" : "FAIL"), a.detail});
      table(t);
    }
    if (opts_.json) {
      mirror_["command"] = opts_.command;
      mirror_["config"] = to_json(cfg_);
      save_text(path(opts_.command + ".json"), mirror_.dump(2) + "\n");
    }
    for (const auto& a : assertions_)
      if (!a.ok) throw AssertionFailure(a.name + " violated: " + a.detail);
  }

 private:
  const ExperimentConfig& cfg_;
  const Options& opts_;
  std::ostream& out_;
  std::string dir_;
  json mirror_ = json::object();
  std::vector<Assertion> assertions_;
};

std::vector<std::string> matrix_columns(int dim) {
  if (dim == 1) return {"a11"};
  return {"a11", "a12", "a21", "a22"};
}

void append_matrix(std::vector<Cell>& row, const Mat& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) row.emplace_back(m(i, j));
}

std::vector<CellSolution> solve_cells(const PeriodicMatrixField& field,
                                      const ExperimentConfig& cfg, double u0abs) {
  std::vector<CellSolution> cells;
  for (int k = 0; k < cfg.dim; ++k)
    cells.push_back(solve_cell(cfg.resolved_regime(), field, cfg.cell_grid,
                               CellParameter{cfg.p, u0abs}, k, cfg.cell_options()));
  return cells;
}

/// The homogenized tensor for the config, plus cells per key.
EffectiveTensor build_tensor(const PeriodicMatrixField& field, const ExperimentConfig& cfg,
                             int jobs, std::vector<std::vector<CellSolution>>& cells) {
  if (is_critical(cfg.resolved_regime())) {
    const auto keys = cfg.u0abs_grid.empty() ? default_u0abs_grid() : cfg.u0abs_grid;
    return tabulate_ahom_critical(field, cfg.cell_grid, cfg.p, keys,
                                  {cfg.cell_options(), jobs}, &cells);
  }
  cells = {solve_cells(field, cfg, 0.0)};
  return assemble_ahom(cells.front(), field);
}

/// Max over slices of the spread of the 1D discrete flux a (Phi' + 1), and
/// its distance to the per-slice harmonic mean.
std::pair<double, double> flux_defects_1d(const CellSolution& sol,
                                          const PeriodicMatrixField& field) {
  const auto mesh = sol.mesh();
  double spread = 0.0, gap = 0.0;
  for (int j = 0; j < sol.num_slices(); ++j) {
    const double s = static_cast<double>(j) / sol.grid.Ms;
    const auto coef = sol.regime == Regime::Supercritical
                          ? cell_coefficients_s_averaged(field, mesh, sol.grid.Ms)
                          : cell_coefficients(field, mesh, s);
    const auto grads = sol.gradients(j);
    double lo = 1e300, hi = -1e300, sum = 0.0;
    for (std::size_t t = 0; t < grads.size(); ++t) {
      const double flux = coef[t](0, 0) * (grads[t][0] + 1.0);
      lo = std::min(lo, flux);
      hi = std::max(hi, flux);
      sum += flux;
    }
    spread = std::max(spread, hi - lo);
    // harmonic mean in y by a fine midpoint rule, independent of the cell grid
    const int n = 4096;
    double inv = 0.0;
    for (int i = 0; i < n; ++i) {
      const Point y{(i + 0.5) / n, 0.0};
      double a = 0.0;
      if (sol.regime == Regime::Supercritical) {
        for (int q = 0; q < sol.grid.Ms; ++q)
          a += field(y, static_cast<double>(q) / sol.grid.Ms)(0, 0) / sol.grid.Ms;
      } else {
        a = field(y, s)(0, 0);
      }
      inv += 1.0 / a / n;
    }
    gap = std::max(gap, std::abs(sum / grads.size() - 1.0 / inv));
  }
  return {spread, gap};
}

void cmd_cell(const ExperimentConfig& cfg, const PeriodicMatrixField& field, Output& out) {
  const Regime regime = cfg.resolved_regime();
  const auto cells = solve_cells(field, cfg, cfg.u0abs);
  {
    std::ofstream os(out.path("cells.cell"));
    write_cells(os, cells);
  }
  const bool flux1d = cfg.dim == 1 && !is_critical(regime);
  Table t{"cell_summary",
          {"k", "max_abs_phi", "mean_defect", "periodicity_defect", "residual", "sweeps"},
          {}};
  if (flux1d) {
    t.columns.push_back("flux_spread");
    t.columns.push_back("flux_oracle_gap");
  }
  const CellSolverOptions opts = cfg.cell_options();
  for (const auto& c : cells) {
    std::vector<Cell> row{double(c.k + 1), c.max_abs(), c.mean_defect(), c.periodicity_defect,
                          c.residual, double(c.sweeps)};
    if (flux1d) {
      const auto [spread, gap] = flux_defects_1d(c, field);
      row.emplace_back(spread);
      row.emplace_back(gap);
    }
    t.rows.push_back(row);
    const std::string k = "k=" + std::to_string(c.k + 1);
    out.check("zero-mean corrector (" + k + ")", c.mean_defect() <= 1e-10,
              "mean defect " + fmt_short(c.mean_defect()));
    out.check("solver residual (" + k + ")", c.residual <= opts.solver_tol,
              "residual " + fmt_short(c.residual));
    if (is_critical(regime))
      out.check("time-periodic corrector (" + k + ")", c.periodicity_defect <= opts.periodic_tol,
                "defect " + fmt_short(c.periodicity_defect));
  }
  out.extra()["regime"] = std::string(to_string(regime));
  out.table(t);
}

void cmd_ahom(const ExperimentConfig& cfg, const PeriodicMatrixField& field, Output& out,
              int jobs) {
  std::vector<std::vector<CellSolution>> cells;
  const EffectiveTensor tensor = build_tensor(field, cfg, jobs, cells);
  {
    std::ofstream os(out.path("ahom.txt"));
    write_tensor(os, tensor);
  }
  {
    std::ofstream os(out.path("ahom_table.csv"));
    write_tensor_csv(os, tensor);
  }
  Table t{"ahom", {"u0abs"}, {}};
  for (const auto& c : matrix_columns(cfg.dim)) t.columns.push_back(c);
  t.columns.push_back("asymmetry");
  for (std::size_t i = 0; i < tensor.matrices.size(); ++i) {
    const Mat& m = tensor.matrices[i];
    std::vector<Cell> row{tensor.is_table() ? tensor.keys[i] : 0.0};
    append_matrix(row, m);
    row.emplace_back((m - m.transpose()).cwiseAbs().maxCoeff());
    t.rows.push_back(row);
  }
  out.table(t);

  const auto probes = probe_vectors(cfg.dim, cfg.probes, cfg.seed);
  try {
    const auto rep = ellipticity_report(tensor, field.lambda(), field.Lambda(), probes);
    out.check("improved ellipticity bounds", true, "min slack " + fmt_short(rep.min_slack));
  } catch (const Error& e) {
    if (e.code() != Errc::BoundViolated) throw;
    out.check("improved ellipticity bounds", false, std::string(e.message()));
  }
  Table sk{"skew", {"u0abs", "asymmetry", "max_mismatch", "tolerance"}, {}};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double key = tensor.is_table() ? tensor.keys[i] : 0.0;
    const std::string label = is_critical(tensor.regime)
                                  ? "skew part vs corrector integral (u0abs=" + fmt_short(key) + ")"
                                  : "symmetry of a_hom";
    try {
      const auto rep = skew_report(tensor.matrices[i], cells[i]);
      sk.rows.push_back({key, rep.asymmetry, rep.max_mismatch, rep.tolerance});
      out.check(label, true, "asymmetry " + fmt_short(rep.asymmetry));
    } catch (const Error& e) {
      if (e.code() != Errc::SymmetryViolated && e.code() != Errc::SkewFormulaMismatch) throw;
      out.check(label, false, std::string(e.message()));
    }
  }
  out.table(sk);
  out.extra()["regime"] = std::string(to_string(tensor.regime));
}

MicroProblem micro_problem(const PeriodicMatrixField& field, const ExperimentConfig& cfg,
                           double eps, const std::string& u0, const std::string& f) {
  MicroProblem mp;
  mp.field = &field;
  mp.eps = eps;
  mp.r = cfg.r;
  mp.p = cfg.p;
  mp.data = make_data(cfg.dim, u0, f);
  mp.grid = cfg.grid;
  mp.newton = cfg.newton_options();
  return mp;
}

std::vector<Cell> trajectory_row(const SpaceTimeField& traj) {
  const auto ef = energy_functionals(traj);
  int max_newton = 0;
  for (std::size_t n = 1; n < traj.newton_iterations.size(); ++n)
    max_newton = std::max(max_newton, traj.newton_iterations[n]);
  return {double(traj.steps()), double(max_newton), traj.max_residual, ef.energy.back(),
          ef.dissipation.back(), double(traj.clamp_count)};
}

const std::vector<std::string> kTrajectoryColumns{"steps",        "max_newton", "max_residual",
                                                  "final_energy", "dissipation", "clamps"};

std::string micro_file(std::size_t i) { return "micro_" + std::to_string(i) + ".traj"; }

void cmd_micro(const ExperimentConfig& cfg, const PeriodicMatrixField& field, Output& out) {
  Table t{"micro", {"eps"}, {}};
  for (const auto& c : kTrajectoryColumns) t.columns.push_back(c);
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    const auto traj = solve_micro(micro_problem(field, cfg, cfg.eps[i], cfg.u0, cfg.f));
    std::ofstream os(out.path(micro_file(i)));
    write_trajectory(os, traj);
    auto row = trajectory_row(traj);
    row.insert(row.begin(), cfg.eps[i]);
    t.rows.push_back(row);
  }
  out.table(t);
}

SpaceTimeField solve_homog(const ExperimentConfig& cfg, const EffectiveTensor& tensor) {
  HomogenizedProblem hp;
  hp.tensor = &tensor;
  hp.p = cfg.p;
  hp.data = make_data(cfg.dim, cfg.u0, cfg.f);
  hp.grid = cfg.grid;
  hp.coupling = tensor.is_table() ? Coupling::CriticalTable : Coupling::Constant;
  hp.newton = cfg.newton_options();
  return solve_homogenized(hp);
}

void cmd_homog(const ExperimentConfig& cfg, const PeriodicMatrixField& field, Output& out,
               int jobs) {
  std::vector<std::vector<CellSolution>> cells;
  const EffectiveTensor tensor = build_tensor(field, cfg, jobs, cells);
  const auto traj = solve_homog(cfg, tensor);
  {
    std::ofstream os(out.path("ahom.txt"));
    write_tensor(os, tensor);
  }
  {
    std::ofstream os(out.path("homog.traj"));
    write_trajectory(os, traj);
  }
  Table t{"homog", kTrajectoryColumns, {trajectory_row(traj)}};
  out.table(t);
}

bool trivial_report(const ConvergenceReport& rep, double newton_tol) {
  for (const auto& name : {"sol_err", "grad_corr_err", "flux_corr_err", "dtime_corr_err"})
    for (double v : rep.column(name))
      if (!(v <= 10.0 * newton_tol)) return false;
  return true;
}

void write_plot_data(const ConvergenceReport& rep, Output& out) {
  std::ostringstream gp;
  gp << "set logscale xy\nset xlabel \"eps\"\nset ylabel \"error\"\nset key left top\nplot";
  bool first = true;
  for (const auto& name : report_columns()) {
    if (name == "eps") continue;
    std::ostringstream dat;
    dat << "# eps " << name << "\n";
    const auto eps = rep.column("eps");
    const auto col = rep.column(name);
    for (std::size_t i = 0; i < eps.size(); ++i) dat << fmt17(eps[i]) << " " << fmt17(col[i]) << "\n";
    save_text(out.path(name + ".dat"), dat.str());
    gp << (first ? " " : ", \\\n     ") << "\"" << name << ".dat\" using 1:2 with linespoints title \""
       << name << "\"";
    first = false;
  }
  gp << "\n";
  save_text(out.path("plot.gp"), gp.str());
}

void check_decreasing(Output& out, const ConvergenceReport& rep, const std::string& column,
                      const std::string& label) {
  const auto v = rep.column(column);
  std::string detail;
  for (double x : v) detail += (detail.empty() ? "" : " > ") + fmt_short(x);
  out.check(label + " decreasing in eps", rep.decreasing(column), detail);
}

void report_study(const ExperimentConfig& cfg, const ConvergenceReport& rep, Output& out,
                  const Options& opts, bool corrector_only) {
  if (rep.partial) throw Error(Errc::SolverDiverged, "partial report: " + rep.cause);
  const bool trivial = trivial_report(rep, cfg.newton_tol);
  const bool several = rep.rows.size() > 1;
  out.extra()["regime"] = std::string(to_string(rep.regime));
  out.extra()["trivial"] = trivial;
  if (corrector_only) {
    Table t{"corrector",
            {"eps", "grad_corr_err", "grad_plain_err", "flux_corr_err", "flux_plain_err",
             "dtime_corr_err"},
            {}};
    for (const auto& r : rep.rows)
      t.rows.push_back({r.eps, r.corr.grad_corr, r.corr.grad_plain, r.corr.flux_corr,
                        r.corr.flux_plain, r.corr.dtime_corr});
    out.table(t);
  } else {
    std::ostringstream csv;
    write_report_csv(csv, rep);
    save_text(out.path("report.csv"), csv.str());
    Table t{"report_summary", report_columns(), {}};
    t.columns.push_back("sol_err_rho1");
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      std::vector<Cell> row;
      for (const auto& c : t.columns) row.emplace_back(rep.column(c)[i]);
      t.rows.push_back(row);
    }
    out.table(t);
    Table rt{"rates", {"column", "rate", "defined"}, {}};
    for (const auto& r : rep.rates)
      rt.rows.push_back({r.column, r.rate, std::string(r.defined ? "yes" : "no")});
    out.table(rt);
    write_plot_data(rep, out);
  }
  if (trivial || !several) {
    out.extra()["monotonicity"] = trivial ? "not asserted: errors at solver tolerance"
                                          : "not asserted: single eps";
    return;
  }
  if (!corrector_only) {
    check_decreasing(out, rep, "sol_err", "solution error");
    check_decreasing(out, rep, "sol_err_rho1", "solution error (rho = 1)");
  }
  check_decreasing(out, rep, "grad_corr_err", "gradient corrector defect");
  check_decreasing(out, rep, "flux_corr_err", "flux corrector defect");
  check_decreasing(out, rep, "dtime_corr_err", "time-derivative corrector defect");
  if (const char* dir = std::getenv("OSCIDIFF_FIXTURES")) {
    if (const auto floor = plain_gradient_floor(dir, cfg)) {
      const auto plain = rep.column("grad_plain_err");
      const double lo = *std::min_element(plain.begin(), plain.end());
      out.check("plain gradient error above reference floor", lo >= *floor,
                "min " + fmt_short(lo) + " vs floor " + fmt_short(*floor));
    }
  }
  if (opts.strict_rates && !corrector_only) {
    for (const auto& r : rep.rates)
      if (r.column == "sol_err")
        out.check("fitted solution error rate >= 0.5", r.defined && r.rate >= 0.5,
                  "rate " + fmt_short(r.rate));
  }
}

void cmd_converge(const ExperimentConfig& cfg, const PeriodicMatrixField& field, Output& out,
                  const Options& opts) {
  const auto rep = run_convergence_study(cfg.study(field, opts.jobs));
  report_study(cfg, rep, out, opts, false);
}

void cmd_corrector(const ExperimentConfig& cfg, const PeriodicMatrixField& field, Output& out,
                   const Options& opts) {
  if (!cfg.artifacts.any()) {
    const auto rep = run_convergence_study(cfg.study(field, opts.jobs));
    report_study(cfg, rep, out, opts, true);
    return;
  }
  const Regime regime = cfg.resolved_regime();
  if (is_critical(regime))
    throw Error(Errc::InvalidConfig,
                "config: artifacts: precomputed artifacts need a constant homogenized tensor");
  const auto need = [](const std::string& path, const std::string& what) {
    if (path.empty() || !fs::exists(path))
      throw Error(Errc::MissingArtifact, what + " file not found: '" + path + "'");
  };
  need(cfg.artifacts.cells, "cell");
  need(cfg.artifacts.homog, "homogenized trajectory");
  if (cfg.artifacts.micro.size() != cfg.eps.size())
    throw Error(Errc::MissingArtifact, "one micro trajectory per eps entry is required");
  for (const auto& m : cfg.artifacts.micro) need(m, "micro trajectory");

  std::ifstream cs(cfg.artifacts.cells);
  auto cells = read_cells(cs);
  const EffectiveTensor tensor = assemble_ahom(cells, field);
  const CorrectorBasis basis(cells);
  std::ifstream hs(cfg.artifacts.homog);
  const auto homog = read_trajectory(hs);

  ConvergenceReport rep;
  rep.regime = regime;
  rep.p = cfg.p;
  rep.r = cfg.r;
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    std::ifstream ms(cfg.artifacts.micro[i]);
    const auto micro = read_trajectory(ms);
    EpsRow row;
    row.eps = cfg.eps[i];
    row.sol_err = solution_error(micro, homog, 2.0);
    row.sol_err_rho1 = solution_error(micro, homog, 1.0);
    row.corr = corrector_errors(micro, homog, basis, field, tensor, cfg.eps[i], cfg.r);
    rep.rows.push_back(row);
  }
  report_study(cfg, rep, out, opts, true);
}

void cmd_audit(const ExperimentConfig& cfg, const PeriodicMatrixField& field, Output& out) {
  std::vector<SpaceTimeField> trajs;
  for (double eps : cfg.eps) trajs.push_back(solve_micro(micro_problem(field, cfg, eps, cfg.u0, cfg.f)));
  const auto audit = audit_uniform_estimates(trajs, cfg.eps, field,
                                             make_data(cfg.dim, cfg.u0, cfg.f), 0.1, false);
  Table t{"audit", {"item", "max_value", "bound", "ok"}, {}};
  for (const auto& item : audit.items) {
    const double mx = *std::max_element(item.values.begin(), item.values.end());
    t.rows.push_back({item.name, mx, item.bound, std::string(item.ok ? "yes" : "no")});
    out.check(item.name + " (" + item.statement + ")", item.ok,
              "max " + fmt_short(mx) + " vs bound " + fmt_short(item.bound));
  }
  out.table(t);

  // H^-1 contraction against a second initial datum, and energy decay without source.
  const std::string other = cfg.u0 == "half-sine" ? "sine" : "half-sine";
  const HMinus1 hm(cfg.grid);
  Table ct{"contraction", {"eps", "sup_diff_sq", "initial_diff_sq", "C_T"}, {}};
  Table et{"energy_decay", {"eps", "max_increase", "E0"}, {}};
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    const double eps = cfg.eps[i];
    const auto second = solve_micro(micro_problem(field, cfg, eps, other, cfg.f));
    double sup = 0.0;
    for (int n = 0; n <= trajs[i].steps(); ++n) {
      const double d = hm.of_function(trajs[i].u(n) - second.u(n));
      sup = std::max(sup, d * d);
    }
    const double d0 = hm.of_function(trajs[i].u(0) - second.u(0));
    const double ct_const = contraction_constant(field, eps, cfg.r, cfg.grid.T);
    ct.rows.push_back({eps, sup, d0 * d0, ct_const});
    out.check("H^-1 contraction estimate (eps=" + fmt_short(eps) + ")",
              sup <= 1.05 * ct_const * d0 * d0,
              fmt_short(sup) + " vs " + fmt_short(1.05 * ct_const * d0 * d0));

    const auto free = solve_micro(micro_problem(field, cfg, eps, cfg.u0, "zero"));
    const auto ef = energy_functionals(free);
    double worst = -1e300;
    for (std::size_t n = 1; n < ef.energy.size(); ++n)
      worst = std::max(worst, ef.energy[n] - ef.energy[n - 1]);
    et.rows.push_back({eps, worst, ef.energy.front()});
    out.check("energy non-increasing without source (eps=" + fmt_short(eps) + ")",
              worst <= 1e-12 * std::max(ef.energy.front(), 1e-300), "max step increase " + fmt_short(worst));
  }
  out.table(ct);
  out.table(et);
}

}  // namespace

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidConfig:
    case Errc::ParseError:
    case Errc::InvalidArgument:
    case Errc::DimensionMismatch:
    case Errc::RegimeMismatch:
    case Errc::AsymmetricCoefficient:
    case Errc::EllipticityViolation:
      return kConfigError;
    case Errc::BoundViolated:
    case Errc::SymmetryViolated:
    case Errc::SkewFormulaMismatch:
      return kAssertionFailed;
    case Errc::SolverDiverged:
    case Errc::PeriodicityNotReached:
    case Errc::NewtonStalled:
    case Errc::StepRejected:
    case Errc::MissingArtifact:
      return kSolverError;
  }
  return kSolverError;
}

std::string fixture_name(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "converge_" << (cfg.field.file.empty() ? cfg.field.name : fs::path(cfg.field.file).stem().string())
     << "_p" << cfg.p << "_r" << cfg.r << ".csv";
  return os.str();
}

std::map<std::string, std::vector<double>> read_report_csv(const std::string& path) {
  std::istringstream is(load_text(path));
  std::string line;
  std::vector<std::string> header;
  std::map<std::string, std::vector<double>> cols;
  if (!std::getline(is, line)) throw Error(Errc::ParseError, path + ": empty report");
  {
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) header.push_back(cell);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (!std::getline(ls, cell, ','))
        throw Error(Errc::ParseError, path + ": short row");
      cols[header[c]].push_back(std::stod(cell));
    }
  }
  return cols;
}

std::optional<double> plain_gradient_floor(const std::string& dir, const ExperimentConfig& cfg) {
  const auto path = fs::path(dir) / fixture_name(cfg);
  if (!fs::exists(path)) return std::nullopt;
  const auto cols = read_report_csv(path.string());
  const auto it = cols.find("eps");
  const auto plain = cols.find("grad_plain_err");
  if (it == cols.end() || plain == cols.end() || it->second.size() != cfg.eps.size())
    return std::nullopt;
  for (std::size_t i = 0; i < cfg.eps.size(); ++i)
    if (std::abs(it->second[i] - cfg.eps[i]) > 1e-12 * cfg.eps[i]) return std::nullopt;
  return 0.5 * *std::min_element(plain->second.begin(), plain->second.end());
}

int execute(const Options& opts, const ExperimentConfig& cfg, std::ostream& out,
            std::ostream& err) {
  try {
    const PeriodicMatrixField field = load_config_field(cfg);
    (void)validate_ellipticity(field, 4096);
    Output output(cfg, opts, out);
    if (opts.command == "cell") cmd_cell(cfg, field, output);
    else if (opts.command == "ahom") cmd_ahom(cfg, field, output, opts.jobs);
    else if (opts.command == "micro") cmd_micro(cfg, field, output);
    else if (opts.command == "homog") cmd_homog(cfg, field, output, opts.jobs);
    else if (opts.command == "converge") cmd_converge(cfg, field, output, opts);
    else if (opts.command == "corrector") cmd_corrector(cfg, field, output, opts);
    else if (opts.command == "audit") cmd_audit(cfg, field, output);
    else throw Error(Errc::InvalidConfig, "unknown command '" + opts.command + "'");
    output.finish();
    return kOk;
  } catch (const AssertionFailure& e) {
    err << "oscidiff " << opts.command << ": assertion failed: " << e.what() << "\n";
    return kAssertionFailed;
  } catch (const Error& e) {
    err << "oscidiff " << opts.command << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "oscidiff " << opts.command << ": " << e.what() << "\n";
    return kSolverError;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Space-time homogenization experiments for oscillating nonlinear diffusion"};
  app.require_subcommand(1, 1);
  Options opts;
  const std::pair<const char*, const char*> commands[] = {
      {"cell", "solve the cell problems and write the correctors"},
      {"ahom", "assemble the homogenized matrix (a table in the critical regime)"},
      {"micro", "solve the oscillating problem for every eps"},
      {"homog", "solve the homogenized problem"},
      {"converge", "run the eps study and write report.csv"},
      {"corrector", "corrector defects from saved or recomputed trajectories"},
      {"audit", "check energy bounds, contraction and uniform estimates"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", opts.out, "output directory (overrides the config)");
    sub->add_flag("--json", opts.json, "mirror every table into <command>.json");
    sub->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--strict-rates", opts.strict_rates, "assert fitted solution error rate >= 0.5");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "oscidiff: " << e.what() << "\n";
    return kConfigError;
  }
  opts.command = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = parse_config_text(load_text(opts.config_path), opts.config_path);
  } catch (const Error& e) {
    err << "oscidiff " << opts.command << ": " << e.what() << "\n";
    return e.code() == Errc::MissingArtifact ? kConfigError : exit_code_for(e.code());
  }
  return execute(opts, cfg, out, err);
}

}  // namespace oscidiff::cli
