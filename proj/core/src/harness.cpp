#include "oscidiff/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "oscidiff/assembly.hpp"
#include "oscidiff/error.hpp"
#include "parallel.hpp"

namespace oscidiff {

Regime regime_for(double r, double p) {
  if (!(r > 0.0)) throw Error(Errc::InvalidConfig, "r must be positive");
  if (std::abs(r - 2.0) < 1e-12) {
    if (p > 0.0 && p < 1.0) return Regime::CriticalFDE;
    if (p > 1.0 && p < 2.0) return Regime::CriticalPME;
    if (p == 1.0) throw Error(Errc::InvalidConfig, "critical regime requires p ≠ 1");
    throw Error(Errc::InvalidConfig, "critical regime requires 0 < p < 2");
  }
  return r < 2.0 ? Regime::Subcritical : Regime::Supercritical;
}

CorrectorBasis::CorrectorBasis(std::vector<CellSolution> cells) {
  if (cells.empty()) throw Error(Errc::DimensionMismatch, "no cell solutions given");
  regime_ = cells.front().regime;
  dim_ = cells.front().grid.dim;
  if (static_cast<int>(cells.size()) != dim_)
    throw Error(Errc::DimensionMismatch, "need one cell solution per direction");
  if (is_critical(regime_))
    throw Error(Errc::RegimeMismatch, "critical correctors need a |u0| table");
  interp_.emplace_back();
  for (const auto& c : cells) {
    if (c.regime != regime_) throw Error(Errc::RegimeMismatch, "mixed regimes in corrector basis");
    interp_.back().emplace_back(c);
  }
}

CorrectorBasis::CorrectorBasis(std::vector<double> keys,
                               std::vector<std::vector<CellSolution>> table)
    : keys_(std::move(keys)) {
  if (table.empty() || table.size() != keys_.size())
    throw Error(Errc::DimensionMismatch, "one set of cell solutions per table key expected");
  regime_ = table.front().front().regime;
  dim_ = table.front().front().grid.dim;
  if (!is_critical(regime_)) throw Error(Errc::RegimeMismatch, "tables exist only in the critical regime");
  for (const auto& row : table) {
    if (static_cast<int>(row.size()) != dim_)
      throw Error(Errc::DimensionMismatch, "need one cell solution per direction");
    interp_.emplace_back();
    for (const auto& c : row) {
      if (c.regime != regime_) throw Error(Errc::RegimeMismatch, "mixed regimes in corrector basis");
      interp_.back().emplace_back(c);
    }
  }
}

Vec CorrectorBasis::correction(const Vec& g, const Point& y, double s, double u0abs) const {
  auto sum_at = [&](std::size_t key) {
    Vec out = Vec::Zero(dim_);
    for (int k = 0; k < dim_; ++k)
      if (g[k] != 0.0) out += g[k] * interp_[key][k].gradient(y, s);
    return out;
  };
  if (keys_.empty()) return sum_at(0);
  const TableBracket b = bracket_table(keys_, u0abs);
  if (b.lo == b.hi || b.theta == 0.0) return sum_at(b.lo);
  return (1.0 - b.theta) * sum_at(b.lo) + b.theta * sum_at(b.hi);
}

namespace {

void check_pair(const SpaceTimeField& a, const SpaceTimeField& b) {
  if (!(a.grid == b.grid)) throw Error(Errc::DimensionMismatch, "trajectories live on different grids");
  if (a.p != b.p) throw Error(Errc::InvalidArgument, "trajectories use different p");
  if (a.steps() != b.steps()) throw Error(Errc::DimensionMismatch, "trajectories have different lengths");
}

void check_regime(const CorrectorBasis& basis, const PeriodicMatrixField& field,
                  const EffectiveTensor& tensor, double r, double p) {
  if (basis.regime() != tensor.regime)
    throw Error(Errc::RegimeMismatch, "corrector basis and homogenized tensor disagree on the regime");
  if (basis.dim() != field.dim()) throw Error(Errc::DimensionMismatch, "corrector basis dimension");
  if (basis.regime() == Regime::Classical) {
    if (!field.s_independent())
      throw Error(Errc::RegimeMismatch, "classical correctors need an s-independent field");
    return;
  }
  if (basis.regime() != regime_for(r, p))
    throw Error(Errc::RegimeMismatch, std::string("correctors of the ") +
                                          std::string(to_string(basis.regime())) +
                                          " regime do not match r");
}

}  // namespace

CorrectorErrors corrector_errors(const SpaceTimeField& u_eps, const SpaceTimeField& u_0,
                                 const CorrectorBasis& basis, const PeriodicMatrixField& field,
                                 const EffectiveTensor& tensor, double eps, double r) {
  check_pair(u_eps, u_0);
  check_regime(basis, field, tensor, r, u_eps.p);
  const MacroGrid& grid = u_eps.grid;
  const auto mesh = u_eps.mesh();
  const double dt = grid.dt();
  const double w = mesh.node_weight();
  const double time_scale = std::pow(eps, r);
  const auto& elems = mesh.elements();
  const int dim = grid.dim;
  const int corners = dim == 1 ? 2 : 4;
  std::optional<HMinus1> hm1;
  if (dim == 2) hm1.emplace(grid);

  std::vector<Point> centroid(elems.size());
  for (std::size_t e = 0; e < elems.size(); ++e) {
    Point c{0.0, 0.0};
    for (int v = 0; v < elems[e].vertices; ++v) {
      const Point g = mesh.grid_point(elems[e].grid[v]);
      c[0] += g[0] / elems[e].vertices;
      c[1] += g[1] / elems[e].vertices;
    }
    centroid[e] = c;
  }

  CorrectorErrors out;
  std::vector<Mat> coef;
  std::vector<double> u_square(mesh.squares());
  std::vector<Vec> X(elems.size()), jh(elems.size());
  Eigen::VectorXd u_prev_eps = u_eps.u(0), u_prev_0 = u_0.u(0);
  for (int n = 1; n <= grid.nt; ++n) {
    const double t = n * dt;
    const double s = t / time_scale;
    if (coef.empty() || !field.s_independent())
      coef = square_coefficients(mesh, [&](const Point& x) {
        return sample_oscillating(field, x, t, eps, r);
      });
    const Eigen::VectorXd ue = u_eps.u(n);
    const Eigen::VectorXd u0 = u_0.u(n);
    for (int sq = 0; sq < mesh.squares(); ++sq) {
      const auto c = mesh.square_corners(sq);
      double sum = 0.0;
      for (int v = 0; v < corners; ++v) {
        const int d = mesh.dof_of_grid(c[v]);
        if (d >= 0) sum += u0[d];
      }
      u_square[sq] = std::abs(sum / corners);
    }
    double grad_corr = 0.0, grad_plain = 0.0, flux_corr = 0.0, flux_plain = 0.0;
    for (std::size_t e = 0; e < elems.size(); ++e) {
      const auto& el = elems[e];
      const Vec ge = mesh.element_gradient(el, u_eps.v[n]);
      const Vec g0 = mesh.element_gradient(el, u_0.v[n]);
      const double ua = u_square[el.square];
      const Point y{centroid[e][0] / eps, centroid[e][1] / eps};
      const Vec corr = basis.correction(g0, y, s, ua);
      const Mat& a = coef[el.square];
      const Vec je = a * ge;
      X[e] = a * (g0 + corr);
      jh[e] = tensor.at(ua) * g0;
      grad_corr += el.area * (ge - g0 - corr).squaredNorm();
      grad_plain += el.area * (ge - g0).squaredNorm();
      flux_corr += el.area * (je - X[e]).squaredNorm();
      flux_plain += el.area * (je - jh[e]).squaredNorm();
    }
    out.grad_corr += dt * grad_corr;
    out.grad_plain += dt * grad_plain;
    out.flux_corr += dt * flux_corr;
    out.flux_plain += dt * flux_plain;

    const Eigen::VectorXd rate = ((ue - u_prev_eps) - (u0 - u_prev_0)) / dt;
    double norm = 0.0;
    if (dim == 1) {
      Eigen::VectorXd F(elems.size());
      for (std::size_t e = 0; e < elems.size(); ++e) F[e] = X[e][0] - jh[e][0];
      norm = hminus1_norm_1d(rate, F, mesh.h());
    } else {
      std::vector<Vec> diff(elems.size());
      for (std::size_t e = 0; e < elems.size(); ++e) diff[e] = X[e] - jh[e];
      norm = hm1->of_functional(w * rate + flux_functional(mesh, diff));
    }
    out.dtime_corr += dt * norm * norm;
    u_prev_eps = ue;
    u_prev_0 = u0;
  }
  return out;
}

double corrector_error(const SpaceTimeField& u_eps, const SpaceTimeField& u_0,
                       const CorrectorBasis& basis, const PeriodicMatrixField& field,
                       const EffectiveTensor& tensor, double eps, double r) {
  return corrector_errors(u_eps, u_0, basis, field, tensor, eps, r).grad_corr;
}

double flux_corrector_error(const SpaceTimeField& u_eps, const SpaceTimeField& u_0,
                            const CorrectorBasis& basis, const PeriodicMatrixField& field,
                            const EffectiveTensor& tensor, double eps, double r) {
  return corrector_errors(u_eps, u_0, basis, field, tensor, eps, r).flux_corr;
}

double time_derivative_corrector_error(const SpaceTimeField& u_eps, const SpaceTimeField& u_0,
                                       const CorrectorBasis& basis,
                                       const PeriodicMatrixField& field,
                                       const EffectiveTensor& tensor, double eps, double r) {
  return corrector_errors(u_eps, u_0, basis, field, tensor, eps, r).dtime_corr;
}

double solution_error(const SpaceTimeField& u_eps, const SpaceTimeField& u_0, double rho) {
  check_pair(u_eps, u_0);
  if (!(rho >= 1.0)) throw Error(Errc::InvalidArgument, "rho must be >= 1");
  const double q = u_eps.p + 1.0;
  double sum = 0.0;
  for (int n = 1; n <= u_eps.steps(); ++n)
    sum += u_eps.grid.dt() * std::pow(lq_norm(u_eps.u(n) - u_0.u(n), q, u_eps.grid), rho);
  return std::pow(sum, 1.0 / rho);
}

Regime StudyConfig::resolved_regime() const { return regime ? *regime : regime_for(r, p); }

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{"eps",           "sol_err",        "grad_corr_err",
                                             "flux_corr_err", "dtime_corr_err", "grad_plain_err",
                                             "flux_plain_err"};
  return cols;
}

std::vector<double> ConvergenceReport::column(const std::string& name) const {
  std::vector<double> out;
  for (const auto& row : rows) {
    if (name == "eps") out.push_back(row.eps);
    else if (name == "sol_err") out.push_back(row.sol_err);
    else if (name == "sol_err_rho1") out.push_back(row.sol_err_rho1);
    else if (name == "grad_corr_err") out.push_back(row.corr.grad_corr);
    else if (name == "flux_corr_err") out.push_back(row.corr.flux_corr);
    else if (name == "dtime_corr_err") out.push_back(row.corr.dtime_corr);
    else if (name == "grad_plain_err") out.push_back(row.corr.grad_plain);
    else if (name == "flux_plain_err") out.push_back(row.corr.flux_plain);
    else throw Error(Errc::InvalidArgument, "unknown report column '" + name + "'");
  }
  return out;
}

bool ConvergenceReport::decreasing(const std::string& name) const {
  const auto col = column(name);
  for (std::size_t i = 1; i < col.size(); ++i)
    if (!(col[i] < col[i - 1])) return false;
  return true;
}

RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& err,
                 const std::string& column) {
  RateFit fit;
  fit.column = column;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < std::min(eps.size(), err.size()); ++i)
    if (eps[i] > 0.0 && err[i] > 0.0 && std::isfinite(err[i])) {
      x.push_back(std::log(eps[i]));
      y.push_back(std::log(err[i]));
    }
  if (x.size() < 2) return fit;
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return fit;
  fit.rate = (n * sxy - sx * sy) / denom;
  fit.defined = true;
  return fit;
}

ConvergenceReport run_convergence_study(const StudyConfig& cfg, StudyArtifacts* artifacts) {
  if (!cfg.field) throw Error(Errc::InvalidArgument, "study needs a coefficient field");
  const auto& field = *cfg.field;
  const Regime regime = cfg.resolved_regime();
  if (cfg.eps.empty()) throw Error(Errc::InvalidConfig, "empty eps list");
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    if (!is_dyadic(cfg.eps[i]))
      throw Error(Errc::InvalidConfig, "eps entries must be of the form 1/2^m");
    if (i > 0 && !(cfg.eps[i] < cfg.eps[i - 1]))
      throw Error(Errc::InvalidConfig, "eps list must be strictly decreasing");
  }
  if (cfg.grid.dim != field.dim() || cfg.cell_grid.dim != field.dim())
    throw Error(Errc::DimensionMismatch, "grids and field dimensions differ");

  StudyArtifacts local;
  StudyArtifacts& art = artifacts ? *artifacts : local;
  std::optional<CorrectorBasis> basis;
  Coupling coupling = Coupling::Constant;
  if (is_critical(regime)) {
    const auto keys = cfg.u0abs_grid.empty() ? default_u0abs_grid() : cfg.u0abs_grid;
    art.tensor = tabulate_ahom_critical(field, cfg.cell_grid, cfg.p, keys,
                                        {cfg.cell_opts, cfg.jobs}, &art.cells);
    basis.emplace(keys, art.cells);
    coupling = Coupling::CriticalTable;
  } else {
    std::vector<CellSolution> cells(field.dim());
    detail::parallel_for(field.dim(), cfg.jobs, [&](int k) {
      cells[k] = solve_cell(regime, field, cfg.cell_grid, CellParameter{cfg.p, 0.0}, k,
                            cfg.cell_opts);
    });
    art.tensor = assemble_ahom(cells, field);
    art.cells = {cells};
    basis.emplace(cells);
  }

  HomogenizedProblem hp;
  hp.tensor = &art.tensor;
  hp.p = cfg.p;
  hp.data = cfg.data;
  hp.grid = cfg.grid;
  hp.coupling = coupling;
  hp.newton = cfg.newton;
  art.homogenized = solve_homogenized(hp);

  ConvergenceReport rep;
  rep.regime = regime;
  rep.p = cfg.p;
  rep.r = cfg.r;
  const int m = static_cast<int>(cfg.eps.size());
  rep.rows.resize(m);
  art.micro.assign(m, SpaceTimeField{});
  std::vector<std::string> failures(m);
  detail::parallel_for(m, cfg.jobs, [&](int i) {
    EpsRow& row = rep.rows[i];
    row.eps = cfg.eps[i];
    try {
      MicroProblem mp;
      mp.field = &field;
      mp.eps = cfg.eps[i];
      mp.r = cfg.r;
      mp.p = cfg.p;
      mp.data = cfg.data;
      mp.grid = cfg.grid;
      mp.newton = cfg.newton;
      art.micro[i] = solve_micro(mp);
      row.sol_err = solution_error(art.micro[i], art.homogenized, 2.0);
      row.sol_err_rho1 = solution_error(art.micro[i], art.homogenized, 1.0);
      row.corr = corrector_errors(art.micro[i], art.homogenized, *basis, field, art.tensor,
                                  cfg.eps[i], cfg.r);
    } catch (const Error& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.sol_err = row.sol_err_rho1 = nan;
      row.corr = {nan, nan, nan, nan, nan};
      std::ostringstream msg;
      msg << "eps = " << cfg.eps[i] << ": " << e.message();
      failures[i] = msg.str();
    }
  });
  for (const auto& f : failures)
    if (!f.empty()) {
      rep.partial = true;
      rep.cause += (rep.cause.empty() ? "" : "; ") + f;
    }
  const auto eps_col = rep.column("eps");
  // a column at solver tolerance is round-off: no rate
  const double floor = 10 * cfg.newton.tol;
  auto rate_of = [&](const std::string& name) {
    const auto col = rep.column(name);
    auto fit = fit_rate(eps_col, col, name);
    if (std::all_of(col.begin(), col.end(), [&](double e) { return e <= floor; })) fit.defined = false;
    return fit;
  };
  for (const auto& name : report_columns())
    if (name != "eps") rep.rates.push_back(rate_of(name));
  rep.rates.push_back(rate_of("sol_err_rho1"));
  return rep;
}

UniformAudit audit_uniform_estimates(const std::vector<SpaceTimeField>& trajs,
                                     const std::vector<double>& eps,
                                     const PeriodicMatrixField& field, const ProblemData& data,
                                     double slack, bool throw_on_failure) {
  if (trajs.empty() || trajs.size() != eps.size())
    throw Error(Errc::DimensionMismatch, "one trajectory per eps expected");
  const MacroGrid& grid = trajs.front().grid;
  const double p = trajs.front().p;
  const double lambda = field.lambda();
  const double dt = grid.dt();
  const HMinus1 hm1(grid);

  double f_dual_sq = 0.0;   // int ||f||^2_{H^-1}
  double f_l3p = 0.0;       // int ||f||_{L^{3-p}}
  for (int n = 1; n <= grid.nt; ++n) {
    const Eigen::VectorXd fn = sample_nodes(grid, data.f, n * dt);
    const double d = hm1.of_function(fn);
    f_dual_sq += dt * d * d;
    f_l3p += dt * lq_norm(fn, 3.0 - p, grid);
  }

  UniformAudit audit;
  AuditItem sup_item{"sup-energy", "sup_t ||u||^{p+1}_{L^{p+1}} <= ||u0||^{p+1} + (p+1)/(2 lambda) int ||f||^2_{H^-1}", {}, 0.0, true};
  AuditItem diss_item{"dissipation", "lambda int ||grad v||^2 <= 2/(p+1) ||u0||^{p+1} + (1/lambda) int ||f||^2_{H^-1}", {}, 0.0, true};
  AuditItem grad_item{"gradient-u", "int ||grad u||^2 <= (S^{2-p} ||f||_{L1 L^{3-p}} + ||u0||^{3-p}/(3-p)) / (lambda p (2-p))", {}, 0.0, true};
  const bool have_grad = p > 0.0 && p < 2.0;

  for (const auto& traj : trajs) {
    if (!(traj.grid == grid) || traj.p != p)
      throw Error(Errc::DimensionMismatch, "trajectories differ in grid or p");
    const auto mesh = traj.mesh();
    const Eigen::VectorXd u0 = traj.u(0);
    const double u0_p1 = std::pow(lq_norm(u0, p + 1.0, grid), p + 1.0);
    sup_item.bound = u0_p1 + (p + 1.0) / (2.0 * lambda) * f_dual_sq;
    diss_item.bound = 2.0 / (p + 1.0) * u0_p1 + f_dual_sq / lambda;

    double sup = 0.0, diss = 0.0, grad_u = 0.0;
    for (int n = 0; n <= traj.steps(); ++n) {
      const Eigen::VectorXd un = traj.u(n);
      sup = std::max(sup, std::pow(lq_norm(un, p + 1.0, grid), p + 1.0));
      if (n > 0) {
        diss += dt * traj.grad_sq[n];
        double g = 0.0;
        for (const auto& e : mesh.elements()) g += e.area * mesh.element_gradient(e, un).squaredNorm();
        grad_u += dt * g;
      }
    }
    sup_item.values.push_back(sup);
    diss_item.values.push_back(lambda * diss);
    if (have_grad) {
      const double q = 3.0 - p;
      const double U = std::pow(lq_norm(u0, q, grid), q) / q;
      // Largest root of S^q/q - S^{q-1} F - U = 0.
      auto phi = [&](double S) { return std::pow(S, q) / q - std::pow(S, q - 1.0) * f_l3p - U; };
      double hi = 1.0;
      while (phi(hi) < 0.0) hi *= 2.0;
      double lo = 0.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) < 0.0 ? lo : hi) = mid;
      }
      grad_item.bound = (std::pow(hi, q - 1.0) * f_l3p + U) / (lambda * p * (2.0 - p));
      grad_item.values.push_back(grad_u);
    }
  }

  std::vector<AuditItem> bounded{sup_item, diss_item};
  if (have_grad) bounded.push_back(grad_item);
  for (auto& item : bounded) {
    for (double v : item.values)
      if (v > (1.0 + slack) * item.bound) item.ok = false;
    audit.items.push_back(item);
  }
  for (const auto& item : bounded) {
    AuditItem uni{"uniformity:" + item.name, "max over eps within the slack of the finest eps",
                  item.values, 0.0, true};
    uni.bound = (1.0 + slack) * item.values.back();
    for (double v : item.values)
      if (v > uni.bound) uni.ok = false;
    audit.items.push_back(uni);
  }
  for (const auto& item : audit.items) audit.ok = audit.ok && item.ok;
  if (!audit.ok && throw_on_failure) {
    for (const auto& item : audit.items)
      if (!item.ok) {
        std::ostringstream msg;
        msg << "uniform estimate '" << item.name << "' violated (" << item.statement << "): bound "
            << item.bound << ", values";
        for (double v : item.values) msg << " " << v;
        throw Error(Errc::BoundViolated, msg.str());
      }
  }
  return audit;
}

void write_report_csv(std::ostream& os, const ConvergenceReport& report) {
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  std::vector<std::vector<double>> data;
  for (const auto& c : cols) data.push_back(report.column(c));
  char buf[64];
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", data[c][r]);
      os << (c ? "," : "") << buf;
    }
    os << "\n";
  }
}

}  // namespace oscidiff
