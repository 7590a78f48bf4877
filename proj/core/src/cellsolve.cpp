#include "oscidiff/cellsolve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oscidiff/assembly.hpp"
#include "oscidiff/error.hpp"
#include "oscidiff/linalg.hpp"

namespace oscidiff {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Classical: return "classical";
    case Regime::Subcritical: return "subcritical";
    case Regime::CriticalFDE: return "critical-fde";
    case Regime::CriticalPME: return "critical-pme";
    case Regime::Supercritical: return "supercritical";
  }
  return "unknown";
}

Regime regime_from_string(std::string_view name) {
  for (Regime r : {Regime::Classical, Regime::Subcritical, Regime::CriticalFDE,
                   Regime::CriticalPME, Regime::Supercritical})
    if (to_string(r) == name) return r;
  throw Error(Errc::ParseError, "unknown regime '" + std::string(name) + "'");
}

bool is_critical(Regime regime) {
  return regime == Regime::CriticalFDE || regime == Regime::CriticalPME;
}

double CellParameter::mu_fde() const {
  if (u0abs == 0.0) return 0.0;
  return std::pow(u0abs, 1.0 - p) / p;
}

double CellParameter::kappa_pme() const {
  if (u0abs == 0.0) return 0.0;
  return p * std::pow(u0abs, p - 1.0);
}

StructuredMesh CellSolution::mesh() const { return StructuredMesh::periodic(grid.dim, grid.My); }

double CellSolution::mean_defect() const {
  double worst = 0.0;
  for (const auto& s : slices) worst = std::max(worst, std::abs(s.mean()));
  return worst;
}

double CellSolution::max_abs() const {
  double worst = 0.0;
  for (const auto& s : slices) worst = std::max(worst, s.cwiseAbs().maxCoeff());
  return worst;
}

double CellSolution::l2_norm_sq() const {
  double sum = 0.0;
  const double w = grid.dim == 1 ? grid.hy() : grid.hy() * grid.hy();
  for (const auto& s : slices) sum += w * s.squaredNorm();
  return sum / static_cast<double>(slices.size());
}

Eigen::VectorXd CellSolution::psi(int slice) const {
  if (regime != Regime::CriticalPME)
    throw Error(Errc::RegimeMismatch, "Psi exists only for the porous-medium cell problem");
  if (kappa == 0.0) return Eigen::VectorXd::Zero(slices.at(slice).size());
  return slices.at(slice) / kappa;
}

std::vector<Vec> CellSolution::gradients(int slice) const {
  return element_gradients(mesh(), slices.at(slice));
}

std::vector<Mat> cell_coefficients(const PeriodicMatrixField& field, const StructuredMesh& mesh,
                                   double s) {
  return square_coefficients(mesh, [&](const Point& y) { return field(y, s); });
}

std::vector<Mat> cell_coefficients_s_averaged(const PeriodicMatrixField& field,
                                              const StructuredMesh& mesh, int Ms) {
  const int slices = field.s_independent() ? 1 : Ms;
  std::vector<Mat> coef(mesh.squares(), Mat::Zero(field.dim(), field.dim()));
  for (int j = 0; j < slices; ++j) {
    const auto slice = cell_coefficients(field, mesh, static_cast<double>(j) / slices);
    for (int sq = 0; sq < mesh.squares(); ++sq) coef[sq] += slice[sq];
  }
  for (auto& c : coef) c /= static_cast<double>(slices);
  return coef;
}

namespace {

void check_inputs(const PeriodicMatrixField& field, const CellGrid& grid, int k) {
  grid.validate();
  if (grid.dim != field.dim())
    throw Error(Errc::DimensionMismatch, "cell grid and field dimensions differ");
  if (k < 0 || k >= grid.dim) throw Error(Errc::InvalidArgument, "direction index out of range");
}

int max_cg(const CellSolverOptions& opts, int unknowns) {
  return std::max(1, opts.max_cg_factor * unknowns);
}

// Solves K phi = -b on the zero-mean subspace.
Eigen::VectorXd elliptic_solve(const SparseMatrix& K, const Eigen::VectorXd& b,
                               const CellSolverOptions& opts, double& residual,
                               const std::string& where) {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(b.size());
  auto res = conjugate_gradient([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(K * x); },
                                Eigen::VectorXd(-b), phi, opts.solver_tol,
                                max_cg(opts, static_cast<int>(b.size())), true);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "CG did not reach " << opts.solver_tol << " " << where << " (residual "
        << res.relative_residual << " after " << res.iterations << " iterations)";
    throw Error(Errc::SolverDiverged, msg.str());
  }
  residual = std::max(residual, res.relative_residual);
  return phi;
}

CellSolution stationary(Regime regime, const CellGrid& grid, int k,
                        const std::vector<Mat>& coef, const CellSolverOptions& opts) {
  const auto mesh = StructuredMesh::periodic(grid.dim, grid.My);
  CellSolution sol;
  sol.regime = regime;
  sol.grid = grid;
  sol.k = k;
  sol.slices.push_back(elliptic_solve(stiffness(mesh, coef), direction_load(mesh, coef, k), opts,
                                      sol.residual, "in the elliptic cell problem"));
  return sol;
}

}  // namespace

CellSolution solve_classical_cell(const PeriodicMatrixField& field, const CellGrid& grid, int k,
                                  const CellSolverOptions& opts) {
  check_inputs(field, grid, k);
  if (!field.s_independent())
    throw Error(Errc::RegimeMismatch, "classical cell problem needs an s-independent field");
  const auto mesh = StructuredMesh::periodic(grid.dim, grid.My);
  return stationary(Regime::Classical, grid, k, cell_coefficients(field, mesh, 0.0), opts);
}

CellSolution solve_subcritical_cell(const PeriodicMatrixField& field, const CellGrid& grid, int k,
                                    const CellSolverOptions& opts) {
  check_inputs(field, grid, k);
  const auto mesh = StructuredMesh::periodic(grid.dim, grid.My);
  CellSolution sol;
  sol.regime = Regime::Subcritical;
  sol.grid = grid;
  sol.k = k;
  sol.slices.resize(grid.Ms);
  for (int j = 0; j < grid.Ms; ++j) {
    if (field.s_independent() && j > 0) {
      sol.slices[j] = sol.slices[0];
      continue;
    }
    const auto coef = cell_coefficients(field, mesh, grid.hs() * j);
    sol.slices[j] = elliptic_solve(stiffness(mesh, coef), direction_load(mesh, coef, k), opts,
                                   sol.residual, "at slice " + std::to_string(j));
  }
  return sol;
}

CellSolution solve_supercritical_cell(const PeriodicMatrixField& field, const CellGrid& grid,
                                      int k, const CellSolverOptions& opts) {
  check_inputs(field, grid, k);
  const auto mesh = StructuredMesh::periodic(grid.dim, grid.My);
  return stationary(Regime::Supercritical, grid, k,
                    cell_coefficients_s_averaged(field, mesh, grid.Ms), opts);
}

CellSolution solve_time_periodic_cell(const PeriodicMatrixField& field, const CellGrid& grid,
                                      double mu, int k, const CellSolverOptions& opts) {
  check_inputs(field, grid, k);
  if (!(mu > 0.0)) throw Error(Errc::InvalidArgument, "time-periodic cell problem needs mu > 0");
  const auto mesh = StructuredMesh::periodic(grid.dim, grid.My);
  const int S = grid.Ms;
  const double shift = mu * mesh.node_weight() / grid.hs();

  std::vector<SparseMatrix> ops(S);
  std::vector<Eigen::VectorXd> loads(S);
  for (int j = 0; j < S; ++j) {
    const auto coef = cell_coefficients(field, mesh, grid.hs() * j);
    ops[j] = stiffness(mesh, coef);
    for (int i = 0; i < ops[j].rows(); ++i) ops[j].coeffRef(i, i) += shift;
    loads[j] = direction_load(mesh, coef, k);
  }

  CellSolution sol;
  sol.grid = grid;
  sol.k = k;
  sol.mu = mu;
  sol.slices.assign(S, Eigen::VectorXd::Zero(mesh.dofs()));

  // Start from the s-averaged corrector: exact for s-independent fields and
  // the large-mu limit of the periodic orbit.
  double start_residual = 0.0;
  const auto averaged = cell_coefficients_s_averaged(field, mesh, S);
  Eigen::VectorXd state = elliptic_solve(stiffness(mesh, averaged),
                                         direction_load(mesh, averaged, k), opts,
                                         start_residual, "in the averaged start problem");

  const int iters = max_cg(opts, mesh.dofs());
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double residual = 0.0;
    Eigen::VectorXd prev = state;
    for (int j = 0; j < S; ++j) {
      Eigen::VectorXd rhs = shift * prev - loads[j];
      Eigen::VectorXd x = prev;
      auto res = conjugate_gradient(
          [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(ops[j] * v); }, rhs, x,
          opts.solver_tol, iters, true);
      if (!res.converged) {
        std::ostringstream msg;
        msg << "CG did not reach " << opts.solver_tol << " at slice " << j << " of sweep "
            << sweep << " (residual " << res.relative_residual << ")";
        throw Error(Errc::SolverDiverged, msg.str());
      }
      residual = std::max(residual, res.relative_residual);
      sol.slices[j] = x;
      prev = std::move(x);
    }
    sol.periodicity_defect = l2_norm(mesh, sol.slices[S - 1] - state);
    sol.residual = residual;
    sol.sweeps = sweep;
    if (sol.periodicity_defect <= opts.periodic_tol) return sol;
    state = sol.slices[S - 1];
  }
  std::ostringstream msg;
  msg << "period map did not converge in " << opts.max_sweeps << " sweeps (defect "
      << sol.periodicity_defect << ", mu = " << mu << ")";
  throw Error(Errc::PeriodicityNotReached, msg.str());
}

CellSolution solve_critical_cell_fde(const PeriodicMatrixField& field, const CellGrid& grid,
                                     const CellParameter& param, int k,
                                     const CellSolverOptions& opts) {
  if (!(param.p > 0.0 && param.p < 1.0))
    throw Error(Errc::InvalidArgument, "fast-diffusion cell problem needs 0 < p < 1");
  if (!(param.u0abs >= 0.0)) throw Error(Errc::InvalidArgument, "u0abs must be >= 0");
  CellSolution sol = param.u0abs == 0.0
                         ? solve_subcritical_cell(field, grid, k, opts)
                         : solve_time_periodic_cell(field, grid, param.mu_fde(), k, opts);
  sol.regime = Regime::CriticalFDE;
  sol.p = param.p;
  sol.u0abs = param.u0abs;
  sol.mu = param.mu_fde();
  return sol;
}

CellSolution solve_critical_cell_pme(const PeriodicMatrixField& field, const CellGrid& grid,
                                     const CellParameter& param, int k,
                                     const CellSolverOptions& opts) {
  if (!(param.p > 1.0 && param.p < 2.0))
    throw Error(Errc::InvalidArgument, "porous-medium cell problem needs 1 < p < 2");
  if (!(param.u0abs >= 0.0)) throw Error(Errc::InvalidArgument, "u0abs must be >= 0");
  CellSolution sol;
  if (param.u0abs == 0.0) {
    check_inputs(field, grid, k);
    sol.grid = grid;
    sol.k = k;
    sol.slices.push_back(Eigen::VectorXd::Zero(grid.nodes()));
  } else {
    sol = solve_time_periodic_cell(field, grid, 1.0 / param.kappa_pme(), k, opts);
  }
  sol.regime = Regime::CriticalPME;
  sol.p = param.p;
  sol.u0abs = param.u0abs;
  sol.kappa = param.kappa_pme();
  sol.mu = sol.kappa > 0.0 ? 1.0 / sol.kappa : 0.0;
  return sol;
}

CellSolution solve_cell(Regime regime, const PeriodicMatrixField& field, const CellGrid& grid,
                        const CellParameter& param, int k, const CellSolverOptions& opts) {
  CellSolution sol;
  switch (regime) {
    case Regime::Classical: sol = solve_classical_cell(field, grid, k, opts); break;
    case Regime::Subcritical: sol = solve_subcritical_cell(field, grid, k, opts); break;
    case Regime::Supercritical: sol = solve_supercritical_cell(field, grid, k, opts); break;
    case Regime::CriticalFDE: return solve_critical_cell_fde(field, grid, param, k, opts);
    case Regime::CriticalPME: return solve_critical_cell_pme(field, grid, param, k, opts);
  }
  sol.p = param.p;
  return sol;
}

double h1_seminorm_distance(const CellSolution& a, const CellSolution& b) {
  if (!(a.grid.dim == b.grid.dim && a.grid.My == b.grid.My))
    throw Error(Errc::DimensionMismatch, "cell solutions live on different grids");
  const int sa = a.num_slices();
  const int sb = b.num_slices();
  if (sa != sb && sa != 1 && sb != 1)
    throw Error(Errc::DimensionMismatch, "cell solutions have incompatible slice counts");
  const auto mesh = a.mesh();
  const int S = std::max(sa, sb);
  double sum = 0.0;
  for (int j = 0; j < S; ++j) {
    const Eigen::VectorXd diff = a.slices[sa == 1 ? 0 : j] - b.slices[sb == 1 ? 0 : j];
    for (const auto& e : mesh.elements()) sum += e.area * mesh.element_gradient(e, diff).squaredNorm();
  }
  return std::sqrt(sum / S);
}

CellInterpolant::CellInterpolant(const CellSolution& sol)
    : dim_(sol.grid.dim), m_(sol.grid.My), slices_(sol.num_slices()), nodes_(sol.slices) {
  const auto mesh = sol.mesh();
  const int per_square = dim_ == 1 ? 1 : 2;
  grads_.resize(slices_);
  for (int j = 0; j < slices_; ++j) {
    for (auto& g : grads_[j]) g = Eigen::VectorXd::Zero(mesh.squares());
    for (const auto& e : mesh.elements()) {
      const Vec g = mesh.element_gradient(e, nodes_[j]);
      for (int d = 0; d < dim_; ++d) grads_[j][d][e.square] += g[d] / per_square;
    }
  }
}

CellInterpolant::Bracket CellInterpolant::bracket_s(double s) const {
  if (slices_ == 1) return {0, 0, 0.0};
  const double x = wrap_unit(s) * slices_;
  int i0 = static_cast<int>(std::floor(x));
  if (i0 >= slices_) i0 = slices_ - 1;
  return {i0, (i0 + 1) % slices_, x - i0};
}

namespace {

// Periodic linear interpolation weights for values located at (i + offset)/m.
struct Axis {
  int i0, i1;
  double w;
};

Axis axis(double y, int m, double offset) {
  double x = wrap_unit(y) * m - offset;
  if (x < 0.0) x += m;
  int i0 = static_cast<int>(std::floor(x));
  double w = x - i0;
  i0 %= m;
  return {i0, (i0 + 1) % m, w};
}

double interp(const Eigen::VectorXd& v, int dim, int m, const Point& y, double offset) {
  const Axis a = axis(y[0], m, offset);
  if (dim == 1) return (1.0 - a.w) * v[a.i0] + a.w * v[a.i1];
  const Axis b = axis(y[1], m, offset);
  return (1.0 - a.w) * (1.0 - b.w) * v[a.i0 + m * b.i0] + a.w * (1.0 - b.w) * v[a.i1 + m * b.i0] +
         a.w * b.w * v[a.i1 + m * b.i1] + (1.0 - a.w) * b.w * v[a.i0 + m * b.i1];
}

}  // namespace

double CellInterpolant::value(const Point& y, double s) const {
  const Bracket b = bracket_s(s);
  const double v0 = interp(nodes_[b.i0], dim_, m_, y, 0.0);
  if (b.w == 0.0) return v0;
  return (1.0 - b.w) * v0 + b.w * interp(nodes_[b.i1], dim_, m_, y, 0.0);
}

Vec CellInterpolant::gradient(const Point& y, double s) const {
  const Bracket b = bracket_s(s);
  Vec g(dim_);
  for (int d = 0; d < dim_; ++d) {
    g[d] = interp(grads_[b.i0][d], dim_, m_, y, 0.5);
    if (b.w != 0.0) g[d] = (1.0 - b.w) * g[d] + b.w * interp(grads_[b.i1][d], dim_, m_, y, 0.5);
  }
  return g;
}

CorrectorField::CorrectorField(std::vector<CellSolution> cells, GradientFn grad_v0)
    : cells_(std::move(cells)), grad_v0_(std::move(grad_v0)) {
  for (const auto& c : cells_) interp_.emplace_back(c);
}

double CorrectorField::z(const Point& x, double t, const Point& y, double s) const {
  const Vec g = grad_v0_(x, t);
  double sum = 0.0;
  for (std::size_t k = 0; k < interp_.size(); ++k)
    if (g[k] != 0.0) sum += g[k] * interp_[k].value(y, s);
  return sum;
}

Vec CorrectorField::grad_y_z(const Point& x, double t, const Point& y, double s) const {
  const Vec g = grad_v0_(x, t);
  Vec sum = Vec::Zero(static_cast<int>(interp_.size()));
  for (std::size_t k = 0; k < interp_.size(); ++k)
    if (g[k] != 0.0) sum += g[k] * interp_[k].gradient(y, s);
  return sum;
}

CorrectorField assemble_corrector_z(std::vector<CellSolution> cells,
                                    CorrectorField::GradientFn grad_v0) {
  if (cells.empty()) throw Error(Errc::DimensionMismatch, "no cell solutions given");
  const int dim = cells.front().grid.dim;
  if (static_cast<int>(cells.size()) != dim)
    throw Error(Errc::DimensionMismatch, "need one cell solution per direction");
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& c = cells[k];
    if (c.regime != cells.front().regime || !(c.grid == cells.front().grid) ||
        c.u0abs != cells.front().u0abs)
      throw Error(Errc::RegimeMismatch, "cell solutions disagree on regime, grid or |u0|");
    if (c.k != static_cast<int>(k))
      throw Error(Errc::DimensionMismatch, "cell solutions must be ordered by direction");
  }
  return CorrectorField(std::move(cells), std::move(grad_v0));
}

}  // namespace oscidiff
