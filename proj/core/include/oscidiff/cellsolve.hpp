#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "oscidiff/fields.hpp"
#include "oscidiff/grid.hpp"
#include "oscidiff/mesh.hpp"

namespace oscidiff {

enum class Regime { Classical, Subcritical, CriticalFDE, CriticalPME, Supercritical };

std::string_view to_string(Regime regime);
Regime regime_from_string(std::string_view name);
bool is_critical(Regime regime);

/// Macroscopic input of the critical cell problems: the exponent p and |u0|
/// at the macroscopic point the cell problem is attached to.
struct CellParameter {
  double p = 0.5;
  double u0abs = 0.0;

  /// (1/p) |u0|^{1-p}: capacity coefficient of the fast-diffusion cell problem.
  double mu_fde() const;
  /// p |u0|^{p-1}: diffusivity scale of the porous-medium cell problem.
  double kappa_pme() const;
};

struct CellSolverOptions {
  double solver_tol = 1e-10;     // relative CG residual
  double periodic_tol = 1e-10;   // L2 defect of the period map fixed point
  int max_sweeps = 500;
  int max_cg_factor = 10;        // max CG iterations = factor * unknowns
};

/// Corrector Phi_k on the cell grid. Slice j holds Phi_k(., s_j); regimes
/// whose correctors do not depend on s store a single slice.
struct CellSolution {
  Regime regime = Regime::Classical;
  CellGrid grid;
  int k = 0;  // direction index, 0-based
  double p = 1.0;
  double u0abs = 0.0;
  double mu = 0.0;     // capacity in mu d_s Phi = div(a(grad Phi + e_k))
  double kappa = 0.0;  // PME only: Phi = kappa Psi
  std::vector<Eigen::VectorXd> slices;
  double residual = 0.0;            // max relative CG residual over solves
  double periodicity_defect = 0.0;  // ||Phi(.,1) - Phi(.,0)||_L2 (critical)
  int sweeps = 0;

  int num_slices() const { return static_cast<int>(slices.size()); }
  bool depends_on_s() const { return slices.size() > 1; }
  StructuredMesh mesh() const;

  /// Largest |<Phi(.,s_j)>_y| over slices.
  double mean_defect() const;
  /// Max |Phi| over all nodes and slices.
  double max_abs() const;
  /// int_J ||Phi(.,s)||^2_{L2(cell)} ds.
  double l2_norm_sq() const;
  /// Psi = Phi / kappa for the porous-medium problem (throws otherwise).
  Eigen::VectorXd psi(int slice) const;
  /// Element-wise gradients of slice j.
  std::vector<Vec> gradients(int slice) const;
};

/// -div_y(a(y)(grad Phi + e_k)) = 0 for an s-independent field.
CellSolution solve_classical_cell(const PeriodicMatrixField& field,
                                  const CellGrid& grid, int k,
                                  const CellSolverOptions& opts = {});

/// Per time slice s_j: -div_y(a(y,s_j)(grad Phi + e_k)) = 0.
CellSolution solve_subcritical_cell(const PeriodicMatrixField& field,
                                    const CellGrid& grid, int k,
                                    const CellSolverOptions& opts = {});

/// Classical problem for the s-averaged coefficient int_0^1 a(y,s) ds.
CellSolution solve_supercritical_cell(const PeriodicMatrixField& field,
                                      const CellGrid& grid, int k,
                                      const CellSolverOptions& opts = {});

/// Time-periodic mu d_s Phi = div_y(a(grad Phi + e_k)), mu = (1/p)|u0|^{1-p},
/// 0 < p < 1. Delegates to the subcritical solve when u0abs = 0.
CellSolution solve_critical_cell_fde(const PeriodicMatrixField& field,
                                     const CellGrid& grid,
                                     const CellParameter& param, int k,
                                     const CellSolverOptions& opts = {});

/// Time-periodic d_s Psi = div_y(a(kappa grad Psi + e_k)), Phi = kappa Psi,
/// kappa = p |u0|^{p-1}, 1 < p < 2. Phi = 0 when u0abs = 0.
CellSolution solve_critical_cell_pme(const PeriodicMatrixField& field,
                                     const CellGrid& grid,
                                     const CellParameter& param, int k,
                                     const CellSolverOptions& opts = {});

/// Solves the time-periodic problem mu d_s Phi = div_y(a(grad Phi + e_k))
/// for a given capacity mu > 0 by implicit-Euler marching over one period
/// and fixed-point iteration of the period map. Shared by both critical
/// regimes; exposed for testing.
CellSolution solve_time_periodic_cell(const PeriodicMatrixField& field,
                                      const CellGrid& grid, double mu, int k,
                                      const CellSolverOptions& opts = {});

/// Dispatches on the regime; param is ignored unless the regime is critical.
CellSolution solve_cell(Regime regime, const PeriodicMatrixField& field,
                        const CellGrid& grid, const CellParameter& param, int k,
                        const CellSolverOptions& opts = {});

/// Discrete H1(cell) seminorm of Phi_a - Phi_b, averaged over s. Slices are
/// broadcast when one of the solutions is s-independent.
double h1_seminorm_distance(const CellSolution& a, const CellSolution& b);

/// Square coefficients of the field on the cell mesh at slice s.
std::vector<Mat> cell_coefficients(const PeriodicMatrixField& field,
                                   const StructuredMesh& mesh, double s);
/// Same, averaged over the Ms slices of the grid.
std::vector<Mat> cell_coefficients_s_averaged(const PeriodicMatrixField& field,
                                              const StructuredMesh& mesh,
                                              int Ms);

/// Interpolated corrector data at arbitrary fast variables (y,s): Phi by
/// (bi/tri)linear interpolation of node values; grad_y Phi by interpolation
/// of square-averaged element gradients located at square centers.
class CellInterpolant {
 public:
  explicit CellInterpolant(const CellSolution& sol);

  double value(const Point& y, double s) const;
  Vec gradient(const Point& y, double s) const;

 private:
  struct Bracket {
    int i0, i1;
    double w;
  };
  Bracket bracket_s(double s) const;

  int dim_;
  int m_;
  int slices_;
  std::vector<Eigen::VectorXd> nodes_;
  // gradient components per slice, indexed [slice][component](square)
  std::vector<std::array<Eigen::VectorXd, 2>> grads_;
};

/// z(x,t,y,s) = sum_k g_k(x,t) Phi_k(y,s) for a macroscopic gradient g.
class CorrectorField {
 public:
  using GradientFn = std::function<Vec(const Point& x, double t)>;

  CorrectorField(std::vector<CellSolution> cells, GradientFn grad_v0);

  double z(const Point& x, double t, const Point& y, double s) const;
  Vec grad_y_z(const Point& x, double t, const Point& y, double s) const;

 private:
  std::vector<CellSolution> cells_;
  std::vector<CellInterpolant> interp_;
  GradientFn grad_v0_;
};

/// Builds z from per-direction solutions; throws RegimeMismatch when the
/// cells disagree on regime/grid or DimensionMismatch when their count
/// differs from the dimension.
CorrectorField assemble_corrector_z(std::vector<CellSolution> cells,
                                    CorrectorField::GradientFn grad_v0);

}  // namespace oscidiff
