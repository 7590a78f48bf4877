#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "oscidiff/cellsolve.hpp"

namespace oscidiff {

/// Homogenized matrix: a single constant matrix, or for the critical regime
/// a table over |u0| keyed at `keys` (sorted, first key 0) and interpolated
/// linearly in log(1 + |u0|).
struct EffectiveTensor {
  Regime regime = Regime::Classical;
  int dim = 1;
  double p = 1.0;
  std::string field_id;
  CellGrid grid;

  std::vector<double> keys;       // empty for a constant tensor
  std::vector<Mat> matrices;      // one per key, or exactly one
  std::vector<Mat> gram;          // G_jk = int int grad Phi_j . grad Phi_k
  std::vector<std::vector<double>> phi_l2;  // int_J ||Phi_k||^2 ds per k

  bool is_table() const { return !keys.empty(); }
  const Mat& constant() const;

  /// Matrix at |u0|; clamps to the table hull and bumps *clamped if given.
  Mat at(double u0abs, std::size_t* clamped = nullptr) const;
};

/// a_hom e_k = int_J int_cell a (grad Phi_k + e_k) by quadrature of the
/// discrete flux; cells holds one solution per direction.
EffectiveTensor assemble_ahom(std::span<const CellSolution> cells,
                              const PeriodicMatrixField& field);

std::vector<double> default_u0abs_grid();

struct CriticalTableOptions {
  CellSolverOptions solver;
  int jobs = 1;
};

/// Solves the critical cell problems for every |u0| key and stores the
/// resulting matrices. cells_out (optional) receives the cell solutions,
/// indexed [key][k].
EffectiveTensor tabulate_ahom_critical(
    const PeriodicMatrixField& field, const CellGrid& grid, double p,
    const std::vector<double>& u0abs_grid, const CriticalTableOptions& opts = {},
    std::vector<std::vector<CellSolution>>* cells_out = nullptr);

/// Interpolation weight between two neighbouring keys (linear in log(1+u)).
struct TableBracket {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double theta = 0.0;
  bool clamped = false;
};
TableBracket bracket_table(const std::vector<double>& keys, double u0abs);

/// j_hom = a_hom(|u0|) grad_v0.
Vec apply(const EffectiveTensor& tensor, double u0val, const Vec& grad_v0,
          std::size_t* clamped = nullptr);

struct EllipticityReport {
  double min_slack = 0.0;     // min over probes/matrices of both bound gaps
  std::size_t witness_matrix = 0;
  Vec witness_xi;
  bool lower_side = true;     // which bound attained the minimum
  int probes = 0;
};

/// Improved ellipticity sandwich
///   lambda (|xi|^2 + xi.G xi) <= a_hom xi.xi <= Lambda (|xi|^2 + xi.G xi)
/// with G the Gram matrix of corrector gradients. Throws BoundViolated when
/// min_slack < -tol.
EllipticityReport ellipticity_report(const EffectiveTensor& tensor,
                                     double lambda, double Lambda,
                                     std::span<const Vec> probes,
                                     double tol = 1e-8);

/// Quasi-random unit probes (deterministic in seed).
std::vector<Vec> probe_vectors(int dim, int count, unsigned seed = 1);

struct SkewReport {
  Mat skew;            // (a_hom - a_hom^T)/2
  Mat skew_integral;   // mu int_J <d_s Phi_k, Phi_j> ds, entry (j,k)
  double max_mismatch = 0.0;
  double tolerance = 0.0;
  double asymmetry = 0.0;  // max |a_hom - a_hom^T|
};

/// Non-critical regimes: requires ||a_hom - a_hom^T||_inf <= 1e-9
/// (SymmetryViolated otherwise). Critical: compares the skew part with the
/// discrete integral mu int <d_s Phi_k, Phi_j> ds within C (hy^2 + hs)
/// (SkewFormulaMismatch otherwise).
SkewReport skew_report(const Mat& ahom, std::span<const CellSolution> cells,
                       double tol_constant = 1.0);

/// 1D harmonic-mean oracle independent of the cell solver:
/// classical/subcritical: int_J <a(.,s)^{-1}>_y^{-1} ds;
/// supercritical: <(int_J a ds)^{-1}>_y^{-1}. Midpoint quadrature with n
/// points per direction (n^2 = 10^6 by default).
double harmonic_mean_oracle_1d(const PeriodicMatrixField& field, Regime regime,
                               int n = 1000);

}  // namespace oscidiff
