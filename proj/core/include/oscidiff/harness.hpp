#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oscidiff/cellsolve.hpp"
#include "oscidiff/effmat.hpp"
#include "oscidiff/pdesolve.hpp"

namespace oscidiff {

/// Regime implied by the time-scale exponent r: r < 2 subcritical, r = 2
/// critical (FDE for p < 1, PME for p > 1), r > 2 supercritical.
Regime regime_for(double r, double p);

/// Corrector gradients grad_y Phi_k(y, s) for one regime. In the critical
/// regime the cells depend on |u0| and are interpolated between table keys
/// with the same rule as the homogenized matrix.
class CorrectorBasis {
 public:
  CorrectorBasis(std::vector<CellSolution> cells);
  CorrectorBasis(std::vector<double> keys,
                 std::vector<std::vector<CellSolution>> table);

  Regime regime() const { return regime_; }
  int dim() const { return dim_; }

  /// sum_k g_k grad_y Phi_k(y, s; u0abs).
  Vec correction(const Vec& g, const Point& y, double s, double u0abs) const;

 private:
  Regime regime_ = Regime::Classical;
  int dim_ = 1;
  std::vector<double> keys_;
  std::vector<std::vector<CellInterpolant>> interp_;  // [key][k]
};

struct CorrectorErrors {
  double grad_corr = 0.0;   // int int |grad v_eps - grad v_0 - corrector|^2
  double grad_plain = 0.0;  // int int |grad v_eps - grad v_0|^2
  double flux_corr = 0.0;   // int int |j_eps - a_eps(grad v_0 + corrector)|^2
  double flux_plain = 0.0;  // int int |j_eps - j_hom|^2
  double dtime_corr = 0.0;  // int ||d_t(u_eps - u_0) - div(a_eps(...) - j_hom)||^2_{H^-1}
};

/// All space-time defects of the corrector statements in one pass over the
/// time steps (right-endpoint rule, element values at element centroids).
CorrectorErrors corrector_errors(const SpaceTimeField& u_eps,
                                 const SpaceTimeField& u_0,
                                 const CorrectorBasis& basis,
                                 const PeriodicMatrixField& field,
                                 const EffectiveTensor& tensor, double eps,
                                 double r);

double corrector_error(const SpaceTimeField& u_eps, const SpaceTimeField& u_0,
                       const CorrectorBasis& basis,
                       const PeriodicMatrixField& field,
                       const EffectiveTensor& tensor, double eps, double r);
double flux_corrector_error(const SpaceTimeField& u_eps,
                            const SpaceTimeField& u_0,
                            const CorrectorBasis& basis,
                            const PeriodicMatrixField& field,
                            const EffectiveTensor& tensor, double eps, double r);
double time_derivative_corrector_error(const SpaceTimeField& u_eps,
                                       const SpaceTimeField& u_0,
                                       const CorrectorBasis& basis,
                                       const PeriodicMatrixField& field,
                                       const EffectiveTensor& tensor,
                                       double eps, double r);

/// (sum_n dt ||u_eps - u_0||^rho_{L^{p+1}})^{1/rho}.
double solution_error(const SpaceTimeField& u_eps, const SpaceTimeField& u_0,
                      double rho);

struct StudyConfig {
  const PeriodicMatrixField* field = nullptr;
  double p = 0.5;
  double r = 1.0;
  std::optional<Regime> regime;  // defaults to regime_for(r, p)
  std::vector<double> eps;       // strictly decreasing, dyadic
  MacroGrid grid;
  CellGrid cell_grid;
  ProblemData data;
  NewtonOptions newton;
  CellSolverOptions cell_opts;
  std::vector<double> u0abs_grid;  // critical table keys; default grid if empty
  int jobs = 1;

  Regime resolved_regime() const;
};

struct EpsRow {
  double eps = 0.0;
  double sol_err = 0.0;       // rho = 2
  double sol_err_rho1 = 0.0;  // rho = 1
  CorrectorErrors corr;
};

struct RateFit {
  std::string column;
  double rate = 0.0;
  bool defined = false;
};

struct ConvergenceReport {
  Regime regime = Regime::Classical;
  double p = 1.0;
  double r = 1.0;
  std::vector<EpsRow> rows;
  std::vector<RateFit> rates;
  bool partial = false;
  std::string cause;

  std::vector<double> column(const std::string& name) const;
  /// Strictly decreasing along the eps list.
  bool decreasing(const std::string& name) const;
};

/// Everything a study computes besides the report, for audits and tests.
struct StudyArtifacts {
  EffectiveTensor tensor;
  std::vector<std::vector<CellSolution>> cells;  // [key][k]; one key if constant
  SpaceTimeField homogenized;
  std::vector<SpaceTimeField> micro;             // per eps
};

ConvergenceReport run_convergence_study(const StudyConfig& cfg,
                                        StudyArtifacts* artifacts = nullptr);

/// Least-squares slope of log(err) against log(eps); undefined when fewer
/// than two positive entries.
RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& err,
                 const std::string& column);

struct AuditItem {
  std::string name;       // e.g. "sup-Lp+1"
  std::string statement;  // the estimate being checked
  std::vector<double> values;  // per eps
  double bound = 0.0;
  bool ok = true;
};

struct UniformAudit {
  std::vector<AuditItem> items;
  bool ok = true;
};

/// Checks the data-only bounds on sup_t ||u||^{p+1}_{L^{p+1}},
/// lambda int ||grad v||^2 and (for 0 < p < 2) int ||grad u||^2 for every
/// trajectory with the given slack, plus the eps-uniformity proxy
/// (max over eps within the slack of the finest eps). Throws BoundViolated
/// naming the first failing item unless throw_on_failure is false.
UniformAudit audit_uniform_estimates(const std::vector<SpaceTimeField>& trajs,
                                     const std::vector<double>& eps,
                                     const PeriodicMatrixField& field,
                                     const ProblemData& data, double slack = 0.1,
                                     bool throw_on_failure = true);

/// The CSV columns of a study, in order.
const std::vector<std::string>& report_columns();

void write_report_csv(std::ostream& os, const ConvergenceReport& report);

}  // namespace oscidiff
