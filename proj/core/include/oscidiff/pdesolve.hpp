#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oscidiff/effmat.hpp"
#include "oscidiff/fields.hpp"
#include "oscidiff/grid.hpp"
#include "oscidiff/mesh.hpp"

namespace oscidiff {

using InitialFn = std::function<double(const Point& x)>;
using SourceFn = std::function<double(const Point& x, double t)>;

/// Initial datum and source of an experiment. The builtin names are
/// u0: "sine" (sin pi x, or the product over directions), "zero";
/// f: "one", "zero".
struct ProblemData {
  std::string u0_name = "sine";
  std::string f_name = "one";
  InitialFn u0;
  SourceFn f;
  bool f_time_independent = true;
};

ProblemData make_data(int dim, const std::string& u0_name,
                      const std::string& f_name);

/// u = sign(v) |v|^{1/p} and its inverse.
double u_of_v(double v, double p);
double v_of_u(double u, double p);

/// Trajectory of v = |u|^{p-1} u at the interior nodes of the macroscopic
/// grid; boundary values are identically zero and not stored. Per-step
/// diagnostics of the implicit scheme are kept for the energy functionals.
struct SpaceTimeField {
  MacroGrid grid;
  double p = 1.0;
  std::vector<Eigen::VectorXd> v;     // steps 0..nt
  std::vector<double> dissipation;    // sum_T |T| a_T grad v . grad v, per step
  std::vector<double> grad_sq;        // ||grad v||^2_{L2}, per step
  std::vector<double> work;           // h^N sum f v, per step
  std::vector<int> newton_iterations; // per step (entry 0 unused)
  double max_residual = 0.0;          // largest accepted relative residual
  std::size_t clamp_count = 0;        // table look-ups outside the hull

  int steps() const { return static_cast<int>(v.size()) - 1; }
  double time(int n) const { return n * grid.dt(); }
  Eigen::VectorXd u(int n) const;
  StructuredMesh mesh() const;
};

struct NewtonOptions {
  double tol = 1e-9;         // relative residual
  int max_iterations = 60;
  int max_halvings = 20;
  double delta_reg = 1e-10;  // |v| floor inside the derivative only
};

struct MicroProblem {
  const PeriodicMatrixField* field = nullptr;
  double eps = 0.125;
  double r = 1.0;
  double p = 1.0;
  ProblemData data;
  MacroGrid grid;
  NewtonOptions newton;
  /// Optional replacement for data.u0 evaluated at the grid nodes.
  Eigen::VectorXd u_initial;

  void validate() const;
};

enum class Coupling { Constant, CriticalTable };

struct HomogenizedProblem {
  const EffectiveTensor* tensor = nullptr;
  double p = 1.0;
  ProblemData data;
  MacroGrid grid;
  Coupling coupling = Coupling::Constant;
  NewtonOptions newton;
  Eigen::VectorXd u_initial;

  void validate() const;
};

/// True when eps = 1/2^m for some m >= 0 (up to round-off).
bool is_dyadic(double eps);

/// Backward Euler for d_t u = div(a(x/eps, t/eps^r) grad v) + f with the
/// coefficient frozen at t^{n+1}, Newton on v per step.
SpaceTimeField solve_micro(const MicroProblem& prob);

/// Same scheme with the homogenized matrix; in CriticalTable mode the
/// element matrix is a_hom(|u|) at the current Newton iterate.
SpaceTimeField solve_homogenized(const HomogenizedProblem& prob);

/// Discrete dual norm sqrt(g^T K0^{-1} g) of a load vector against the
/// Dirichlet Laplacian K0. Factorizes once; reusable across many norms.
class HMinus1 {
 public:
  explicit HMinus1(const MacroGrid& grid);
  ~HMinus1();
  HMinus1(HMinus1&&) noexcept;
  HMinus1& operator=(HMinus1&&) noexcept;

  /// Norm of the functional psi -> sum_i g_i psi_i.
  double of_functional(const Eigen::VectorXd& g) const;
  /// Norm of the nodal function w (load g = M_L w).
  double of_function(const Eigen::VectorXd& w) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// ||grad phi||_{L2} for -Laplace phi = w with phi = 0 on the boundary.
double hminus1_norm(const Eigen::VectorXd& w, const MacroGrid& grid);

/// 1D shortcut: the functional psi -> h sum w_i psi_i + h sum_T F_T psi'_T
/// has dual norm ||Q - mean(Q)||_{L2} with Q_T = F_T + h sum of w to the
/// right of T. Exact for the discrete norm; no linear solve.
double hminus1_norm_1d(const Eigen::VectorXd& w, const Eigen::VectorXd& F,
                       double h);

struct EnergyFunctionals {
  std::vector<double> time;
  std::vector<double> energy;       // (1/(p+1)) ||u||^{p+1}_{L^{p+1}}
  std::vector<double> dissipation;  // cumulative sum dt * dissipation
  std::vector<double> work;         // cumulative sum dt * work
  std::vector<double> lp1_norm;     // ||u||_{L^{p+1}}
};

EnergyFunctionals energy_functionals(const SpaceTimeField& traj);

/// ||w||_{L^q} with lumped mass over the interior nodes.
double lq_norm(const Eigen::VectorXd& w, double q, const MacroGrid& grid);

/// Stability constant of the H^{-1} contraction estimate,
/// (Lambda/lambda)^3 exp(T sup|d_s a| / (lambda eps^r)).
double contraction_constant(const PeriodicMatrixField& field, double eps,
                            double r, double T);

/// Values of an initial datum / source at the interior nodes.
Eigen::VectorXd sample_nodes(const MacroGrid& grid, const InitialFn& fn);
Eigen::VectorXd sample_nodes(const MacroGrid& grid, const SourceFn& fn,
                             double t);

}  // namespace oscidiff
