#include "oscidiff/pdesolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "oscidiff/assembly.hpp"
#include "oscidiff/error.hpp"

namespace oscidiff {

namespace {

constexpr double kPi = std::numbers::pi;

double sine_product(const Point& x, int dim) {
  double v = std::sin(kPi * x[0]);
  if (dim == 2) v *= std::sin(kPi * x[1]);
  return v;
}

}  // namespace

ProblemData make_data(int dim, const std::string& u0_name, const std::string& f_name) {
  ProblemData d;
  d.u0_name = u0_name;
  d.f_name = f_name;
  if (u0_name == "sine")
    d.u0 = [dim](const Point& x) { return sine_product(x, dim); };
  else if (u0_name == "zero")
    d.u0 = [](const Point&) { return 0.0; };
  else if (u0_name == "half-sine")
    d.u0 = [dim](const Point& x) { return 0.5 * sine_product(x, dim); };
  else
    throw Error(Errc::InvalidConfig, "unknown initial datum '" + u0_name + "'");
  if (f_name == "one")
    d.f = [](const Point&, double) { return 1.0; };
  else if (f_name == "zero")
    d.f = [](const Point&, double) { return 0.0; };
  else if (f_name == "sine")
    d.f = [dim](const Point& x, double) { return sine_product(x, dim); };
  else
    throw Error(Errc::InvalidConfig, "unknown source '" + f_name + "'");
  return d;
}

double u_of_v(double v, double p) {
  if (p == 1.0) return v;
  if (p == 0.5) return v * std::abs(v);
  if (p == 1.5) return std::copysign(std::cbrt(v * v), v);
  return std::copysign(std::pow(std::abs(v), 1.0 / p), v);
}

double v_of_u(double u, double p) {
  if (p == 1.0) return u;
  return std::copysign(std::pow(std::abs(u), p), u);
}

namespace {

// d u / d v with |v| floored at delta.
double du_dv(double v, double p, double delta) {
  if (p == 1.0) return 1.0;
  const double a = std::max(std::abs(v), delta);
  if (p == 0.5) return 2.0 * a;
  if (p == 1.5) return (2.0 / 3.0) / std::cbrt(a);
  return std::pow(a, 1.0 / p - 1.0) / p;
}

Eigen::VectorXd u_vector(const Eigen::VectorXd& v, double p) {
  Eigen::VectorXd u(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = u_of_v(v[i], p);
  return u;
}

// Stiffness matrix of the macroscopic Dirichlet problem: tridiagonal arrays
// in 1D, sparse LU in 2D.
class MacroSystem {
 public:
  explicit MacroSystem(const StructuredMesh& mesh) : mesh_(mesh) {}

  void assemble(const std::vector<Mat>& coef) {
    if (mesh_.dim() == 1) {
      const int n = mesh_.dofs();
      const double ih = 1.0 / mesh_.h();
      diag_.assign(n, 0.0);
      lower_.assign(n, 0.0);
      upper_.assign(n, 0.0);
      for (int d = 0; d < n; ++d) {
        const double cl = coef[d](0, 0);
        const double cr = coef[d + 1](0, 0);
        diag_[d] = (cl + cr) * ih;
        if (d > 0) lower_[d] = -cl * ih;
        if (d + 1 < n) upper_[d] = -cr * ih;
      }
    } else {
      K_ = stiffness(mesh_, coef);
    }
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const {
    if (mesh_.dim() == 2) return K_ * v;
    const int n = static_cast<int>(v.size());
    Eigen::VectorXd out(n);
    for (int d = 0; d < n; ++d) {
      double s = diag_[d] * v[d];
      if (d > 0) s += lower_[d] * v[d - 1];
      if (d + 1 < n) s += upper_[d] * v[d + 1];
      out[d] = s;
    }
    return out;
  }

  // Solves (K + diag(shift)) x = rhs.
  Eigen::VectorXd solve_shifted(const Eigen::VectorXd& shift, const Eigen::VectorXd& rhs) {
    const int n = static_cast<int>(rhs.size());
    if (mesh_.dim() == 1) {
      std::vector<double> c(n), d(n);
      double denom = diag_[0] + shift[0];
      c[0] = upper_[0] / denom;
      d[0] = rhs[0] / denom;
      for (int i = 1; i < n; ++i) {
        denom = diag_[i] + shift[i] - lower_[i] * c[i - 1];
        c[i] = upper_[i] / denom;
        d[i] = (rhs[i] - lower_[i] * d[i - 1]) / denom;
      }
      Eigen::VectorXd x(n);
      x[n - 1] = d[n - 1];
      for (int i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
      return x;
    }
    SparseMatrix J = K_;
    for (int i = 0; i < n; ++i) J.coeffRef(i, i) += shift[i];
    Eigen::SparseMatrix<double> Jc = J;
    if (!analyzed_) {
      lu_.analyzePattern(Jc);
      analyzed_ = true;
    }
    lu_.factorize(Jc);
    if (lu_.info() != Eigen::Success)
      throw Error(Errc::SolverDiverged, "sparse LU factorization of the Newton matrix failed");
    return lu_.solve(rhs);
  }

 private:
  const StructuredMesh& mesh_;
  std::vector<double> diag_, lower_, upper_;
  SparseMatrix K_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
};

double dirichlet_grad_sq(const StructuredMesh& mesh, const Eigen::VectorXd& v) {
  double sum = 0.0;
  for (const auto& e : mesh.elements()) sum += e.area * mesh.element_gradient(e, v).squaredNorm();
  return sum;
}

// Coefficient provider for one implicit step. `update` is called with the
// current iterate and returns true when the coefficient depends on it.
struct CoefficientModel {
  std::function<void(double t)> begin_step;
  std::function<std::vector<Mat>(const Eigen::VectorXd& u)> coefficients;
  bool depends_on_state = false;
};

SpaceTimeField integrate(const MacroGrid& grid, double p, const ProblemData& data,
                         const Eigen::VectorXd& u_initial, const NewtonOptions& newton,
                         CoefficientModel& model, std::size_t* clamp_count) {
  grid.validate();
  const auto mesh = StructuredMesh::dirichlet(grid.dim, grid.nx);
  const double w = mesh.node_weight();
  const double dt = grid.dt();
  const int n = mesh.dofs();

  SpaceTimeField traj;
  traj.grid = grid;
  traj.p = p;
  traj.v.reserve(grid.nt + 1);
  traj.dissipation.assign(grid.nt + 1, 0.0);
  traj.grad_sq.assign(grid.nt + 1, 0.0);
  traj.work.assign(grid.nt + 1, 0.0);
  traj.newton_iterations.assign(grid.nt + 1, 0);

  Eigen::VectorXd u_n = u_initial.size() == n ? u_initial : sample_nodes(grid, data.u0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = v_of_u(u_n[i], p);
  traj.v.push_back(v);
  traj.grad_sq[0] = dirichlet_grad_sq(mesh, v);

  MacroSystem sys(mesh);
  Eigen::VectorXd f_nodes;
  if (data.f_time_independent) f_nodes = sample_nodes(grid, data.f, 0.0);

  for (int step = 1; step <= grid.nt; ++step) {
    const double t = step * dt;
    if (!data.f_time_independent) f_nodes = sample_nodes(grid, data.f, t);
    const Eigen::VectorXd rhs0 = w * (u_n / dt + f_nodes);
    const double ref = std::max(rhs0.norm(), 1e-300);
    model.begin_step(t);

    Eigen::VectorXd u = u_vector(v, p);
    sys.assemble(model.coefficients(u));
    auto residual = [&](const Eigen::VectorXd& vv, const Eigen::VectorXd& uu) {
      return Eigen::VectorXd((w / dt) * uu + sys.multiply(vv) - rhs0);
    };
    Eigen::VectorXd F = residual(v, u);
    double fnorm = F.norm();
    int it = 0;
    while (fnorm > newton.tol * ref) {
      if (it >= newton.max_iterations) {
        std::ostringstream msg;
        msg << "Newton did not converge at step " << step << " (relative residual "
            << fnorm / ref << ")";
        throw Error(Errc::NewtonStalled, msg.str());
      }
      ++it;
      Eigen::VectorXd shift(n);
      for (int i = 0; i < n; ++i) shift[i] = (w / dt) * du_dv(v[i], p, newton.delta_reg);
      const Eigen::VectorXd delta = sys.solve_shifted(shift, -F);
      double lambda = 1.0;
      bool accepted = false;
      for (int h = 0; h <= newton.max_halvings; ++h) {
        Eigen::VectorXd v_try = v + lambda * delta;
        Eigen::VectorXd u_try = u_vector(v_try, p);
        if (model.depends_on_state) sys.assemble(model.coefficients(u_try));
        Eigen::VectorXd F_try = residual(v_try, u_try);
        const double norm_try = F_try.norm();
        if (norm_try < fnorm || norm_try <= newton.tol * ref) {
          v = std::move(v_try);
          u = std::move(u_try);
          F = std::move(F_try);
          fnorm = norm_try;
          accepted = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!accepted) {
        std::ostringstream msg;
        msg << "line search failed " << newton.max_halvings << " times at step " << step
            << " (relative residual " << fnorm / ref << ")";
        throw Error(Errc::StepRejected, msg.str());
      }
      if (model.depends_on_state) {
        // Refresh the lagged coefficient at the accepted iterate.
        sys.assemble(model.coefficients(u));
        F = residual(v, u);
        fnorm = F.norm();
      }
    }
    traj.max_residual = std::max(traj.max_residual, fnorm / ref);
    traj.newton_iterations[step] = it;
    traj.dissipation[step] = v.dot(sys.multiply(v));
    traj.grad_sq[step] = dirichlet_grad_sq(mesh, v);
    traj.work[step] = w * f_nodes.dot(v);
    traj.v.push_back(v);
    u_n = u;
  }
  if (clamp_count) traj.clamp_count = *clamp_count;
  return traj;
}

}  // namespace

Eigen::VectorXd SpaceTimeField::u(int n) const { return u_vector(v.at(n), p); }

StructuredMesh SpaceTimeField::mesh() const { return StructuredMesh::dirichlet(grid.dim, grid.nx); }

bool is_dyadic(double eps) {
  if (!(eps > 0.0) || eps > 1.0) return false;
  const int m = static_cast<int>(std::lround(std::log2(1.0 / eps)));
  return std::abs(std::ldexp(1.0, -m) - eps) <= 1e-12 * eps;
}

void MicroProblem::validate() const {
  if (!field) throw Error(Errc::InvalidArgument, "micro problem needs a coefficient field");
  grid.validate();
  if (field->dim() != grid.dim) throw Error(Errc::DimensionMismatch, "field and macro grid dimensions differ");
  if (!is_dyadic(eps)) throw Error(Errc::InvalidArgument, "eps must be of the form 1/2^m");
  if (!(r > 0.0)) throw Error(Errc::InvalidArgument, "r must be positive");
  if (!(p > 0.0 && p <= 2.0)) throw Error(Errc::InvalidArgument, "p must lie in (0, 2]");
  if (!data.u0 || !data.f) throw Error(Errc::InvalidArgument, "micro problem needs u0 and f");
}

void HomogenizedProblem::validate() const {
  if (!tensor) throw Error(Errc::InvalidArgument, "homogenized problem needs a tensor");
  grid.validate();
  if (tensor->dim != grid.dim) throw Error(Errc::DimensionMismatch, "tensor and macro grid dimensions differ");
  if (!(p > 0.0 && p <= 2.0)) throw Error(Errc::InvalidArgument, "p must lie in (0, 2]");
  if (coupling == Coupling::CriticalTable && !(is_critical(tensor->regime) && tensor->is_table()))
    throw Error(Errc::RegimeMismatch, "table coupling needs a tabulated critical tensor");
  if (coupling == Coupling::Constant && tensor->is_table())
    throw Error(Errc::RegimeMismatch, "constant coupling needs a single matrix");
  if (!data.u0 || !data.f) throw Error(Errc::InvalidArgument, "homogenized problem needs u0 and f");
}

SpaceTimeField solve_micro(const MicroProblem& prob) {
  prob.validate();
  const auto mesh = StructuredMesh::dirichlet(prob.grid.dim, prob.grid.nx);
  std::vector<Mat> coef;
  bool have_static = false;
  CoefficientModel model;
  model.begin_step = [&](double t) {
    if (prob.field->s_independent() && have_static) return;
    coef = square_coefficients(mesh, [&](const Point& x) {
      return sample_oscillating(*prob.field, x, t, prob.eps, prob.r);
    });
    have_static = true;
  };
  model.coefficients = [&](const Eigen::VectorXd&) { return coef; };
  return integrate(prob.grid, prob.p, prob.data, prob.u_initial, prob.newton, model, nullptr);
}

SpaceTimeField solve_homogenized(const HomogenizedProblem& prob) {
  prob.validate();
  const auto mesh = StructuredMesh::dirichlet(prob.grid.dim, prob.grid.nx);
  std::size_t clamps = 0;
  CoefficientModel model;
  std::vector<Mat> constant_coef;
  if (prob.coupling == Coupling::Constant)
    constant_coef.assign(mesh.squares(), prob.tensor->constant());
  model.begin_step = [](double) {};
  if (prob.coupling == Coupling::Constant) {
    model.coefficients = [&](const Eigen::VectorXd&) { return constant_coef; };
  } else {
    model.depends_on_state = true;
    model.coefficients = [&](const Eigen::VectorXd& u) {
      std::vector<Mat> coef(mesh.squares());
      const int corners = mesh.dim() == 1 ? 2 : 4;
      for (int sq = 0; sq < mesh.squares(); ++sq) {
        const auto c = mesh.square_corners(sq);
        double sum = 0.0;
        for (int v = 0; v < corners; ++v) {
          const int d = mesh.dof_of_grid(c[v]);
          if (d >= 0) sum += u[d];
        }
        coef[sq] = prob.tensor->at(std::abs(sum / corners), &clamps);
      }
      return coef;
    };
  }
  return integrate(prob.grid, prob.p, prob.data, prob.u_initial, prob.newton, model, &clamps);
}

struct HMinus1::Impl {
  MacroGrid grid;
  std::vector<double> c;  // Thomas factors (1D)
  std::vector<double> denom;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  double w = 0.0;

  Eigen::VectorXd solve(const Eigen::VectorXd& g) const {
    if (grid.dim == 2) return ldlt.solve(g);
    const int n = static_cast<int>(g.size());
    const double off = -1.0 / grid.h();
    Eigen::VectorXd d(n);
    d[0] = g[0] / denom[0];
    for (int i = 1; i < n; ++i) d[i] = (g[i] - off * d[i - 1]) / denom[i];
    for (int i = n - 2; i >= 0; --i) d[i] -= c[i] * d[i + 1];
    return d;
  }
};

HMinus1::HMinus1(const MacroGrid& grid) : impl_(std::make_unique<Impl>()) {
  grid.validate();
  impl_->grid = grid;
  const auto mesh = StructuredMesh::dirichlet(grid.dim, grid.nx);
  impl_->w = mesh.node_weight();
  if (grid.dim == 1) {
    const int n = grid.nx;
    const double dg = 2.0 / grid.h();
    const double off = -1.0 / grid.h();
    impl_->c.assign(n, 0.0);
    impl_->denom.assign(n, 0.0);
    impl_->denom[0] = dg;
    impl_->c[0] = off / dg;
    for (int i = 1; i < n; ++i) {
      impl_->denom[i] = dg - off * impl_->c[i - 1];
      impl_->c[i] = off / impl_->denom[i];
    }
  } else {
    const std::vector<Mat> coef(mesh.squares(), Mat::Identity(2, 2));
    Eigen::SparseMatrix<double> K = stiffness(mesh, coef);
    impl_->ldlt.compute(K);
    if (impl_->ldlt.info() != Eigen::Success)
      throw Error(Errc::SolverDiverged, "Dirichlet Laplacian factorization failed");
  }
}

HMinus1::~HMinus1() = default;
HMinus1::HMinus1(HMinus1&&) noexcept = default;
HMinus1& HMinus1::operator=(HMinus1&&) noexcept = default;

double HMinus1::of_functional(const Eigen::VectorXd& g) const {
  if (g.size() != impl_->grid.dofs()) throw Error(Errc::DimensionMismatch, "load vector size mismatch");
  if (g.isZero(0.0)) return 0.0;
  return std::sqrt(std::max(0.0, g.dot(impl_->solve(g))));
}

double HMinus1::of_function(const Eigen::VectorXd& w) const { return of_functional(impl_->w * w); }

double hminus1_norm(const Eigen::VectorXd& w, const MacroGrid& grid) {
  return HMinus1(grid).of_function(w);
}

double hminus1_norm_1d(const Eigen::VectorXd& w, const Eigen::VectorXd& F, double h) {
  const Eigen::Index n = w.size();
  if (F.size() != n + 1) throw Error(Errc::DimensionMismatch, "need one flux value per interval");
  Eigen::VectorXd Q(n + 1);
  double tail = 0.0;
  Q[n] = F[n];
  for (Eigen::Index T = n - 1; T >= 0; --T) {
    tail += h * w[T];
    Q[T] = F[T] + tail;
  }
  Q.array() -= Q.mean();
  return std::sqrt(h * Q.squaredNorm());
}

double lq_norm(const Eigen::VectorXd& w, double q, const MacroGrid& grid) {
  const double weight = grid.dim == 1 ? grid.h() : grid.h() * grid.h();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) sum += std::pow(std::abs(w[i]), q);
  return std::pow(weight * sum, 1.0 / q);
}

EnergyFunctionals energy_functionals(const SpaceTimeField& traj) {
  EnergyFunctionals out;
  const double dt = traj.grid.dt();
  const double q = traj.p + 1.0;
  double diss = 0.0;
  double work = 0.0;
  for (int n = 0; n <= traj.steps(); ++n) {
    const double norm = lq_norm(traj.u(n), q, traj.grid);
    out.time.push_back(traj.time(n));
    out.lp1_norm.push_back(norm);
    out.energy.push_back(std::pow(norm, q) / q);
    if (n > 0) {
      diss += dt * traj.dissipation[n];
      work += dt * traj.work[n];
    }
    out.dissipation.push_back(diss);
    out.work.push_back(work);
  }
  return out;
}

double contraction_constant(const PeriodicMatrixField& field, double eps, double r, double T) {
  const double ratio = field.Lambda() / field.lambda();
  const double rate = sup_ds_norm(field) / (field.lambda() * std::pow(eps, r));
  return ratio * ratio * ratio * std::exp(T * rate);
}

Eigen::VectorXd sample_nodes(const MacroGrid& grid, const InitialFn& fn) {
  const auto mesh = StructuredMesh::dirichlet(grid.dim, grid.nx);
  Eigen::VectorXd out(mesh.dofs());
  for (int d = 0; d < mesh.dofs(); ++d) out[d] = fn(mesh.grid_point(mesh.grid_of_dof(d)));
  return out;
}

Eigen::VectorXd sample_nodes(const MacroGrid& grid, const SourceFn& fn, double t) {
  return sample_nodes(grid, [&](const Point& x) { return fn(x, t); });
}

}  // namespace oscidiff
