#include <cmath>
#include <numbers>

#include "doctest.h"

#include "oscidiff/error.hpp"
#include "oscidiff/pdesolve.hpp"

using namespace oscidiff;

namespace {

constexpr double kPi = std::numbers::pi;

MicroProblem heat_problem(int nx, int nt, double T = 0.1) {
  static const auto identity = builtin::identity(1);
  MicroProblem mp;
  mp.field = &identity;
  mp.eps = 0.5;
  mp.r = 1.0;
  mp.p = 1.0;
  mp.data = make_data(1, "sine", "zero");
  mp.grid = MacroGrid{1, nx, nt, T};
  return mp;
}

/// Sup over steps of the max nodal error against exp(-pi^2 t) sin(pi x).
double heat_error(const SpaceTimeField& traj) {
  double e = 0.0;
  for (int n = 0; n <= traj.steps(); ++n) {
    const auto u = traj.u(n);
    for (int i = 0; i < traj.grid.nx; ++i) {
      const double x = (i + 1) * traj.grid.h();
      e = std::max(e, std::abs(u[i] - std::exp(-kPi * kPi * traj.time(n)) * std::sin(kPi * x)));
    }
  }
  return e;
}

}  // namespace

TEST_SUITE("pdesolve") {

TEST_CASE("u and v transforms are inverse and odd") {
  for (double p : {0.3, 0.5, 1.0, 1.5, 2.0})
    for (double u : {-2.0, -0.3, 0.0, 1e-6, 0.7, 3.0}) {
      CHECK(u_of_v(v_of_u(u, p), p) == doctest::Approx(u).epsilon(1e-13));
      CHECK(v_of_u(-u, p) == -v_of_u(u, p));
    }
  CHECK(v_of_u(4.0, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("dyadic eps detection") {
  CHECK(is_dyadic(1.0));
  CHECK(is_dyadic(0.125));
  CHECK(is_dyadic(1.0 / 1024));
  CHECK_FALSE(is_dyadic(1.0 / 3));
  CHECK_FALSE(is_dyadic(0.3));
  auto mp = heat_problem(15, 8);
  mp.eps = 1.0 / 3;
  CHECK_THROWS_AS(solve_micro(mp), Error);
}

TEST_CASE("zero data gives the zero trajectory") {
  const auto f = builtin::trig1d_mixed();
  MicroProblem mp;
  mp.field = &f;
  mp.eps = 0.25;
  mp.p = 0.5;
  mp.data = make_data(1, "zero", "zero");
  mp.grid = MacroGrid{1, 31, 16, 0.25};
  const auto traj = solve_micro(mp);
  for (const auto& v : traj.v) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  const auto ef = energy_functionals(traj);
  for (double e : ef.energy) CHECK(e == 0.0);
  for (double d : ef.dissipation) CHECK(d == 0.0);

  const auto tensor = assemble_ahom(std::vector{solve_subcritical_cell(f, CellGrid{1, 16, 8}, 0)}, f);
  HomogenizedProblem hp;
  hp.tensor = &tensor;
  hp.p = 0.5;
  hp.data = mp.data;
  hp.grid = mp.grid;
  for (const auto& v : solve_homogenized(hp).v) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("heat equation eigenfunction: first order in time, second in space") {
  // time step small enough that the spatial error dominates: the combined
  // halving must then reduce the error by more than 3
  const double e1 = heat_error(solve_micro(heat_problem(15, 1024)));
  const double e2 = heat_error(solve_micro(heat_problem(31, 2048)));
  CAPTURE(e1);
  CAPTURE(e2);
  CHECK(e1 / e2 >= 3.0);
  // at fixed fine space, halving dt halves the error
  const double t1 = heat_error(solve_micro(heat_problem(255, 32)));
  const double t2 = heat_error(solve_micro(heat_problem(255, 64)));
  CHECK(t1 / t2 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("homogenized solve with the identity tensor is the micro heat solve") {
  EffectiveTensor id;
  id.dim = 1;
  id.matrices = {Mat::Identity(1, 1)};
  const auto mp = heat_problem(31, 64);
  HomogenizedProblem hp;
  hp.tensor = &id;
  hp.p = 1.0;
  hp.data = mp.data;
  hp.grid = mp.grid;
  const auto a = solve_micro(mp);
  const auto b = solve_homogenized(hp);
  for (int n = 0; n <= a.steps(); ++n) CHECK((a.v[n] - b.v[n]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("micro and homogenized trajectories coincide for a constant coefficient") {
  Mat A(2, 2);
  A << 1.2, 0.3, 0.3, 0.7;
  const auto f = builtin::constant(A);
  EffectiveTensor t;
  t.dim = 2;
  t.matrices = {A};
  MicroProblem mp;
  mp.field = &f;
  mp.eps = 0.125;
  mp.r = 2.0;
  mp.p = 1.5;
  mp.data = make_data(2, "sine", "one");
  mp.grid = MacroGrid{2, 15, 8, 0.1};
  HomogenizedProblem hp;
  hp.tensor = &t;
  hp.p = mp.p;
  hp.data = mp.data;
  hp.grid = mp.grid;
  const auto a = solve_micro(mp);
  const auto b = solve_homogenized(hp);
  for (int n = 0; n <= a.steps(); ++n) CHECK((a.v[n] - b.v[n]).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("table coupling with a flat table equals constant coupling") {
  const auto f = builtin::trig1d_mixed();
  EffectiveTensor c;
  c.dim = 1;
  c.matrices = {Mat::Constant(1, 1, 0.45)};
  EffectiveTensor t;
  t.dim = 1;
  t.regime = Regime::CriticalPME;
  t.keys = {0.0, 0.5, 1.0, 2.0};
  t.matrices.assign(4, c.matrices[0]);
  HomogenizedProblem hp;
  hp.p = 1.5;
  hp.data = make_data(1, "sine", "one");
  hp.grid = MacroGrid{1, 31, 16, 0.25};
  hp.tensor = &c;
  const auto a = solve_homogenized(hp);
  hp.tensor = &t;
  hp.coupling = Coupling::CriticalTable;
  const auto b = solve_homogenized(hp);
  for (int n = 0; n <= a.steps(); ++n) CHECK((a.v[n] - b.v[n]).cwiseAbs().maxCoeff() < 1e-9);
  hp.tensor = &c;
  CHECK_THROWS_AS(solve_homogenized(hp), Error);
}

TEST_CASE("p = 2 self-convergence in time is first order") {
  const auto id = builtin::identity(1);
  auto run = [&](int nt) {
    MicroProblem mp;
    mp.field = &id;
    mp.eps = 0.5;
    mp.p = 2.0;
    mp.data = make_data(1, "sine", "zero");
    mp.grid = MacroGrid{1, 63, nt, 0.1};
    return solve_micro(mp).u(nt);
  };
  const auto u1 = run(32), u2 = run(64), u4 = run(128);
  const double order = std::log2((u1 - u2).norm() / (u2 - u4).norm());
  CAPTURE(order);
  CHECK(order >= 0.9);
}

TEST_CASE("Newton converges in a few iterations on the default data") {
  const auto f = builtin::trig1d_mixed();
  for (double p : {0.5, 1.5}) {
    MicroProblem mp;
    mp.field = &f;
    mp.eps = 0.125;
    mp.p = p;
    mp.data = make_data(1, "sine", "one");
    mp.grid = MacroGrid{1, 127, 64, 0.25};
    const auto traj = solve_micro(mp);
    CHECK(traj.max_residual <= 1e-9);
    for (int n = 1; n <= traj.steps(); ++n) CHECK(traj.newton_iterations[n] <= 8);
  }
}

TEST_CASE("2D micro solve on a space-time field") {
  const auto f = builtin::trig2d();
  MicroProblem mp;
  mp.field = &f;
  mp.eps = 0.25;
  mp.r = 2.0;
  mp.p = 0.5;
  mp.data = make_data(2, "sine", "one");
  mp.grid = MacroGrid{2, 15, 16, 0.1};
  const auto traj = solve_micro(mp);
  CHECK(traj.max_residual <= 1e-9);
  CHECK(traj.u(16).maxCoeff() > 0.0);
}

TEST_CASE("H^-1 norm: zero, the sine oracle, homogeneity") {
  const MacroGrid g{1, 63, 4, 1.0};
  CHECK(hminus1_norm(Eigen::VectorXd::Zero(63), g) == 0.0);
  const double exact = 1.0 / (kPi * std::sqrt(2.0));
  std::vector<double> err;
  for (int nx : {31, 63, 127}) {
    const MacroGrid gn{1, nx, 4, 1.0};
    const auto w = sample_nodes(gn, [](const Point& x) { return std::sin(kPi * x[0]); });
    err.push_back(std::abs(hminus1_norm(w, gn) - exact));
  }
  CHECK(err[1] < 1e-3);
  CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(std::log2(err[1] / err[2]) == doctest::Approx(2.0).epsilon(0.1));
  const auto w = sample_nodes(g, [](const Point& x) { return x[0] * (1 - x[0]) - 0.1; });
  CHECK(hminus1_norm(2 * w, g) == doctest::Approx(2 * hminus1_norm(w, g)).epsilon(1e-12));
}

TEST_CASE("H^-1 norm in 2D of sin(pi x) sin(pi y)") {
  const MacroGrid g{2, 31, 4, 1.0};
  const auto w = sample_nodes(g, [](const Point& x) { return std::sin(kPi * x[0]) * std::sin(kPi * x[1]); });
  CHECK(hminus1_norm(w, g) == doctest::Approx(1.0 / (2 * kPi * std::sqrt(2.0))).epsilon(1e-2));
}

TEST_CASE("1D H^-1 prefix-sum identity equals the generic dual norm") {
  const int n = 40;
  const MacroGrid g{1, n, 4, 1.0};
  const double h = g.h();
  Eigen::VectorXd w(n), F(n + 1);
  for (int i = 0; i < n; ++i) w[i] = std::cos(0.3 * i) + 0.1 * i;
  for (int T = 0; T <= n; ++T) F[T] = std::sin(0.7 * T) - 0.2;
  Eigen::VectorXd gvec(n);
  for (int i = 0; i < n; ++i) gvec[i] = h * w[i] + F[i] - F[i + 1];
  CHECK(hminus1_norm_1d(w, F, h) == doctest::Approx(HMinus1(g).of_functional(gvec)).epsilon(1e-12));
  // a pure derivative: ||phi'||_{H^-1} is the L2 norm of phi minus its mean
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const double mean = F.mean();
  CHECK(hminus1_norm_1d(zero, F, h) ==
        doctest::Approx(std::sqrt(h * (F.array() - mean).matrix().squaredNorm())).epsilon(1e-14));
}

TEST_CASE("energy: heat decay oracle and monotone decay without source") {
  const auto traj = solve_micro(heat_problem(127, 512));
  const auto ef = energy_functionals(traj);
  for (int n = 0; n <= traj.steps(); ++n) {
    const double exact = 0.25 * std::exp(-2 * kPi * kPi * traj.time(n));
    CHECK(std::abs(ef.energy[n] - exact) < 2e-3 * 0.25);
  }
  const auto f = builtin::trig1d_mixed();
  for (double p : {0.5, 1.5}) {
    MicroProblem mp;
    mp.field = &f;
    mp.eps = 0.125;
    mp.p = p;
    mp.data = make_data(1, "sine", "zero");
    mp.grid = MacroGrid{1, 127, 64, 0.25};
    const auto e = energy_functionals(solve_micro(mp)).energy;
    for (std::size_t n = 1; n < e.size(); ++n) CHECK(e[n] <= e[n - 1]);
  }
}

TEST_CASE("energy identity: E(t) + dissipation = E(0) + work up to the scheme's defect") {
  const auto f = builtin::trig1d_mixed();
  MicroProblem mp;
  mp.field = &f;
  mp.eps = 0.125;
  mp.p = 1.0;
  mp.data = make_data(1, "sine", "one");
  mp.grid = MacroGrid{1, 127, 256, 0.25};
  const auto ef = energy_functionals(solve_micro(mp));
  // backward Euler dissipates the extra (1/2)||u^{n+1}-u^n||^2, so the
  // balance holds as an inequality
  for (std::size_t n = 0; n < ef.energy.size(); ++n)
    CHECK(ef.energy[n] + ef.dissipation[n] <= ef.energy[0] + ef.work[n] + 1e-12);
}

TEST_CASE("H^-1 contraction between two initial data") {
  const auto f = builtin::trig1d_mixed();
  const MacroGrid g{1, 127, 64, 0.25};
  for (double p : {0.5, 1.5}) {
    MicroProblem a;
    a.field = &f;
    a.eps = 0.125;
    a.p = p;
    a.data = make_data(1, "sine", "one");
    a.grid = g;
    MicroProblem b = a;
    b.data = make_data(1, "half-sine", "one");
    const auto ta = solve_micro(a), tb = solve_micro(b);
    const HMinus1 hm(g);
    const double d0 = hm.of_function(ta.u(0) - tb.u(0));
    const double ct = contraction_constant(f, a.eps, a.r, g.T);
    CHECK(ct >= 1.0);
    for (int n = 0; n <= ta.steps(); ++n) {
      const double d = hm.of_function(ta.u(n) - tb.u(n));
      CHECK(d * d <= 1.05 * ct * d0 * d0);
    }
  }
}

TEST_CASE("contraction constant formula") {
  // s-independent: (Lambda/lambda)^3
  CHECK(contraction_constant(builtin::trig1d(), 0.125, 1.0, 0.25) == doctest::Approx(27.0));
  const double expect = 27.0 * std::exp(0.25 * sup_ds_norm(builtin::trig1d_st()) / (0.25 * 0.125));
  CHECK(contraction_constant(builtin::trig1d_st(), 0.125, 1.0, 0.25) == doctest::Approx(expect));
}

}  // TEST_SUITE
