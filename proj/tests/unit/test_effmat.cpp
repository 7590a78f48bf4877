#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"

#include "oscidiff/effmat.hpp"
#include "oscidiff/error.hpp"

using namespace oscidiff;

namespace {

constexpr double kPi = std::numbers::pi;

// int_0^1 (1/4) sqrt(4 - cos^2 2 pi s) ds, by a 10^6-point midpoint rule.
constexpr double kSubcriticalTrig1dSt = 0.467107728833847058;

std::vector<CellSolution> cells_for(Regime regime, const PeriodicMatrixField& f, const CellGrid& g,
                                    CellParameter param = {0.5, 0.0}) {
  std::vector<CellSolution> cells;
  for (int k = 0; k < f.dim(); ++k) cells.push_back(solve_cell(regime, f, g, param, k));
  return cells;
}

double ahom_1d(Regime regime, const PeriodicMatrixField& f, int My, int Ms = 64) {
  return assemble_ahom(cells_for(regime, f, CellGrid{1, My, Ms}), f).constant()(0, 0);
}

double maxdiff(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("effmat") {

TEST_CASE("quadrature oracle for the subcritical trig1d_st matrix") {
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = std::cos(2 * kPi * (i + 0.5) / n);
    sum += 0.25 * std::sqrt(4.0 - c * c);
  }
  CHECK(sum / n == doctest::Approx(kSubcriticalTrig1dSt).epsilon(1e-14));
}

TEST_CASE("constant coefficient: a_hom is the constant in every regime") {
  Mat A(2, 2);
  A << 1.5, 0.25, 0.25, 0.8;
  const auto f = builtin::constant(A);
  const CellGrid g{2, 8, 4};
  for (Regime r : {Regime::Classical, Regime::Subcritical, Regime::Supercritical}) {
    CAPTURE(to_string(r));
    CHECK(maxdiff(assemble_ahom(cells_for(r, f, g), f).constant(), A) < 1e-14);
  }
  const auto fde = tabulate_ahom_critical(f, g, 0.5, {0.0, 0.1, 1.0, 5.0});
  const auto pme = tabulate_ahom_critical(f, g, 1.5, {0.0, 0.1, 1.0, 5.0});
  for (const auto& m : fde.matrices) CHECK(maxdiff(m, A) < 1e-14);
  for (const auto& m : pme.matrices) CHECK(maxdiff(m, A) < 1e-14);
}

TEST_CASE("1D trig1d matches sqrt(3)/4 in every non-critical regime") {
  const auto f = builtin::trig1d();
  for (Regime r : {Regime::Classical, Regime::Subcritical, Regime::Supercritical})
    CHECK(std::abs(ahom_1d(r, f, 64) - std::sqrt(3.0) / 4.0) < 1e-4);
}

TEST_CASE("1D subcritical and supercritical trig1d_st") {
  const auto f = builtin::trig1d_st();
  CHECK(std::abs(ahom_1d(Regime::Subcritical, f, 64) - kSubcriticalTrig1dSt) < 1e-4);
  CHECK(std::abs(ahom_1d(Regime::Supercritical, f, 64) - 0.5) < 1e-8);
}

TEST_CASE("assembled a_hom converges to the harmonic-mean oracle at order >= 1.9") {
  for (const auto& [field, regime] :
       {std::pair{builtin::trig1d_mixed(), Regime::Subcritical},
        std::pair{builtin::trig1d_mixed(), Regime::Supercritical}}) {
    const double oracle = harmonic_mean_oracle_1d(field, regime);
    std::vector<double> err;
    for (int My : {4, 8, 16}) err.push_back(std::abs(ahom_1d(regime, field, My, 64) - oracle));
    CAPTURE(err[0]);
    CAPTURE(err[1]);
    CAPTURE(err[2]);
    CHECK(std::log2(err[0] / err[1]) >= 1.9);
    CHECK(std::log2(err[1] / err[2]) >= 1.9);
  }
}

TEST_CASE("harmonic-mean oracle closed forms") {
  CHECK(harmonic_mean_oracle_1d(builtin::constant(Mat::Constant(1, 1, 0.7)), Regime::Subcritical) ==
        doctest::Approx(0.7).epsilon(1e-14));
  CHECK(harmonic_mean_oracle_1d(builtin::trig1d(), Regime::Classical) ==
        doctest::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-12));
  CHECK(harmonic_mean_oracle_1d(builtin::trig1d_st(), Regime::Supercritical) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(harmonic_mean_oracle_1d(builtin::trig1d_st(), Regime::Subcritical) ==
        doctest::Approx(kSubcriticalTrig1dSt).epsilon(1e-10));
  CHECK_THROWS_AS(harmonic_mean_oracle_1d(builtin::trig2d(), Regime::Subcritical), Error);
}

TEST_CASE("critical table degenerations at u0abs = 0") {
  const CellGrid g{1, 32, 32};
  const auto f = builtin::trig1d_mixed();
  const auto pme = tabulate_ahom_critical(f, g, 1.5, default_u0abs_grid());
  CHECK(maxdiff(pme.matrices.front(), mean_ys(f, g)) < 1e-10);
  const auto fde = tabulate_ahom_critical(f, g, 0.5, default_u0abs_grid());
  const auto sub = assemble_ahom(cells_for(Regime::Subcritical, f, g), f).constant();
  CHECK(maxdiff(fde.matrices.front(), sub) < 1e-8);
  // approach along the table: the smallest positive key is already close
  CHECK(maxdiff(fde.matrices[1], sub) <= 1e-3);
}

TEST_CASE("s-independent field: every table entry is the classical matrix") {
  const CellGrid g{2, 12, 8};
  const auto f = builtin::trig2d_static();
  const auto cls = assemble_ahom(cells_for(Regime::Classical, f, g), f).constant();
  for (double p : {0.5, 1.5}) {
    const auto t = tabulate_ahom_critical(f, g, p, {0.0, 0.05, 1.0, 4.0});
    for (std::size_t i = 0; i < t.matrices.size(); ++i) {
      // the porous-medium entry at 0 is the plain average instead
      if (p > 1.0 && i == 0) continue;
      CHECK(maxdiff(t.matrices[i], cls) < 1e-9);
    }
  }
  for (Regime r : {Regime::Subcritical, Regime::Supercritical})
    CHECK(maxdiff(assemble_ahom(cells_for(r, f, g), f).constant(), cls) < 1e-9);
}

TEST_CASE("table interpolation is stable under refinement of the key grid") {
  const CellGrid g{1, 32, 32};
  const auto f = builtin::trig1d_mixed();
  const auto coarse_keys = default_u0abs_grid();
  std::vector<double> fine_keys{0.0};
  for (std::size_t i = 1; i + 1 < coarse_keys.size(); ++i) {
    fine_keys.push_back(coarse_keys[i]);
    fine_keys.push_back(std::expm1(0.5 * (std::log1p(coarse_keys[i]) + std::log1p(coarse_keys[i + 1]))));
  }
  fine_keys.push_back(coarse_keys.back());
  for (double p : {0.5, 1.5}) {
    const auto coarse = tabulate_ahom_critical(f, g, p, coarse_keys);
    const auto fine = tabulate_ahom_critical(f, g, p, fine_keys);
    for (std::size_t i = 1; i < fine_keys.size(); ++i)
      CHECK(maxdiff(coarse.at(fine_keys[i]), fine.matrices[i]) < 1e-3);
  }
}

TEST_CASE("default u0abs grid") {
  const auto k = default_u0abs_grid();
  REQUIRE(k.size() == 17);
  CHECK(k[0] == 0.0);
  CHECK(k[1] == doctest::Approx(1e-3));
  CHECK(k[16] == doctest::Approx(10.0));
  for (std::size_t i = 2; i < k.size(); ++i)
    CHECK(k[i] / k[i - 1] == doctest::Approx(std::pow(1e4, 1.0 / 15)));
}

TEST_CASE("apply: zero gradient, constant columns, interpolated table") {
  Mat A(2, 2);
  A << 2.0, 0.5, 0.5, 1.0;
  EffectiveTensor c;
  c.dim = 2;
  c.matrices = {A};
  CHECK(apply(c, 0.3, Vec::Zero(2)).norm() == 0.0);
  const Vec e1 = Vec::Unit(2, 0);
  CHECK((apply(c, 0.3, e1) - A.col(0)).norm() == 0.0);

  EffectiveTensor t;
  t.dim = 2;
  t.regime = Regime::CriticalFDE;
  t.keys = {0.0, 1.0};
  const Mat A0 = Mat::Identity(2, 2);
  t.matrices = {A0, A};
  const double u = 0.4;
  const double theta = std::log1p(u) / std::log1p(1.0);
  const Vec g = (Vec(2) << 0.3, -1.2).finished();
  const Vec expect = ((1 - theta) * A0 + theta * A) * g;
  CHECK((apply(t, -u, g) - expect).norm() < 1e-14);
  std::size_t clamped = 0;
  CHECK((apply(t, 3.0, g, &clamped) - A * g).norm() < 1e-14);
  CHECK(clamped == 1);
}

TEST_CASE("ellipticity sandwich: tight for lambda I, strict lower side for oscillating fields") {
  const auto probes1 = probe_vectors(1, 64);
  const auto probes2 = probe_vectors(2, 64);
  const auto lamI = builtin::constant(0.3 * Mat::Identity(2, 2));
  const auto t = assemble_ahom(cells_for(Regime::Subcritical, lamI, CellGrid{2, 8, 4}), lamI);
  const auto rep = ellipticity_report(t, 0.3, 0.3, probes2);
  CHECK(std::abs(rep.min_slack) < 1e-12);

  const auto f = builtin::trig1d_st();
  const auto ts = assemble_ahom(cells_for(Regime::Subcritical, f, CellGrid{1, 64, 32}), f);
  CHECK(ts.gram.front()(0, 0) > 0.0);
  const double lower = ts.constant()(0, 0) - f.lambda() * (1.0 + ts.gram.front()(0, 0));
  CHECK(lower > 1e-3);
  CHECK(ellipticity_report(ts, f.lambda(), f.Lambda(), probes1).min_slack >= -1e-8);

  try {
    ellipticity_report(ts, 0.49, 0.75, probes1);
    FAIL("expected BoundViolated");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BoundViolated);
  }
}

TEST_CASE("ellipticity sandwich at the porous-medium zero entry reduces to the plain bounds") {
  const auto f = builtin::trig2d();
  const auto t = tabulate_ahom_critical(f, CellGrid{2, 12, 8}, 1.5, {0.0, 0.1, 1.0, 2.0});
  CHECK(t.gram.front().cwiseAbs().maxCoeff() == 0.0);
  CHECK(ellipticity_report(t, f.lambda(), f.Lambda(), probe_vectors(2, 64)).min_slack >= -1e-8);
}

TEST_CASE("probe vectors are unit and deterministic") {
  const auto a = probe_vectors(2, 64, 7);
  const auto b = probe_vectors(2, 64, 7);
  REQUIRE(a.size() == 64);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].norm() == doctest::Approx(1.0));
    CHECK(a[i] == b[i]);
  }
}

TEST_CASE("symmetry for non-critical regimes on genuinely 2D fields") {
  const CellGrid g{2, 16, 8};
  for (const auto& f : {builtin::laminate2d(), builtin::trig2d(), builtin::checkerboard2d()})
    for (Regime r : {Regime::Subcritical, Regime::Supercritical}) {
      if (f.s_independent() && r == Regime::Supercritical) continue;
      const auto cells = cells_for(r, f, g);
      const auto t = assemble_ahom(cells, f);
      const auto rep = skew_report(t.constant(), cells);
      CHECK(rep.asymmetry <= 1e-9);
    }
}

TEST_CASE("critical skew part matches the corrector integral and is nonzero for trig2d") {
  const CellGrid g{2, 16, 16};
  const auto f = builtin::trig2d();
  std::vector<std::vector<CellSolution>> cells;
  const auto t = tabulate_ahom_critical(f, g, 1.5, {0.0, 0.1, 1.0, 2.0}, {}, &cells);
  // symmetric branch at u0abs = 0
  CHECK(skew_report(t.matrices[0], cells[0]).asymmetry < 1e-12);
  for (std::size_t i = 1; i < t.matrices.size(); ++i) {
    const auto rep = skew_report(t.matrices[i], cells[i]);
    CHECK(rep.asymmetry > 1e-4);
    CHECK(rep.max_mismatch <= rep.tolerance);
    CHECK(rep.max_mismatch < 1e-10);
  }
}

TEST_CASE("critical skew part vanishes for s-independent fields") {
  const auto f = builtin::trig2d_static();
  std::vector<std::vector<CellSolution>> cells;
  const auto t = tabulate_ahom_critical(f, CellGrid{2, 12, 8}, 0.5, {0.0, 0.1, 1.0, 2.0}, {}, &cells);
  for (std::size_t i = 0; i < t.matrices.size(); ++i)
    CHECK(skew_report(t.matrices[i], cells[i]).asymmetry < 1e-9);
}

TEST_CASE("symmetry violation is reported for non-critical cells") {
  const auto f = builtin::trig2d();
  const auto cells = cells_for(Regime::Subcritical, f, CellGrid{2, 8, 4});
  Mat bad = assemble_ahom(cells, f).constant();
  bad(0, 1) += 1e-6;
  try {
    skew_report(bad, cells);
    FAIL("expected SymmetryViolated");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SymmetryViolated);
  }
}

TEST_CASE("assemble_ahom rejects mixed regimes") {
  const auto f = builtin::trig2d();
  const CellGrid g{2, 8, 4};
  std::vector<CellSolution> mixed{solve_subcritical_cell(f, g, 0), solve_supercritical_cell(f, g, 1)};
  try {
    assemble_ahom(mixed, f);
    FAIL("expected RegimeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RegimeMismatch);
  }
}

}  // TEST_SUITE
