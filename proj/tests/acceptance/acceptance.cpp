// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "commands.hpp"
#include "config.hpp"
#include "oscidiff/error.hpp"
#include "oscidiff/harness.hpp"
#include "oscidiff/io.hpp"
#include "spacetime_oracle.hpp"

using namespace oscidiff;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Paths {
  std::string configs, fixtures, cli, work;
};

/// Collects the sub-checks of one criterion.
class Criterion {
 public:
  explicit Criterion(int id) : id_(id) {}

  void check(bool ok, const std::string& what) {
    if (!ok) {
      ok_ = false;
      failures_.push_back(what);
    }
    ++checks_;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return ok_; }

  void print(double seconds) const {
    std::ostringstream os;
    os << "criterion " << id_ << " " << (ok_ ? "PASS" : "FAIL") << " (" << checks_
       << " checks, " << std::fixed;
    os.precision(1);
    os << seconds << " s)";
    for (const auto& n : notes_) os << " | " << n;
    for (const auto& f : failures_) os << " | FAILED: " << f;
    std::cout << os.str() << std::endl;
  }

 private:
  int id_;
  bool ok_ = true;
  int checks_ = 0;
  std::vector<std::string> notes_, failures_;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double maxdiff(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

std::vector<CellSolution> cells_for(Regime regime, const PeriodicMatrixField& f, const CellGrid& g,
                                    CellParameter param = {0.5, 0.0}) {
  std::vector<CellSolution> cells;
  for (int k = 0; k < f.dim(); ++k) cells.push_back(solve_cell(regime, f, g, param, k));
  return cells;
}

/// Every assembled matrix with the field it came from, for the sandwich check.
struct BatteryEntry {
  std::string label;
  EffectiveTensor tensor;
  double lambda, Lambda;
};
std::vector<BatteryEntry> battery;

void add_to_battery(const std::string& label, const EffectiveTensor& t, const PeriodicMatrixField& f) {
  battery.push_back({label, t, f.lambda(), f.Lambda()});
}

// int_0^1 (1/4) sqrt(4 - cos^2 2 pi s) ds, midpoint rule with 10^6 points.
double subcritical_trig1d_st_oracle() {
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = std::cos(2 * kPi * (i + 0.5) / n);
    sum += 0.25 * std::sqrt(4.0 - c * c);
  }
  return sum / n;
}

void criterion1(Criterion& c) {
  const auto f = builtin::trig1d();
  const double oracle = harmonic_mean_oracle_1d(f, Regime::Classical);
  c.check(std::abs(oracle - std::sqrt(3.0) / 4.0) < 1e-12, "oracle equals sqrt(3)/4");
  for (Regime r : {Regime::Classical, Regime::Subcritical, Regime::Supercritical}) {
    const auto t = assemble_ahom(cells_for(r, f, CellGrid{1, 64, 64}), f);
    add_to_battery("trig1d " + std::string(to_string(r)), t, f);
    const double err = std::abs(t.constant()(0, 0) - std::sqrt(3.0) / 4.0);
    c.check(err < 1e-4, std::string(to_string(r)) + " error " + fmt(err));
    c.note(std::string(to_string(r)) + " err " + fmt(err));
  }
  // refinement order, measured on coarse grids before round-off is reached
  std::vector<double> err;
  for (int My : {4, 8, 16}) {
    const auto t = assemble_ahom(cells_for(Regime::Classical, f, CellGrid{1, My, 2}), f);
    err.push_back(std::abs(t.constant()(0, 0) - oracle));
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double order = std::log2(err[i - 1] / err[i]);
    c.check(order >= 1.9, "refinement order " + fmt(order));
    c.note("order " + fmt(order));
  }
}

void criterion2(Criterion& c) {
  const auto f = builtin::trig1d_st();
  const CellGrid g{1, 64, 64};
  const auto sup = assemble_ahom(cells_for(Regime::Supercritical, f, g), f);
  const auto sub = assemble_ahom(cells_for(Regime::Subcritical, f, g), f);
  add_to_battery("trig1d_st supercritical", sup, f);
  add_to_battery("trig1d_st subcritical", sub, f);
  const double e_sup = std::abs(sup.constant()(0, 0) - 0.5);
  const double e_sub = std::abs(sub.constant()(0, 0) - subcritical_trig1d_st_oracle());
  c.check(e_sup < 1e-8, "supercritical error " + fmt(e_sup));
  c.check(e_sub < 1e-4, "subcritical error " + fmt(e_sub));
  c.note("supercritical err " + fmt(e_sup));
  c.note("subcritical err " + fmt(e_sub));
}

void criterion3(Criterion& c) {
  const auto f = builtin::trig1d_st();
  const CellGrid g{1, 16, 16};
  const auto fde = solve_critical_cell_fde(f, g, {0.5, 1.0}, 0);
  const auto pme = solve_critical_cell_pme(f, g, {1.5, 1.0}, 0);
  for (const auto* sol : {&fde, &pme}) {
    const auto ref = testing::monolithic_periodic_cell(f, g, sol->mu, 0);
    const double d = testing::spacetime_l2_distance(g, sol->slices, ref);
    const std::string name = sol == &fde ? "fast-diffusion" : "porous-medium";
    c.check(d < 1e-8, name + " distance " + fmt(d));
    c.note(name + " dist " + fmt(d));
  }
}

void criterion4(Criterion& c) {
  // (a) s-independent field: every regime agrees
  {
    const auto f = builtin::trig2d_static();
    const CellGrid g{2, 16, 8};
    const CellParameter fde_param{0.5, 0.3}, pme_param{1.5, 0.3};
    std::vector<std::pair<std::string, std::vector<CellSolution>>> all{
        {"classical", cells_for(Regime::Classical, f, g)},
        {"subcritical", cells_for(Regime::Subcritical, f, g)},
        {"supercritical", cells_for(Regime::Supercritical, f, g)},
        {"critical-fde", cells_for(Regime::CriticalFDE, f, g, fde_param)},
        {"critical-pme", cells_for(Regime::CriticalPME, f, g, pme_param)}};
    const Mat ref = assemble_ahom(all[0].second, f).constant();
    double worst_phi = 0.0, worst_mat = 0.0;
    for (const auto& [name, cells] : all) {
      const auto t = assemble_ahom(cells, f);
      add_to_battery("trig2d_static " + name, t, f);
      worst_mat = std::max(worst_mat, maxdiff(t.constant(), ref));
      for (int k = 0; k < 2; ++k)
        worst_phi = std::max(worst_phi, h1_seminorm_distance(cells[k], all[0].second[k]));
    }
    c.check(worst_phi <= 1e-8, "(a) corrector distance " + fmt(worst_phi));
    c.check(worst_mat <= 1e-8, "(a) matrix distance " + fmt(worst_mat));
    c.note("(a) phi " + fmt(worst_phi) + " mat " + fmt(worst_mat));
  }
  // (b), (c) critical tables at u0abs = 0
  const auto f = builtin::trig1d_mixed();
  const CellGrid g{1, 64, 64};
  const auto pme = tabulate_ahom_critical(f, g, 1.5, default_u0abs_grid());
  const auto fde = tabulate_ahom_critical(f, g, 0.5, default_u0abs_grid());
  add_to_battery("trig1d_mixed porous-medium table", pme, f);
  add_to_battery("trig1d_mixed fast-diffusion table", fde, f);
  const double eb = maxdiff(pme.matrices.front(), mean_ys(f, g));
  c.check(eb <= 1e-10, "(b) porous-medium at 0 vs average " + fmt(eb));
  const auto sub = assemble_ahom(cells_for(Regime::Subcritical, f, g), f);
  add_to_battery("trig1d_mixed subcritical", sub, f);
  const double ec = maxdiff(fde.matrices.front(), sub.constant());
  c.check(ec <= 1e-8, "(c) fast-diffusion at 0 vs subcritical " + fmt(ec));
  c.note("(b) " + fmt(eb) + " (c) " + fmt(ec));
}

void criterion5(Criterion& c) {
  // 2D fields for the symmetry and skew checks join the battery
  const auto trig2d = builtin::trig2d();
  const CellGrid g{2, 16, 16};
  for (Regime r : {Regime::Subcritical, Regime::Supercritical}) {
    const auto cells = cells_for(r, trig2d, g);
    const auto t = assemble_ahom(cells, trig2d);
    add_to_battery("trig2d " + std::string(to_string(r)), t, trig2d);
    const auto rep = skew_report(t.constant(), cells);
    c.check(rep.asymmetry <= 1e-9, std::string(to_string(r)) + " asymmetry " + fmt(rep.asymmetry));
    c.note(std::string(to_string(r)) + " asym " + fmt(rep.asymmetry));
  }
  for (double p : {0.5, 1.5}) {
    std::vector<std::vector<CellSolution>> cells;
    const auto t = tabulate_ahom_critical(trig2d, g, p, {0.0, 0.1, 1.0, 4.0}, {}, &cells);
    add_to_battery("trig2d critical p=" + fmt(p), t, trig2d);
    double worst = 0.0, asym = 0.0;
    bool within = true;
    for (std::size_t i = 0; i < t.matrices.size(); ++i) {
      const auto rep = skew_report(t.matrices[i], cells[i]);
      worst = std::max(worst, rep.max_mismatch);
      asym = std::max(asym, rep.asymmetry);
      within = within && rep.max_mismatch <= rep.tolerance;
    }
    c.check(within, "critical p=" + fmt(p) + " skew mismatch " + fmt(worst));
    c.note("critical p=" + fmt(p) + " skew " + fmt(asym) + " mismatch " + fmt(worst));
  }
  double worst = 1e300;
  for (const auto& e : battery) {
    const auto probes = probe_vectors(e.tensor.dim, 64);
    const auto rep = ellipticity_report(e.tensor, e.lambda, e.Lambda, probes, 1e300);
    worst = std::min(worst, rep.min_slack);
    c.check(rep.min_slack >= -1e-8, e.label + " sandwich slack " + fmt(rep.min_slack));
  }
  c.note(std::to_string(battery.size()) + " matrices, min slack " + fmt(worst));
}

struct StudyRun {
  std::string name;
  cli::ExperimentConfig cfg;
  ConvergenceReport report;
  StudyArtifacts artifacts;
  PeriodicMatrixField field;
};

std::vector<StudyRun> run_studies(const Paths& paths) {
  std::vector<StudyRun> runs;
  for (const char* name : {"study_p0.5_r1", "study_p1.5_r1", "study_p0.5_r2", "study_p1.5_r2",
                           "study_p0.5_r3"}) {
    const auto path = (fs::path(paths.configs) / (std::string(name) + ".json")).string();
    auto cfg = cli::parse_config_text(load_text(path), path);
    auto field = cli::load_config_field(cfg);
    StudyRun run{name, cfg, {}, {}, field};
    run.report = run_convergence_study(cfg.study(run.field, 1), &run.artifacts);
    runs.push_back(std::move(run));
  }
  return runs;
}

void criterion6(Criterion& c, const std::vector<StudyRun>& runs) {
  for (const auto& run : runs) {
    c.check(!run.report.partial, run.name + " incomplete: " + run.report.cause);
    const auto err = run.report.column("sol_err");
    c.check(run.report.decreasing("sol_err"), run.name + " solution error not decreasing");
    const double ratio = err.front() / err.back();
    c.check(ratio >= 2.0, run.name + " coarse/fine ratio " + fmt(ratio));
    c.note(run.name + " " + fmt(err.front()) + "->" + fmt(err.back()));
  }
}

void criterion7(Criterion& c, const std::vector<StudyRun>& runs, const Paths& paths) {
  for (const auto& run : runs) {
    for (const char* col : {"grad_corr_err", "flux_corr_err", "dtime_corr_err"})
      c.check(run.report.decreasing(col), run.name + " " + col + " not decreasing");
    const auto floor = cli::plain_gradient_floor(paths.fixtures, run.cfg);
    c.check(floor.has_value(), run.name + " no reference fixture");
    if (!floor) continue;
    const auto plain = run.report.column("grad_plain_err");
    const double lo = *std::min_element(plain.begin(), plain.end());
    c.check(*floor > 0.0 && lo >= *floor, run.name + " plain error " + fmt(lo) + " below floor " + fmt(*floor));
    c.note(run.name + " plain min " + fmt(lo) + " floor " + fmt(*floor));
  }
}

void criterion8(Criterion& c, const std::vector<StudyRun>& runs) {
  const auto f = builtin::trig1d_mixed();
  // H^-1 contraction between two initial data with the proof constant
  for (double p : {0.5, 1.5})
    for (double r : {1.0, 2.0, 3.0}) {
      MicroProblem a;
      a.field = &f;
      a.eps = 0.125;
      a.r = r;
      a.p = p;
      a.data = make_data(1, "sine", "one");
      a.grid = MacroGrid{1, 255, r < 2 ? 256 : 2048, 0.25};
      MicroProblem b = a;
      b.data = make_data(1, "half-sine", "one");
      const auto ta = solve_micro(a), tb = solve_micro(b);
      const HMinus1 hm(a.grid);
      const double d0 = hm.of_function(ta.u(0) - tb.u(0));
      const double ct = contraction_constant(f, a.eps, r, a.grid.T);
      double worst = 0.0;
      for (int n = 0; n <= ta.steps(); ++n) {
        const double d = hm.of_function(ta.u(n) - tb.u(n));
        worst = std::max(worst, d * d / (ct * d0 * d0));
      }
      c.check(worst <= 1.05, "contraction p=" + fmt(p) + " r=" + fmt(r) + " ratio " + fmt(worst));
    }
  // energy without source is non-increasing at every step
  for (double p : {0.5, 1.5})
    for (double r : {1.0, 2.0}) {
      MicroProblem mp;
      mp.field = &f;
      mp.eps = 0.0625;
      mp.r = r;
      mp.p = p;
      mp.data = make_data(1, "sine", "zero");
      mp.grid = MacroGrid{1, 255, 1024, 0.25};
      const auto e = energy_functionals(solve_micro(mp)).energy;
      bool mono = true;
      for (std::size_t n = 1; n < e.size(); ++n) mono = mono && e[n] <= e[n - 1] + 1e-12 * e[0];
      c.check(mono, "energy increases for p=" + fmt(p) + " r=" + fmt(r));
    }
  // uniform estimates across the eps list of every study
  for (const auto& run : runs) {
    const auto audit = audit_uniform_estimates(run.artifacts.micro, run.cfg.eps, run.field,
                                               make_data(1, run.cfg.u0, run.cfg.f), 0.1, false);
    for (const auto& item : audit.items)
      c.check(item.ok, run.name + " " + item.name + " bound " + fmt(item.bound));
  }
}

void criterion9(Criterion& c) {
  const auto id = builtin::identity(1);
  auto error = [&](int nx, int nt) {
    MicroProblem mp;
    mp.field = &id;
    mp.eps = 0.5;
    mp.p = 1.0;
    mp.data = make_data(1, "sine", "zero");
    mp.grid = MacroGrid{1, nx, nt, 0.1};
    const auto traj = solve_micro(mp);
    double e = 0.0;
    for (int n = 0; n <= traj.steps(); ++n) {
      const auto u = traj.u(n);
      for (int i = 0; i < nx; ++i) {
        const double x = (i + 1) * traj.grid.h();
        e = std::max(e, std::abs(u[i] - std::exp(-kPi * kPi * traj.time(n)) * std::sin(kPi * x)));
      }
    }
    return e;
  };
  const double e1 = error(15, 1024), e2 = error(31, 2048);
  c.check(e1 / e2 >= 3.0, "refinement ratio " + fmt(e1 / e2));
  c.note("errors " + fmt(e1) + " -> " + fmt(e2) + ", ratio " + fmt(e1 / e2));
}

void criterion10(Criterion& c, const Paths& paths) {
  const auto config = (fs::path(paths.configs) / "study_p0.5_r1.json").string();
  std::vector<std::string> csv;
  for (int i = 0; i < 2; ++i) {
    const auto out = fs::path(paths.work) / ("determinism_" + std::to_string(i));
    fs::remove_all(out);
    const std::string cmd = "\"" + paths.cli + "\" converge --config \"" + config + "\" --out \"" +
                            out.string() + "\" --jobs 1 > \"" + out.string() + ".log\" 2>&1";
    const int rc = std::system(cmd.c_str());
    c.check(rc == 0, "converge run " + std::to_string(i) + " exited with " + std::to_string(rc));
    csv.push_back(rc == 0 ? load_text((out / "report.csv").string()) : "");
  }
  c.check(!csv[0].empty() && csv[0] == csv[1], "reports differ");
  c.note(std::to_string(csv[0].size()) + " bytes identical");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oscidiff acceptance checks"};
  Paths paths;
  app.add_option("--configs", paths.configs, "study configs")->required();
  app.add_option("--fixtures", paths.fixtures, "reference reports")->required();
  app.add_option("--cli", paths.cli, "oscidiff executable")->required();
  app.add_option("--work", paths.work, "scratch directory")->required();
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(paths.work);

  std::vector<StudyRun> runs;
  bool all_ok = true;
  auto run = [&](int id, const std::function<void(Criterion&)>& body) {
    Criterion c(id);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body(c);
    } catch (const std::exception& e) {
      c.check(false, std::string("exception: ") + e.what());
    }
    c.print(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    all_ok = all_ok && c.ok();
  };

  run(1, criterion1);
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  run(6, [&](Criterion& c) {
    runs = run_studies(paths);
    criterion6(c, runs);
  });
  run(7, [&](Criterion& c) {
    c.check(runs.size() == 5, "studies did not run");
    criterion7(c, runs, paths);
  });
  run(8, [&](Criterion& c) { criterion8(c, runs); });
  run(9, criterion9);
  run(10, [&](Criterion& c) { criterion10(c, paths); });

  std::cout << (all_ok ? "all criteria passed" : "some criteria failed") << std::endl;
  return all_ok ? 0 : 1;
}
