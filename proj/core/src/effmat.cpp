#include "oscidiff/effmat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "oscidiff/assembly.hpp"
#include "oscidiff/error.hpp"
#include "parallel.hpp"

namespace oscidiff {

const Mat& EffectiveTensor::constant() const {
  if (matrices.empty()) throw Error(Errc::MissingArtifact, "empty homogenized tensor");
  if (is_table()) throw Error(Errc::RegimeMismatch, "tabulated tensor has no single matrix");
  return matrices.front();
}

TableBracket bracket_table(const std::vector<double>& keys, double u0abs) {
  TableBracket b;
  if (keys.size() < 2) return b;
  const double u = std::abs(u0abs);
  if (u >= keys.back()) {
    b.lo = b.hi = keys.size() - 1;
    b.clamped = u > keys.back();
    return b;
  }
  if (u <= keys.front()) {
    b.clamped = u < keys.front();
    return b;
  }
  const auto it = std::upper_bound(keys.begin(), keys.end(), u);
  b.hi = static_cast<std::size_t>(it - keys.begin());
  b.lo = b.hi - 1;
  const double l0 = std::log1p(keys[b.lo]);
  const double l1 = std::log1p(keys[b.hi]);
  b.theta = (std::log1p(u) - l0) / (l1 - l0);
  return b;
}

Mat EffectiveTensor::at(double u0abs, std::size_t* clamped) const {
  if (!is_table()) return constant();
  const TableBracket b = bracket_table(keys, u0abs);
  if (b.clamped && clamped) ++*clamped;
  if (b.lo == b.hi) return matrices[b.lo];
  return (1.0 - b.theta) * matrices[b.lo] + b.theta * matrices[b.hi];
}

EffectiveTensor assemble_ahom(std::span<const CellSolution> cells,
                              const PeriodicMatrixField& field) {
  if (cells.empty()) throw Error(Errc::DimensionMismatch, "no cell solutions given");
  const CellSolution& first = cells.front();
  const int dim = first.grid.dim;
  if (static_cast<int>(cells.size()) != dim || field.dim() != dim)
    throw Error(Errc::DimensionMismatch, "need one cell solution per direction");
  for (const auto& c : cells)
    if (c.regime != first.regime || !(c.grid == first.grid) || c.u0abs != first.u0abs ||
        c.p != first.p)
      throw Error(Errc::RegimeMismatch, "cell solutions disagree on regime, grid or parameters");

  const auto mesh = first.mesh();
  const int S = field.s_independent() ? 1 : first.grid.Ms;
  for (const auto& c : cells)
    if (c.num_slices() != 1 && c.num_slices() != first.grid.Ms)
      throw Error(Errc::DimensionMismatch, "unexpected slice count in cell solution");

  EffectiveTensor t;
  t.regime = first.regime;
  t.dim = dim;
  t.p = first.p;
  t.field_id = field.id();
  t.grid = first.grid;
  Mat A = Mat::Zero(dim, dim);
  Mat G = Mat::Zero(dim, dim);
  const int grad_slices = std::max_element(cells.begin(), cells.end(), [](auto& a, auto& b) {
                            return a.num_slices() < b.num_slices();
                          })->num_slices();

  for (int j = 0; j < S; ++j) {
    const double s = static_cast<double>(j) / S;
    const auto coef = cell_coefficients(field, mesh, s);
    std::vector<std::vector<Vec>> grads(dim);
    for (int k = 0; k < dim; ++k) {
      const int slice = cells[k].num_slices() == 1 ? 0 : j * cells[k].num_slices() / S;
      grads[k] = cells[k].gradients(slice);
    }
    const auto& elems = mesh.elements();
    for (std::size_t e = 0; e < elems.size(); ++e) {
      const Mat& a = coef[elems[e].square];
      for (int k = 0; k < dim; ++k) {
        Vec g = grads[k][e];
        g[k] += 1.0;
        A.col(k) += elems[e].area * (a * g);
      }
    }
  }
  A /= static_cast<double>(S);

  for (int j = 0; j < grad_slices; ++j) {
    std::vector<std::vector<Vec>> grads(dim);
    for (int k = 0; k < dim; ++k)
      grads[k] = cells[k].gradients(cells[k].num_slices() == 1 ? 0 : j);
    for (std::size_t e = 0; e < mesh.elements().size(); ++e)
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
          G(a, b) += mesh.elements()[e].area * grads[a][e].dot(grads[b][e]);
  }
  G /= static_cast<double>(grad_slices);

  t.matrices.push_back(A);
  t.gram.push_back(G);
  std::vector<double> norms;
  for (const auto& c : cells) norms.push_back(c.l2_norm_sq());
  t.phi_l2.push_back(norms);
  return t;
}

std::vector<double> default_u0abs_grid() {
  std::vector<double> keys{0.0};
  const int n = 16;
  for (int i = 0; i < n; ++i) keys.push_back(std::pow(10.0, -3.0 + 4.0 * i / (n - 1)));
  return keys;
}

EffectiveTensor tabulate_ahom_critical(const PeriodicMatrixField& field, const CellGrid& grid,
                                       double p, const std::vector<double>& u0abs_grid,
                                       const CriticalTableOptions& opts,
                                       std::vector<std::vector<CellSolution>>* cells_out) {
  Regime regime;
  if (p > 0.0 && p < 1.0)
    regime = Regime::CriticalFDE;
  else if (p > 1.0 && p < 2.0)
    regime = Regime::CriticalPME;
  else
    throw Error(Errc::InvalidArgument, "critical regime requires 0 < p < 2 and p != 1");
  if (u0abs_grid.size() < 4) throw Error(Errc::InvalidArgument, "u0abs grid needs >= 4 entries");
  if (u0abs_grid.front() != 0.0) throw Error(Errc::InvalidArgument, "u0abs grid must start at 0");
  for (std::size_t i = 1; i < u0abs_grid.size(); ++i)
    if (!(u0abs_grid[i] > u0abs_grid[i - 1]))
      throw Error(Errc::InvalidArgument, "u0abs grid must be strictly increasing");

  const int n = static_cast<int>(u0abs_grid.size());
  std::vector<std::vector<CellSolution>> cells(n);
  detail::parallel_for(n, opts.jobs, [&](int i) {
    const CellParameter param{p, u0abs_grid[i]};
    try {
      for (int k = 0; k < grid.dim; ++k)
        cells[i].push_back(solve_cell(regime, field, grid, param, k, opts.solver));
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "at u0abs = " << u0abs_grid[i] << ": " << e.message();
      throw Error(e.code(), msg.str());
    }
  });

  EffectiveTensor t;
  for (int i = 0; i < n; ++i) {
    EffectiveTensor entry = assemble_ahom(cells[i], field);
    if (i == 0) t = entry;
    else {
      t.matrices.push_back(entry.matrices.front());
      t.gram.push_back(entry.gram.front());
      t.phi_l2.push_back(entry.phi_l2.front());
    }
  }
  t.keys = u0abs_grid;
  t.regime = regime;
  t.p = p;
  if (cells_out) *cells_out = std::move(cells);
  return t;
}

Vec apply(const EffectiveTensor& tensor, double u0val, const Vec& grad_v0, std::size_t* clamped) {
  return tensor.at(std::abs(u0val), clamped) * grad_v0;
}

std::vector<Vec> probe_vectors(int dim, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec xi(dim);
    if (dim == 1)
      xi[0] = (i % 2 == 0) ? 1.0 : -1.0;
    else {
      const double th = angle(rng);
      xi << std::cos(th), std::sin(th);
    }
    out.push_back(xi);
  }
  return out;
}

EllipticityReport ellipticity_report(const EffectiveTensor& tensor, double lambda, double Lambda,
                                     std::span<const Vec> probes, double tol) {
  EllipticityReport rep;
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < tensor.matrices.size(); ++m) {
    const Mat& A = tensor.matrices[m];
    const Mat& G = tensor.gram.at(m);
    for (const Vec& xi : probes) {
      const double q = xi.dot(A * xi);
      const double w = xi.squaredNorm() + xi.dot(G * xi);
      const double lower = q - lambda * w;
      const double upper = Lambda * w - q;
      ++rep.probes;
      if (std::min(lower, upper) < rep.min_slack) {
        rep.min_slack = std::min(lower, upper);
        rep.witness_matrix = m;
        rep.witness_xi = xi;
        rep.lower_side = lower <= upper;
      }
    }
  }
  if (rep.min_slack < -tol) {
    std::ostringstream msg;
    msg << "improved ellipticity " << (rep.lower_side ? "lower" : "upper")
        << " bound violated: slack " << rep.min_slack << " for matrix " << rep.witness_matrix;
    if (tensor.is_table()) msg << " (u0abs = " << tensor.keys[rep.witness_matrix] << ")";
    msg << ", xi = (" << rep.witness_xi.transpose() << ")";
    throw Error(Errc::BoundViolated, msg.str());
  }
  return rep;
}

SkewReport skew_report(const Mat& ahom, std::span<const CellSolution> cells,
                       double tol_constant) {
  SkewReport rep;
  const int dim = static_cast<int>(ahom.rows());
  rep.skew = 0.5 * (ahom - ahom.transpose());
  rep.asymmetry = (ahom - ahom.transpose()).cwiseAbs().maxCoeff();
  rep.skew_integral = Mat::Zero(dim, dim);
  const bool critical = !cells.empty() && is_critical(cells.front().regime);
  if (!critical) {
    rep.tolerance = 1e-9;
    rep.max_mismatch = rep.asymmetry;
    if (rep.asymmetry > rep.tolerance) {
      std::ostringstream msg;
      msg << "homogenized matrix not symmetric: max |a - a^T| = " << rep.asymmetry;
      throw Error(Errc::SymmetryViolated, msg.str());
    }
    return rep;
  }
  if (static_cast<int>(cells.size()) != dim)
    throw Error(Errc::DimensionMismatch, "need one cell solution per direction");
  const CellGrid& grid = cells.front().grid;
  const double mu = cells.front().mu;
  const double w = grid.dim == 1 ? grid.hy() : grid.hy() * grid.hy();
  rep.tolerance = tol_constant * (grid.hy() * grid.hy() + grid.hs());
  const int S = cells.front().num_slices();
  if (S > 1) {
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k) {
        double sum = 0.0;
        for (int i = 0; i < S; ++i) {
          const int im = (i + S - 1) % S;
          const auto& pk = cells[k].slices;
          const auto& pj = cells[j].slices;
          sum += (pk[i] - pk[im]).dot(0.5 * (pj[i] + pj[im]));
        }
        rep.skew_integral(j, k) = mu * w * sum;
      }
  }
  rep.max_mismatch = (rep.skew - rep.skew_integral).cwiseAbs().maxCoeff();
  if (rep.max_mismatch > rep.tolerance) {
    std::ostringstream msg;
    msg << "skew part of the homogenized matrix differs from mu int <d_s Phi_k, Phi_j> by "
        << rep.max_mismatch << " (tolerance " << rep.tolerance << ")";
    throw Error(Errc::SkewFormulaMismatch, msg.str());
  }
  return rep;
}

double harmonic_mean_oracle_1d(const PeriodicMatrixField& field, Regime regime, int n) {
  if (field.dim() != 1) throw Error(Errc::DimensionMismatch, "harmonic-mean oracle is 1D only");
  if (is_critical(regime))
    throw Error(Errc::RegimeMismatch, "no harmonic-mean closed form in the critical regime");
  const int ns = field.s_independent() ? 1 : n;
  if (regime == Regime::Supercritical) {
    double inv = 0.0;
    for (int i = 0; i < n; ++i) {
      const Point y{(i + 0.5) / n, 0.0};
      double avg = 0.0;
      for (int j = 0; j < ns; ++j) avg += field(y, (j + 0.5) / ns)(0, 0);
      inv += ns / avg;
    }
    return n / inv;
  }
  double total = 0.0;
  for (int j = 0; j < ns; ++j) {
    const double s = (j + 0.5) / ns;
    double inv = 0.0;
    for (int i = 0; i < n; ++i) inv += 1.0 / field({(i + 0.5) / n, 0.0}, s)(0, 0);
    total += n / inv;
  }
  return total / ns;
}

}  // namespace oscidiff
