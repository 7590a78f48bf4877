#include "oscidiff/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <limits>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "oscidiff/error.hpp"

namespace oscidiff {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

using Header = std::map<std::string, std::string>;

// Parses "<magic> v1 key=value ..." and checks the magic word.
Header read_header(std::istream& is, const std::string& magic) {
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::ParseError, "missing " + magic + " header");
  std::istringstream ss(line);
  std::string word, version;
  ss >> word >> version;
  if (word != magic || version != "v1")
    throw Error(Errc::ParseError, "expected '" + magic + " v1' header, got '" + line + "'");
  Header h;
  while (ss >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) throw Error(Errc::ParseError, "malformed header token '" + word + "'");
    h[word.substr(0, eq)] = word.substr(eq + 1);
  }
  return h;
}

const std::string& need(const Header& h, const std::string& key) {
  auto it = h.find(key);
  if (it == h.end()) throw Error(Errc::ParseError, "header lacks '" + key + "'");
  return it->second;
}

double need_double(const Header& h, const std::string& key) {
  try {
    return std::stod(need(h, key));
  } catch (const std::logic_error&) {
    throw Error(Errc::ParseError, "bad number for '" + key + "'");
  }
}

int need_int(const Header& h, const std::string& key) {
  try {
    return std::stoi(need(h, key));
  } catch (const std::logic_error&) {
    throw Error(Errc::ParseError, "bad integer for '" + key + "'");
  }
}

double read_double(std::istream& is, const char* what) {
  double x;
  if (!(is >> x)) throw Error(Errc::ParseError, std::string("truncated data while reading ") + what);
  return x;
}

Header read_tagged_line(std::istream& is, const std::string& tag) {
  std::string line;
  while (std::getline(is, line) && line.empty()) {
  }
  std::istringstream ss(line);
  std::string word;
  ss >> word;
  if (word != tag) throw Error(Errc::ParseError, "expected '" + tag + "' record, got '" + line + "'");
  Header h;
  while (ss >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) throw Error(Errc::ParseError, "malformed token '" + word + "'");
    h[word.substr(0, eq)] = word.substr(eq + 1);
  }
  return h;
}

void write_vector_line(std::ostream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << num(v[i]);
  os << "\n";
}

Eigen::VectorXd read_vector(std::istream& is, int n, const char* what) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = read_double(is, what);
  std::string rest;
  std::getline(is, rest);
  return v;
}

// Gridded coefficient with periodic multilinear interpolation.
struct GriddedField {
  int dim, My, Ms;
  std::vector<Mat> nodes;  // index: i1 + My * (i2 + My * j) (i2 absent in 1D)

  const Mat& at(int i1, int i2, int j) const {
    const int per_slice = dim == 1 ? My : My * My;
    return nodes[i1 + (dim == 1 ? 0 : My * i2) + per_slice * j];
  }

  Mat operator()(const Point& y, double s) const {
    auto axis = [](double x, int m) {
      const double t = wrap_unit(x) * m;
      int i0 = static_cast<int>(t);
      if (i0 >= m) i0 = m - 1;
      return std::tuple<int, int, double>{i0, (i0 + 1) % m, t - i0};
    };
    auto [a0, a1, wa] = axis(y[0], My);
    auto [s0, s1, ws] = axis(s, Ms);
    auto slice = [&](int j) {
      if (dim == 1) return Mat((1.0 - wa) * at(a0, 0, j) + wa * at(a1, 0, j));
      auto [b0, b1, wb] = axis(y[1], My);
      return Mat((1.0 - wa) * (1.0 - wb) * at(a0, b0, j) + wa * (1.0 - wb) * at(a1, b0, j) +
                 wa * wb * at(a1, b1, j) + (1.0 - wa) * wb * at(a0, b1, j));
    };
    if (Ms == 1) return slice(0);
    return (1.0 - ws) * slice(s0) + ws * slice(s1);
  }
};

}  // namespace

void write_field(std::ostream& os, const PeriodicMatrixField& field, const CellGrid& grid) {
  grid.validate();
  if (grid.dim != field.dim()) throw Error(Errc::DimensionMismatch, "grid and field dimensions differ");
  os << "oscidiff-field v1 N=" << grid.dim << " My=" << grid.My << " Ms=" << grid.Ms
     << " lambda=" << num(field.lambda()) << " Lambda=" << num(field.Lambda()) << "\n";
  const int n2 = grid.dim == 1 ? 1 : grid.My;
  for (int j = 0; j < grid.Ms; ++j)
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i1 = 0; i1 < grid.My; ++i1) {
        const Mat a = field({static_cast<double>(i1) / grid.My, static_cast<double>(i2) / grid.My},
                            static_cast<double>(j) / grid.Ms);
        if (grid.dim == 1)
          os << num(a(0, 0)) << "\n";
        else
          os << num(a(0, 0)) << " " << num(a(0, 1)) << " " << num(a(1, 1)) << "\n";
      }
}

PeriodicMatrixField read_field(std::istream& is, const std::string& id) {
  const Header h = read_header(is, "oscidiff-field");
  GriddedField g{need_int(h, "N"), need_int(h, "My"), need_int(h, "Ms"), {}};
  if (g.dim != 1 && g.dim != 2) throw Error(Errc::ParseError, "field dimension must be 1 or 2");
  if (g.My < 1 || g.Ms < 1) throw Error(Errc::ParseError, "field grid sizes must be positive");
  const int per_slice = g.dim == 1 ? g.My : g.My * g.My;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int n = 0; n < per_slice * g.Ms; ++n) {
    Mat a(g.dim, g.dim);
    if (g.dim == 1) {
      a(0, 0) = read_double(is, "field entries");
    } else {
      a(0, 0) = read_double(is, "field entries");
      a(0, 1) = a(1, 0) = read_double(is, "field entries");
      a(1, 1) = read_double(is, "field entries");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues()(0));
    hi = std::max(hi, es.eigenvalues()(g.dim - 1));
    g.nodes.push_back(a);
  }
  bool s_independent = true;
  for (int n = per_slice; n < per_slice * g.Ms && s_independent; ++n)
    s_independent = g.nodes[n] == g.nodes[n % per_slice];
  if (h.count("lambda")) lo = need_double(h, "lambda");
  if (h.count("Lambda")) hi = need_double(h, "Lambda");
  if (!(lo > 0.0)) throw Error(Errc::EllipticityViolation, "gridded field is not uniformly elliptic");
  const int dim = g.dim;
  return PeriodicMatrixField(dim, [g = std::move(g)](const Point& y, double s) { return g(y, s); },
                             lo, hi, s_independent, Smoothness::Continuous, id);
}

PeriodicMatrixField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingArtifact, "cannot open field file '" + path + "'");
  return read_field(in, path);
}

void write_cells(std::ostream& os, const std::vector<CellSolution>& cells) {
  if (cells.empty()) throw Error(Errc::InvalidArgument, "no cell solutions to write");
  const auto& f = cells.front();
  os << "oscidiff-cell v1 regime=" << to_string(f.regime) << " p=" << num(f.p)
     << " u0abs=" << num(f.u0abs) << " N=" << f.grid.dim << " My=" << f.grid.My
     << " Ms=" << f.grid.Ms << " count=" << cells.size() << "\n";
  for (const auto& c : cells) {
    os << "cell k=" << c.k << " slices=" << c.num_slices() << " mu=" << num(c.mu)
       << " kappa=" << num(c.kappa) << " residual=" << num(c.residual)
       << " defect=" << num(c.periodicity_defect) << " sweeps=" << c.sweeps << "\n";
    for (const auto& s : c.slices) write_vector_line(os, s);
  }
}

std::vector<CellSolution> read_cells(std::istream& is) {
  const Header h = read_header(is, "oscidiff-cell");
  CellSolution proto;
  proto.regime = regime_from_string(need(h, "regime"));
  proto.p = need_double(h, "p");
  proto.u0abs = need_double(h, "u0abs");
  proto.grid = CellGrid{need_int(h, "N"), need_int(h, "My"), need_int(h, "Ms")};
  proto.grid.validate();
  const int count = need_int(h, "count");
  std::vector<CellSolution> out;
  for (int i = 0; i < count; ++i) {
    const Header ch = read_tagged_line(is, "cell");
    CellSolution c = proto;
    c.k = need_int(ch, "k");
    c.mu = need_double(ch, "mu");
    c.kappa = need_double(ch, "kappa");
    c.residual = need_double(ch, "residual");
    c.periodicity_defect = need_double(ch, "defect");
    c.sweeps = need_int(ch, "sweeps");
    const int slices = need_int(ch, "slices");
    for (int j = 0; j < slices; ++j) c.slices.push_back(read_vector(is, c.grid.nodes(), "cell values"));
    out.push_back(std::move(c));
  }
  return out;
}

void write_tensor(std::ostream& os, const EffectiveTensor& t) {
  os << "oscidiff-ahom v1 regime=" << to_string(t.regime) << " p=" << num(t.p) << " N=" << t.dim
     << " My=" << t.grid.My << " Ms=" << t.grid.Ms << " field=" << (t.field_id.empty() ? "-" : t.field_id)
     << " keys=" << t.keys.size() << " entries=" << t.matrices.size() << "\n";
  for (std::size_t m = 0; m < t.matrices.size(); ++m) {
    os << "entry u0abs=" << num(t.is_table() ? t.keys[m] : 0.0) << "\n";
    auto mat_line = [&](const Mat& A) {
      for (int i = 0; i < t.dim; ++i)
        for (int j = 0; j < t.dim; ++j) os << (i + j ? " " : "") << num(A(i, j));
      os << "\n";
    };
    mat_line(t.matrices[m]);
    mat_line(t.gram.at(m));
    const auto& norms = t.phi_l2.at(m);
    for (std::size_t k = 0; k < norms.size(); ++k) os << (k ? " " : "") << num(norms[k]);
    os << "\n";
  }
}

EffectiveTensor read_tensor(std::istream& is) {
  const Header h = read_header(is, "oscidiff-ahom");
  EffectiveTensor t;
  t.regime = regime_from_string(need(h, "regime"));
  t.p = need_double(h, "p");
  t.dim = need_int(h, "N");
  t.grid = CellGrid{t.dim, need_int(h, "My"), need_int(h, "Ms")};
  t.field_id = need(h, "field");
  if (t.field_id == "-") t.field_id.clear();
  const int keys = need_int(h, "keys");
  const int entries = need_int(h, "entries");
  if (keys != 0 && keys != entries) throw Error(Errc::ParseError, "keys and entries disagree");
  for (int m = 0; m < entries; ++m) {
    const Header eh = read_tagged_line(is, "entry");
    if (keys) t.keys.push_back(need_double(eh, "u0abs"));
    auto read_mat = [&] {
      Mat A(t.dim, t.dim);
      for (int i = 0; i < t.dim; ++i)
        for (int j = 0; j < t.dim; ++j) A(i, j) = read_double(is, "tensor entries");
      return A;
    };
    t.matrices.push_back(read_mat());
    t.gram.push_back(read_mat());
    std::vector<double> norms;
    for (int k = 0; k < t.dim; ++k) norms.push_back(read_double(is, "corrector norms"));
    t.phi_l2.push_back(norms);
    std::string rest;
    std::getline(is, rest);
  }
  return t;
}

void write_tensor_csv(std::ostream& os, const EffectiveTensor& t) {
  os << "u0abs";
  for (int i = 0; i < t.dim; ++i)
    for (int j = 0; j < t.dim; ++j) os << ",a" << i + 1 << j + 1;
  os << "\n";
  for (std::size_t m = 0; m < t.matrices.size(); ++m) {
    os << num(t.is_table() ? t.keys[m] : 0.0);
    for (int i = 0; i < t.dim; ++i)
      for (int j = 0; j < t.dim; ++j) os << "," << num(t.matrices[m](i, j));
    os << "\n";
  }
}

void write_trajectory(std::ostream& os, const SpaceTimeField& traj) {
  os << "oscidiff-traj v1 N=" << traj.grid.dim << " nx=" << traj.grid.nx << " nt=" << traj.grid.nt
     << " T=" << num(traj.grid.T) << " p=" << num(traj.p) << " dt=" << num(traj.grid.dt())
     << " max_residual=" << num(traj.max_residual) << " clamps=" << traj.clamp_count << "\n";
  for (int n = 0; n <= traj.steps(); ++n) {
    os << "step n=" << n << " dissipation=" << num(traj.dissipation[n])
       << " grad_sq=" << num(traj.grad_sq[n]) << " work=" << num(traj.work[n])
       << " newton=" << traj.newton_iterations[n] << "\n";
    write_vector_line(os, traj.v[n]);
  }
}

SpaceTimeField read_trajectory(std::istream& is) {
  const Header h = read_header(is, "oscidiff-traj");
  SpaceTimeField traj;
  traj.grid = MacroGrid{need_int(h, "N"), need_int(h, "nx"), need_int(h, "nt"), need_double(h, "T")};
  traj.grid.validate();
  traj.p = need_double(h, "p");
  traj.max_residual = need_double(h, "max_residual");
  traj.clamp_count = static_cast<std::size_t>(need_int(h, "clamps"));
  for (int n = 0; n <= traj.grid.nt; ++n) {
    const Header sh = read_tagged_line(is, "step");
    if (need_int(sh, "n") != n) throw Error(Errc::ParseError, "trajectory steps out of order");
    traj.dissipation.push_back(need_double(sh, "dissipation"));
    traj.grad_sq.push_back(need_double(sh, "grad_sq"));
    traj.work.push_back(need_double(sh, "work"));
    traj.newton_iterations.push_back(need_int(sh, "newton"));
    traj.v.push_back(read_vector(is, traj.grid.dofs(), "trajectory values"));
  }
  return traj;
}

void save_text(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::MissingArtifact, "cannot write '" + path + "'");
  out << contents;
}

std::string load_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingArtifact, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oscidiff
