#pragma once

namespace oscidiff {

/// Uniform periodic discretization of the unit cell (0,1)^N x J.
/// Nodes y_i = i/My carry the unknowns, coefficients are sampled at the
/// square centers (i + 1/2)/My; time slices are s_j = j/Ms, j = 0..Ms-1,
/// with s = 1 identified with s = 0.
struct CellGrid {
  int dim = 1;
  int My = 64;
  int Ms = 64;

  double hy() const { return 1.0 / My; }
  double hs() const { return 1.0 / Ms; }
  int nodes() const { return dim == 1 ? My : My * My; }

  /// Throws InvalidArgument unless dim in {1,2}, My >= 4, Ms >= 2.
  void validate() const;

  static CellGrid defaults(int dim);
};

/// Macroscopic grid on Omega = (0,1)^N with homogeneous Dirichlet data:
/// nx interior points per direction, nt implicit steps up to time T.
struct MacroGrid {
  int dim = 1;
  int nx = 63;
  int nt = 64;
  double T = 0.25;

  double h() const { return 1.0 / (nx + 1); }
  double dt() const { return T / nt; }
  int dofs() const { return dim == 1 ? nx : nx * nx; }

  /// Throws InvalidArgument unless nx >= 8, nt >= 4, T > 0.
  void validate() const;
};

bool operator==(const CellGrid& a, const CellGrid& b);
bool operator==(const MacroGrid& a, const MacroGrid& b);

}  // namespace oscidiff
