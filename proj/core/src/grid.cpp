#include "oscidiff/grid.hpp"

#include <string>

#include "oscidiff/error.hpp"

namespace oscidiff {

void CellGrid::validate() const {
  if (dim != 1 && dim != 2)
    throw Error(Errc::InvalidArgument, "cell grid dimension must be 1 or 2");
  if (My < 4) throw Error(Errc::InvalidArgument, "cell grid needs My >= 4, got " + std::to_string(My));
  if (Ms < 2) throw Error(Errc::InvalidArgument, "cell grid needs Ms >= 2, got " + std::to_string(Ms));
}

CellGrid CellGrid::defaults(int dim) {
  CellGrid g;
  g.dim = dim;
  g.My = dim == 1 ? 64 : 48;
  g.Ms = 64;
  return g;
}

void MacroGrid::validate() const {
  if (dim != 1 && dim != 2)
    throw Error(Errc::InvalidArgument, "macro grid dimension must be 1 or 2");
  if (nx < 8) throw Error(Errc::InvalidArgument, "macro grid needs nx >= 8, got " + std::to_string(nx));
  if (nt < 4) throw Error(Errc::InvalidArgument, "macro grid needs nt >= 4, got " + std::to_string(nt));
  if (!(T > 0.0)) throw Error(Errc::InvalidArgument, "macro grid needs T > 0");
}

bool operator==(const CellGrid& a, const CellGrid& b) {
  return a.dim == b.dim && a.My == b.My && a.Ms == b.Ms;
}

bool operator==(const MacroGrid& a, const MacroGrid& b) {
  return a.dim == b.dim && a.nx == b.nx && a.nt == b.nt && a.T == b.T;
}

}  // namespace oscidiff
