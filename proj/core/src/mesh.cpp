#include "oscidiff/mesh.hpp"

#include "oscidiff/error.hpp"

namespace oscidiff {

StructuredMesh::StructuredMesh(int dim, bool periodic, int points, int squares, double h)
    : dim_(dim), periodic_(periodic), points_(points), squares_(squares), h_(h) {
  build();
}

StructuredMesh StructuredMesh::periodic(int dim, int points_per_dir) {
  if (dim != 1 && dim != 2) throw Error(Errc::InvalidArgument, "mesh dimension must be 1 or 2");
  if (points_per_dir < 2) throw Error(Errc::InvalidArgument, "periodic mesh needs >= 2 points");
  return StructuredMesh(dim, true, points_per_dir, points_per_dir, 1.0 / points_per_dir);
}

StructuredMesh StructuredMesh::dirichlet(int dim, int interior_per_dir) {
  if (dim != 1 && dim != 2) throw Error(Errc::InvalidArgument, "mesh dimension must be 1 or 2");
  if (interior_per_dir < 1) throw Error(Errc::InvalidArgument, "Dirichlet mesh needs interior points");
  return StructuredMesh(dim, false, interior_per_dir + 2, interior_per_dir + 1,
                        1.0 / (interior_per_dir + 1));
}

double StructuredMesh::node_weight() const { return dim_ == 1 ? h_ : h_ * h_; }

Point StructuredMesh::grid_point(int g) const {
  if (dim_ == 1) return {g * h_, 0.0};
  return {(g % points_) * h_, (g / points_) * h_};
}

Point StructuredMesh::square_center(int sq) const {
  if (dim_ == 1) return {(sq + 0.5) * h_, 0.0};
  return {(sq % squares_ + 0.5) * h_, (sq / squares_ + 0.5) * h_};
}

std::array<int, 4> StructuredMesh::square_corners(int sq) const {
  // Order: (i,j), (i+1,j), (i+1,j+1), (i,j+1); 1D uses the first two.
  auto wrap = [this](int i) { return periodic_ ? i % points_ : i; };
  if (dim_ == 1) return {sq, wrap(sq + 1), -1, -1};
  const int i = sq % squares_;
  const int j = sq / squares_;
  const int i1 = wrap(i + 1);
  const int j1 = wrap(j + 1);
  return {i + points_ * j, i1 + points_ * j, i1 + points_ * j1, i + points_ * j1};
}

void StructuredMesh::build() {
  const int n = grid_points();
  dof_of_grid_.assign(n, -1);
  grid_of_dof_.clear();
  for (int g = 0; g < n; ++g) {
    bool interior = true;
    if (!periodic_) {
      const int i = dim_ == 1 ? g : g % points_;
      const int j = dim_ == 1 ? 1 : g / points_;
      interior = i > 0 && i < points_ - 1 && j > 0 && j < points_ - 1;
    }
    if (interior) {
      dof_of_grid_[g] = static_cast<int>(grid_of_dof_.size());
      grid_of_dof_.push_back(g);
    }
  }
  dofs_ = static_cast<int>(grid_of_dof_.size());

  const double ih = 1.0 / h_;
  elements_.clear();
  elements_.reserve(dim_ == 1 ? squares() : 2 * squares());
  for (int sq = 0; sq < squares(); ++sq) {
    const auto c = square_corners(sq);
    if (dim_ == 1) {
      Element e;
      e.vertices = 2;
      e.square = sq;
      e.area = h_;
      e.grid = {c[0], c[1], -1};
      e.grad[0] = {-ih, 0.0};
      e.grad[1] = {ih, 0.0};
      for (int v = 0; v < 2; ++v) e.dof[v] = dof_of_grid_[e.grid[v]];
      e.dof[2] = -1;
      elements_.push_back(e);
      continue;
    }
    Element t1;
    t1.vertices = 3;
    t1.square = sq;
    t1.area = 0.5 * h_ * h_;
    t1.grid = {c[0], c[1], c[2]};
    t1.grad[0] = {-ih, 0.0};
    t1.grad[1] = {ih, -ih};
    t1.grad[2] = {0.0, ih};
    Element t2 = t1;
    t2.grid = {c[0], c[2], c[3]};
    t2.grad[0] = {0.0, -ih};
    t2.grad[1] = {ih, 0.0};
    t2.grad[2] = {-ih, ih};
    for (Element* e : {&t1, &t2})
      for (int v = 0; v < 3; ++v) e->dof[v] = dof_of_grid_[e->grid[v]];
    elements_.push_back(t1);
    elements_.push_back(t2);
  }
}

Vec StructuredMesh::element_gradient(const Element& e, const Eigen::VectorXd& values) const {
  Vec g = Vec::Zero(dim_);
  for (int v = 0; v < e.vertices; ++v) {
    if (e.dof[v] < 0) continue;
    const double val = values[e.dof[v]];
    for (int d = 0; d < dim_; ++d) g[d] += val * e.grad[v][d];
  }
  return g;
}

}  // namespace oscidiff
