#pragma once

#include <array>
#include <vector>

#include "oscidiff/types.hpp"

namespace oscidiff {

/// Structured P1 mesh of (0,1)^N, N in {1,2}. Grid squares (intervals in
/// 1D) carry one coefficient each; in 2D every square is split into two
/// triangles along its main diagonal.
///
/// Periodic meshes have m grid points per direction (spacing 1/m) and every
/// grid point is a degree of freedom. Dirichlet meshes have n interior points
/// per direction (spacing 1/(n+1)); boundary grid points carry the value 0
/// and map to dof -1.
class StructuredMesh {
 public:
  struct Element {
    std::array<int, 3> grid{};  // grid point indices of the vertices
    std::array<int, 3> dof{};   // -1 for Dirichlet boundary vertices
    std::array<std::array<double, 2>, 3> grad{};  // shape-function gradients
    int vertices = 0;
    int square = 0;
    double area = 0.0;
  };

  static StructuredMesh periodic(int dim, int points_per_dir);
  static StructuredMesh dirichlet(int dim, int interior_per_dir);

  int dim() const { return dim_; }
  bool is_periodic() const { return periodic_; }
  double h() const { return h_; }
  /// Lumped mass weight of a node (h^N).
  double node_weight() const;

  int grid_points_per_dir() const { return points_; }
  int grid_points() const { return dim_ == 1 ? points_ : points_ * points_; }
  int squares_per_dir() const { return squares_; }
  int squares() const { return dim_ == 1 ? squares_ : squares_ * squares_; }
  int dofs() const { return dofs_; }

  Point grid_point(int g) const;
  Point square_center(int sq) const;
  std::array<int, 4> square_corners(int sq) const;
  int dof_of_grid(int g) const { return dof_of_grid_[g]; }
  int grid_of_dof(int d) const { return grid_of_dof_[d]; }

  const std::vector<Element>& elements() const { return elements_; }

  /// Gradient of the P1 interpolant of dof values on one element.
  Vec element_gradient(const Element& e, const Eigen::VectorXd& values) const;

 private:
  StructuredMesh(int dim, bool periodic, int points, int squares, double h);
  void build();

  int dim_;
  bool periodic_;
  int points_;
  int squares_;
  double h_;
  int dofs_ = 0;
  std::vector<int> dof_of_grid_;
  std::vector<int> grid_of_dof_;
  std::vector<Element> elements_;
};

}  // namespace oscidiff
