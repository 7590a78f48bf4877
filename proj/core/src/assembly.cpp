#include "oscidiff/assembly.hpp"

#include <cmath>
#include <vector>

#include "oscidiff/error.hpp"

namespace oscidiff {

std::vector<Mat> square_coefficients(const StructuredMesh& mesh,
                                     const std::function<Mat(const Point&)>& sample) {
  std::vector<Mat> coef(mesh.squares());
  for (int sq = 0; sq < mesh.squares(); ++sq) coef[sq] = sample(mesh.square_center(sq));
  return coef;
}

SparseMatrix stiffness(const StructuredMesh& mesh, const std::vector<Mat>& coef) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.elements().size() * 9);
  const int dim = mesh.dim();
  for (const auto& e : mesh.elements()) {
    const Mat& a = coef[e.square];
    for (int i = 0; i < e.vertices; ++i) {
      if (e.dof[i] < 0) continue;
      for (int j = 0; j < e.vertices; ++j) {
        if (e.dof[j] < 0) continue;
        double val = 0.0;
        for (int r = 0; r < dim; ++r)
          for (int c = 0; c < dim; ++c) val += e.grad[i][r] * a(r, c) * e.grad[j][c];
        trip.emplace_back(e.dof[i], e.dof[j], e.area * val);
      }
    }
  }
  SparseMatrix K(mesh.dofs(), mesh.dofs());
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();
  return K;
}

Eigen::VectorXd direction_load(const StructuredMesh& mesh, const std::vector<Mat>& coef,
                               int k) {
  if (k < 0 || k >= mesh.dim()) throw Error(Errc::InvalidArgument, "direction index out of range");
  std::vector<Vec> field(coef.size());
  for (std::size_t sq = 0; sq < coef.size(); ++sq) field[sq] = coef[sq].col(k);
  std::vector<Vec> per_element(mesh.elements().size());
  for (std::size_t e = 0; e < per_element.size(); ++e)
    per_element[e] = field[mesh.elements()[e].square];
  return flux_functional(mesh, per_element);
}

Eigen::VectorXd flux_functional(const StructuredMesh& mesh,
                                const std::vector<Vec>& element_field) {
  if (element_field.size() != mesh.elements().size())
    throw Error(Errc::DimensionMismatch, "one vector per element expected");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mesh.dofs());
  const int dim = mesh.dim();
  for (std::size_t idx = 0; idx < element_field.size(); ++idx) {
    const auto& e = mesh.elements()[idx];
    const Vec& F = element_field[idx];
    for (int i = 0; i < e.vertices; ++i) {
      if (e.dof[i] < 0) continue;
      double val = 0.0;
      for (int d = 0; d < dim; ++d) val += F[d] * e.grad[i][d];
      g[e.dof[i]] += e.area * val;
    }
  }
  return g;
}

std::vector<Vec> element_gradients(const StructuredMesh& mesh, const Eigen::VectorXd& values) {
  std::vector<Vec> out;
  out.reserve(mesh.elements().size());
  for (const auto& e : mesh.elements()) out.push_back(mesh.element_gradient(e, values));
  return out;
}

void project_mean(Eigen::VectorXd& x) {
  if (x.size() > 0) x.array() -= x.mean();
}

double l2_norm(const StructuredMesh& mesh, const Eigen::VectorXd& x) {
  return std::sqrt(mesh.node_weight() * x.squaredNorm());
}

}  // namespace oscidiff
