#pragma once

#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "oscidiff/mesh.hpp"
#include "oscidiff/types.hpp"

namespace oscidiff {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// One coefficient matrix per grid square, sampled at the square center.
std::vector<Mat> square_coefficients(const StructuredMesh& mesh,
                                     const std::function<Mat(const Point&)>& sample);

/// K_ij = sum_T |T| a_T grad psi_j . grad psi_i (a_T need not be symmetric).
SparseMatrix stiffness(const StructuredMesh& mesh, const std::vector<Mat>& coef);

/// b_i = sum_T |T| (a_T e_k) . grad psi_i; the cell problem reads K phi = -b.
Eigen::VectorXd direction_load(const StructuredMesh& mesh,
                               const std::vector<Mat>& coef, int k);

/// g_i = sum_T |T| F_T . grad psi_i for an element-wise vector field F.
Eigen::VectorXd flux_functional(const StructuredMesh& mesh,
                                const std::vector<Vec>& element_field);

/// Element-wise P1 gradients of dof values.
std::vector<Vec> element_gradients(const StructuredMesh& mesh,
                                   const Eigen::VectorXd& values);

/// Subtracts the arithmetic mean (zero-mean projection on periodic meshes).
void project_mean(Eigen::VectorXd& x);

/// Discrete L2 norm with lumped mass.
double l2_norm(const StructuredMesh& mesh, const Eigen::VectorXd& x);

}  // namespace oscidiff
