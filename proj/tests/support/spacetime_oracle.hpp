#pragma once

#include <vector>

#include <Eigen/Core>

#include "oscidiff/cellsolve.hpp"

namespace oscidiff::testing {

/// Solves the discrete time-periodic cell problem
///   mu w (Phi^i - Phi^{i-1}) / hs + K_i Phi^i = -b_i,  i = 0..Ms-1 (cyclic)
/// as one sparse linear system over all slices, with the space-time mean
/// fixed by a bordering multiplier. Direct LU, no marching.
std::vector<Eigen::VectorXd> monolithic_periodic_cell(const PeriodicMatrixField& field,
                                                      const CellGrid& grid, double mu, int k);

/// L2(cell x J) distance between two slice sequences on the same grid.
double spacetime_l2_distance(const CellGrid& grid, const std::vector<Eigen::VectorXd>& a,
                             const std::vector<Eigen::VectorXd>& b);

}  // namespace oscidiff::testing
