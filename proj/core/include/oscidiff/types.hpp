#pragma once

#include <array>

#include <Eigen/Core>

namespace oscidiff {

/// Small dense matrix with at most 2x2 storage (no heap allocation).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;

/// A point in the unit cell or in the macroscopic domain. Unused trailing
/// coordinates are zero when the dimension is 1.
using Point = std::array<double, 2>;

}  // namespace oscidiff
