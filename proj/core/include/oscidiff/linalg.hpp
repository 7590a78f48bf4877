#pragma once

#include <cmath>

#include <Eigen/Core>

#include "oscidiff/assembly.hpp"

namespace oscidiff {

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Conjugate gradients for a symmetric positive (semi)definite operator.
/// With project_mean the iteration runs in the zero-mean subspace, which is
/// how the periodic cell operator's constant nullspace is removed; the rhs
/// must then have zero sum. x holds the initial guess on entry.
template <typename Op>
CgResult conjugate_gradient(const Op& apply, const Eigen::VectorXd& rhs,
                            Eigen::VectorXd& x, double tol, int max_iter,
                            bool mean_free) {
  CgResult res;
  Eigen::VectorXd b = rhs;
  if (mean_free) {
    project_mean(b);
    project_mean(x);
  }
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  Eigen::VectorXd r = b - apply(x);
  if (mean_free) project_mean(r);
  Eigen::VectorXd d = r;
  double rr = r.squaredNorm();
  Eigen::VectorXd q(x.size());
  for (int it = 0; it < max_iter; ++it) {
    res.relative_residual = std::sqrt(rr) / bnorm;
    if (res.relative_residual <= tol) {
      res.converged = true;
      res.iterations = it;
      return res;
    }
    q = apply(d);
    const double dq = d.dot(q);
    if (!(dq > 0.0)) break;
    const double alpha = rr / dq;
    x.noalias() += alpha * d;
    r.noalias() -= alpha * q;
    if (mean_free) {
      project_mean(x);
      project_mean(r);
    }
    const double rr_new = r.squaredNorm();
    d = r + (rr_new / rr) * d;
    rr = rr_new;
    res.iterations = it + 1;
  }
  // Recompute the true residual before giving up.
  Eigen::VectorXd rt = b - apply(x);
  if (mean_free) project_mean(rt);
  res.relative_residual = rt.norm() / bnorm;
  res.converged = res.relative_residual <= tol;
  return res;
}

}  // namespace oscidiff
