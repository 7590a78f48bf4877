#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "oscidiff/grid.hpp"
#include "oscidiff/types.hpp"

namespace oscidiff {

enum class Smoothness { Continuous, C1InTime, Smooth };

/// Symmetric, uniformly elliptic coefficient a(y,s) on the unit cell x J,
/// periodic in every argument. Immutable once built; the evaluator must be
/// pure so the field can be shared across threads.
class PeriodicMatrixField {
 public:
  using Evaluator = std::function<Mat(const Point& y, double s)>;

  PeriodicMatrixField(int dim, Evaluator eval, double lambda, double Lambda,
                      bool s_independent, Smoothness smoothness,
                      std::string id);

  int dim() const { return dim_; }
  double lambda() const { return lambda_; }
  double Lambda() const { return Lambda_; }
  bool s_independent() const { return s_independent_; }
  Smoothness smoothness() const { return smoothness_; }
  const std::string& id() const { return id_; }

  /// Evaluates a at (y,s) after wrapping every argument into [0,1).
  Mat operator()(const Point& y, double s) const;

 private:
  int dim_;
  std::shared_ptr<const Evaluator> eval_;
  double lambda_;
  double Lambda_;
  bool s_independent_;
  Smoothness smoothness_;
  std::string id_;
};

/// Fractional part in [0,1).
double wrap_unit(double x);

struct EllipticityEstimate {
  double lambda_est = 0.0;
  double Lambda_est = 0.0;
};

/// Min/max Rayleigh quotients over quasi-random (y,s,xi) probes.
/// Throws AsymmetricCoefficient or EllipticityViolation (with the witness
/// point in the message) when the sampled quotients leave
/// [lambda - 1e-12, Lambda + 1e-12].
EllipticityEstimate validate_ellipticity(const PeriodicMatrixField& field,
                                         int n_samples);

/// a(frac(x/eps), frac(t/eps^r)).
Mat sample_oscillating(const PeriodicMatrixField& field, const Point& x,
                       double t, double eps, double r);

/// Average of a over the cell grid: midpoint rule in y (square centers),
/// rectangle rule over the time slices s_j = j/Ms.
Mat mean_ys(const PeriodicMatrixField& field, const CellGrid& grid);

/// Sup over sampled (y,s) of the spectral norm of the centered s-difference
/// quotient of a; used for the contraction constant.
double sup_ds_norm(const PeriodicMatrixField& field, int samples_per_dir = 64);

namespace builtin {

PeriodicMatrixField constant(const Mat& A, std::string id = "constant");
PeriodicMatrixField identity(int dim);
/// a(y) = (2 + sin 2 pi y)/4, lambda = 1/4, Lambda = 3/4.
PeriodicMatrixField trig1d(double declared_lambda = 0.25);
/// a(y,s) = (2 + sin 2 pi y cos 2 pi s)/4.
PeriodicMatrixField trig1d_st();
/// a(y,s) = (2 + sin 2 pi y (1 + cos 2 pi s)/2)/4: non-constant in s at fixed
/// y and with a non-constant s-average.
PeriodicMatrixField trig1d_mixed();
/// a(y) = alpha(y1) I with alpha = (2 + sin 2 pi y1)/4.
PeriodicMatrixField laminate2d();
/// Genuinely two-dimensional, space-time field with off-diagonal entries.
PeriodicMatrixField trig2d(double time_amplitude = 0.2);
/// s-independent variant of trig2d (time_amplitude = 0).
PeriodicMatrixField trig2d_static();
/// Smoothed checkerboard contrast field c(y) I, c in [lo, hi].
PeriodicMatrixField checkerboard2d(double lo = 0.5, double hi = 1.5,
                                   double sharpness = 8.0);

}  // namespace builtin

/// Looks up a builtin by name ("identity", "constant", "trig1d", "trig1d_st",
/// "trig1d_mixed", "laminate2d", "trig2d", "trig2d_static", "checkerboard2d"). Parameters are
/// builtin-specific (e.g. "dim", "value", "lambda", "amplitude").
PeriodicMatrixField make_builtin_field(const std::string& name,
                                       const std::map<std::string, double>& params);

}  // namespace oscidiff
