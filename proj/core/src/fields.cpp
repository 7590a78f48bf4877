#include "oscidiff/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "oscidiff/error.hpp"

namespace oscidiff {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Additive recurrence with the generalized golden ratio (plastic number
// family): well-spread points in [0,1)^d without a random state.
double kronecker(int i, int d, int dims) {
  double phi = 2.0;
  for (int it = 0; it < 32; ++it) phi = std::pow(1.0 + phi, 1.0 / (dims + 1));
  const double alpha = std::pow(1.0 / phi, d + 1);
  return wrap_unit(0.5 + alpha * (i + 1));
}

Mat scalar_matrix(int dim, double value) {
  return Mat::Identity(dim, dim) * value;
}

std::pair<double, double> eig_range(const Mat& a) {
  if (a.rows() == 1) return {a(0, 0), a(0, 0)};
  Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()(0), es.eigenvalues()(a.rows() - 1)};
}

double param(const std::map<std::string, double>& params, const std::string& key,
             double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

double wrap_unit(double x) {
  double f = x - std::floor(x);
  if (f >= 1.0) f = 0.0;  // x slightly below an integer
  return f;
}

PeriodicMatrixField::PeriodicMatrixField(int dim, Evaluator eval, double lambda,
                                         double Lambda, bool s_independent,
                                         Smoothness smoothness, std::string id)
    : dim_(dim),
      eval_(std::make_shared<const Evaluator>(std::move(eval))),
      lambda_(lambda),
      Lambda_(Lambda),
      s_independent_(s_independent),
      smoothness_(smoothness),
      id_(std::move(id)) {
  if (dim != 1 && dim != 2) throw Error(Errc::InvalidArgument, "field dimension must be 1 or 2");
  if (!(lambda > 0.0) || Lambda < lambda)
    throw Error(Errc::InvalidArgument, "field needs 0 < lambda <= Lambda");
}

Mat PeriodicMatrixField::operator()(const Point& y, double s) const {
  Point w{wrap_unit(y[0]), dim_ == 2 ? wrap_unit(y[1]) : 0.0};
  return (*eval_)(w, wrap_unit(s));
}

EllipticityEstimate validate_ellipticity(const PeriodicMatrixField& field,
                                         int n_samples) {
  if (n_samples < 1) throw Error(Errc::InvalidArgument, "n_samples must be positive");
  const int dims = field.dim() + 1;
  EllipticityEstimate est{std::numeric_limits<double>::infinity(),
                          -std::numeric_limits<double>::infinity()};
  for (int i = 0; i < n_samples; ++i) {
    Point y{kronecker(i, 0, dims), field.dim() == 2 ? kronecker(i, 1, dims) : 0.0};
    const double s = kronecker(i, dims - 1, dims);
    const Mat a = field(y, s);
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale) {
      std::ostringstream msg;
      msg << "a(y,s) not symmetric at y=(" << y[0] << "," << y[1] << "), s=" << s;
      throw Error(Errc::AsymmetricCoefficient, msg.str());
    }
    auto [lo, hi] = eig_range(a);
    if (lo < field.lambda() - 1e-12 || hi > field.Lambda() + 1e-12) {
      std::ostringstream msg;
      msg << "Rayleigh quotient range [" << lo << ", " << hi << "] leaves [lambda, Lambda] = ["
          << field.lambda() << ", " << field.Lambda() << "] at y=(" << y[0] << "," << y[1]
          << "), s=" << s;
      throw Error(Errc::EllipticityViolation, msg.str());
    }
    est.lambda_est = std::min(est.lambda_est, lo);
    est.Lambda_est = std::max(est.Lambda_est, hi);
  }
  return est;
}

Mat sample_oscillating(const PeriodicMatrixField& field, const Point& x, double t,
                       double eps, double r) {
  Point y{x[0] / eps, x[1] / eps};
  return field(y, t / std::pow(eps, r));
}

Mat mean_ys(const PeriodicMatrixField& field, const CellGrid& grid) {
  grid.validate();
  if (grid.dim != field.dim()) throw Error(Errc::DimensionMismatch, "grid and field dimensions differ");
  const int m = grid.My;
  const int slices = field.s_independent() ? 1 : grid.Ms;
  Mat sum = Mat::Zero(field.dim(), field.dim());
  for (int j = 0; j < slices; ++j) {
    const double s = static_cast<double>(j) / slices;
    Mat slice_sum = Mat::Zero(field.dim(), field.dim());
    if (field.dim() == 1) {
      for (int i = 0; i < m; ++i) slice_sum += field({(i + 0.5) / m, 0.0}, s);
    } else {
      for (int i2 = 0; i2 < m; ++i2)
        for (int i1 = 0; i1 < m; ++i1) slice_sum += field({(i1 + 0.5) / m, (i2 + 0.5) / m}, s);
    }
    sum += slice_sum / static_cast<double>(grid.nodes());
  }
  return sum / static_cast<double>(slices);
}

double sup_ds_norm(const PeriodicMatrixField& field, int samples_per_dir) {
  if (field.s_independent()) return 0.0;
  const int n = samples_per_dir;
  const double ds = 1e-5;
  double sup = 0.0;
  const int n2 = field.dim() == 2 ? n : 1;
  for (int j = 0; j < n; ++j) {
    const double s = (j + 0.5) / n;
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i1 = 0; i1 < n; ++i1) {
        Point y{(i1 + 0.5) / n, field.dim() == 2 ? (i2 + 0.5) / n : 0.0};
        const Mat d = (field(y, s + ds) - field(y, s - ds)) / (2.0 * ds);
        auto [lo, hi] = eig_range(0.5 * (d + d.transpose()));
        sup = std::max({sup, std::abs(lo), std::abs(hi)});
      }
  }
  return sup;
}

namespace builtin {

PeriodicMatrixField constant(const Mat& A, std::string id) {
  auto [lo, hi] = eig_range(A);
  return PeriodicMatrixField(
      static_cast<int>(A.rows()), [A](const Point&, double) { return A; }, lo, hi, true,
      Smoothness::Smooth, std::move(id));
}

PeriodicMatrixField identity(int dim) {
  return constant(Mat::Identity(dim, dim), "identity");
}

PeriodicMatrixField trig1d(double declared_lambda) {
  return PeriodicMatrixField(
      1,
      [](const Point& y, double) {
        return scalar_matrix(1, (2.0 + std::sin(kTwoPi * y[0])) / 4.0);
      },
      declared_lambda, 0.75, true, Smoothness::Smooth, "trig1d");
}

PeriodicMatrixField trig1d_st() {
  return PeriodicMatrixField(
      1,
      [](const Point& y, double s) {
        return scalar_matrix(1, (2.0 + std::sin(kTwoPi * y[0]) * std::cos(kTwoPi * s)) / 4.0);
      },
      0.25, 0.75, false, Smoothness::Smooth, "trig1d_st");
}

PeriodicMatrixField trig1d_mixed() {
  return PeriodicMatrixField(
      1,
      [](const Point& y, double s) {
        const double wave = std::sin(kTwoPi * y[0]) * (1.0 + std::cos(kTwoPi * s)) / 2.0;
        return scalar_matrix(1, (2.0 + wave) / 4.0);
      },
      0.25, 0.75, false, Smoothness::Smooth, "trig1d_mixed");
}

PeriodicMatrixField laminate2d() {
  return PeriodicMatrixField(
      2,
      [](const Point& y, double) {
        return scalar_matrix(2, (2.0 + std::sin(kTwoPi * y[0])) / 4.0);
      },
      0.25, 0.75, true, Smoothness::Smooth, "laminate2d");
}

namespace {

PeriodicMatrixField trig2d_impl(double amplitude, bool frozen, std::string id) {
  if (!(amplitude >= 0.0 && amplitude <= 0.2))
    throw Error(Errc::InvalidArgument, "trig2d amplitude must lie in [0, 0.2]");
  return PeriodicMatrixField(
      2,
      [amplitude, frozen](const Point& y, double s) {
        const double t = frozen ? 0.0 : s;
        Mat a(2, 2);
        a(0, 0) = 1.0 + 0.3 * std::sin(kTwoPi * y[0]) + amplitude * std::cos(kTwoPi * (y[0] + y[1] - t));
        a(1, 1) = 1.0 + 0.3 * std::sin(kTwoPi * y[1]) + amplitude * std::cos(kTwoPi * (y[0] - y[1] + t));
        a(0, 1) = a(1, 0) = 0.2 * std::sin(kTwoPi * (y[0] + y[1] - t));
        return a;
      },
      0.3, 1.7, frozen, Smoothness::Smooth, std::move(id));
}

}  // namespace

PeriodicMatrixField trig2d(double time_amplitude) {
  return trig2d_impl(time_amplitude, false, "trig2d");
}

PeriodicMatrixField trig2d_static() { return trig2d_impl(0.2, true, "trig2d_static"); }

PeriodicMatrixField checkerboard2d(double lo, double hi, double sharpness) {
  if (!(lo > 0.0) || hi < lo) throw Error(Errc::InvalidArgument, "checkerboard needs 0 < lo <= hi");
  return PeriodicMatrixField(
      2,
      [lo, hi, sharpness](const Point& y, double) {
        const double sign = std::tanh(sharpness * std::sin(kTwoPi * y[0]) * std::sin(kTwoPi * y[1]));
        return scalar_matrix(2, 0.5 * (lo + hi) + 0.5 * (hi - lo) * sign);
      },
      lo, hi, true, Smoothness::Smooth, "checkerboard2d");
}

}  // namespace builtin

PeriodicMatrixField make_builtin_field(const std::string& name,
                                       const std::map<std::string, double>& params) {
  if (name == "identity") return builtin::identity(static_cast<int>(param(params, "dim", 1)));
  if (name == "constant") {
    const int dim = static_cast<int>(param(params, "dim", 1));
    if (dim != 1 && dim != 2) throw Error(Errc::InvalidConfig, "constant field: dim must be 1 or 2");
    Mat A(dim, dim);
    const double value = param(params, "value", 1.0);
    A(0, 0) = param(params, "a11", value);
    if (dim == 2) {
      A(0, 1) = A(1, 0) = param(params, "a12", 0.0);
      A(1, 1) = param(params, "a22", value);
    }
    return builtin::constant(A);
  }
  if (name == "trig1d") return builtin::trig1d(param(params, "lambda", 0.25));
  if (name == "trig1d_st") return builtin::trig1d_st();
  if (name == "trig1d_mixed") return builtin::trig1d_mixed();
  if (name == "laminate2d") return builtin::laminate2d();
  if (name == "trig2d") return builtin::trig2d(param(params, "amplitude", 0.2));
  if (name == "trig2d_static") return builtin::trig2d_static();
  if (name == "checkerboard2d")
    return builtin::checkerboard2d(param(params, "lo", 0.5), param(params, "hi", 1.5),
                                   param(params, "sharpness", 8.0));
  throw Error(Errc::InvalidConfig, "unknown builtin field '" + name + "'");
}

}  // namespace oscidiff
