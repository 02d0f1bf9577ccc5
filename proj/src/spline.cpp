#include "metapuck/spline.hpp"

#include <stdexcept>

namespace metapuck {

CubicSpline::CubicSpline(double t0, double dt, std::vector<double> values)
    : t0_(t0), h_(dt), y_(std::move(values)) {
  const std::size_t n = y_.size();
  if (n < 2) throw std::invalid_argument("CubicSpline: need at least two knots");
  if (dt <= 0.0) throw std::invalid_argument("CubicSpline: knot spacing must be positive");
  m2_.assign(n, 0.0);
  if (n == 2) return;  // a line; second derivatives stay zero

  // Tridiagonal system for interior second derivatives, natural boundaries:
  //   m2[i-1] + 4 m2[i] + m2[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]) / h^2
  // solved with the Thomas algorithm.
  std::vector<double> c(n, 0.0), d(n, 0.0);
  double beta = 4.0;
  c[1] = 1.0 / beta;
  d[1] = 6.0 * (y_[2] - 2.0 * y_[1] + y_[0]) / (h_ * h_) / beta;
  for (std::size_t i = 2; i + 1 < n; ++i) {
    beta = 4.0 - c[i - 1];
    c[i] = 1.0 / beta;
    double rhs = 6.0 * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]) / (h_ * h_);
    d[i] = (rhs - d[i - 1]) / beta;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m2_[i] = d[i] - c[i] * m2_[i + 1];
    if (i == 1) break;
  }
}

std::size_t CubicSpline::segment(double& t) const {
  double lo = t_begin(), hi = t_end();
  if (t < lo) t = lo;
  if (t > hi) t = hi;
  auto idx = std::size_t((t - t0_) / h_);
  if (idx >= y_.size() - 1) idx = y_.size() - 2;
  return idx;
}

double CubicSpline::eval(double t) const {
  std::size_t i = segment(t);
  double a = t0_ + h_ * double(i);
  double u = (t - a) / h_;     // in [0, 1]
  double v = 1.0 - u;
  double h2 = h_ * h_ / 6.0;
  return v * y_[i] + u * y_[i + 1] +
         h2 * ((v * v * v - v) * m2_[i] + (u * u * u - u) * m2_[i + 1]);
}

double CubicSpline::deriv(double t) const {
  std::size_t i = segment(t);
  double a = t0_ + h_ * double(i);
  double u = (t - a) / h_;
  double v = 1.0 - u;
  return (y_[i + 1] - y_[i]) / h_ +
         h_ / 6.0 * ((3.0 * u * u - 1.0) * m2_[i + 1] - (3.0 * v * v - 1.0) * m2_[i]);
}

}  // namespace metapuck
