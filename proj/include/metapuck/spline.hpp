#pragma once

#include <cstddef>
#include <vector>

namespace metapuck {

// Natural cubic spline through uniformly spaced knots (second derivative
// zero at both ends). Evaluation outside the knot range clamps to the
// nearest endpoint, so a finished blade sweep holds its final pose.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(double t0, double dt, std::vector<double> values);

  double eval(double t) const;
  double deriv(double t) const;

  double t_begin() const { return t0_; }
  double t_end() const { return t0_ + h_ * double(y_.size() - 1); }

 private:
  std::size_t segment(double& t) const;  // clamps t, returns segment index

  double t0_ = 0.0;
  double h_ = 1.0;
  std::vector<double> y_;
  std::vector<double> m2_;  // knot second derivatives
};

}  // namespace metapuck
