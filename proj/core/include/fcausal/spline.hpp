#pragma once

#include <vector>

#include "fcausal/numerics.hpp"

namespace fcausal {

/// Cubic B-spline basis on [lo, hi] with interior knots at sample quantiles.
/// Produces `df` columns: the full basis has df + 1 functions and the first is
/// dropped so the basis can sit next to an intercept. Inputs outside the
/// support are clamped to it.
class BSplineBasis {
 public:
  BSplineBasis() = default;
  BSplineBasis(const Vector& sample, int df);
  BSplineBasis(double lo, double hi, std::vector<double> interior_knots);

  int df() const { return static_cast<int>(num_functions()) - 1; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& interior_knots() const { return interior_; }

  /// n x df basis values / first derivatives.
  Matrix evaluate(const Vector& x) const;
  Matrix derivative(const Vector& x) const;

 private:
  std::size_t num_functions() const { return interior_.size() + 4; }
  void build_knots();
  // All df + 1 basis values (deriv = false) or first derivatives at one point.
  void eval_point(double x, bool deriv, double* out) const;

  double lo_ = 0.0;
  double hi_ = 1.0;
  std::vector<double> interior_;
  std::vector<double> knots_;
};

}  // namespace fcausal
