#pragma once

#include <string>
#include <vector>

#include "fcausal/spline.hpp"

namespace fcausal {

enum class LearnerKind { Linear, Ridge, SplineAdditive };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::SplineAdditive;
  double lambda = 1.0;  // Ridge penalty
  int df = 5;           // SplineAdditive degrees of freedom per feature

  static LearnerSpec linear() { return {LearnerKind::Linear, 0.0, 0}; }
  static LearnerSpec ridge(double lambda) { return {LearnerKind::Ridge, lambda, 0}; }
  static LearnerSpec spline(int df) { return {LearnerKind::SplineAdditive, 0.0, df}; }
};

/// "linear", "ridge:<lambda>", "spline:<df>".
LearnerSpec learner_from_string(const std::string& s);
std::string to_string(const LearnerSpec& spec);

/// Column expansion of raw features, fixed at fit time. Linear and Ridge pass
/// features through; SplineAdditive replaces each feature by a cubic B-spline
/// basis, falling back to the raw column when it has too few distinct values.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(const LearnerSpec& spec, const Matrix& features);

  Matrix transform(const Matrix& features) const;
  int output_dim() const;
  int input_dim() const { return input_dim_; }

 private:
  LearnerSpec spec_;
  int input_dim_ = 0;
  std::vector<BSplineBasis> bases_;  // one per input column (spline mode)
  std::vector<bool> use_basis_;
};

/// Regression of y on features with an unpenalized intercept.
class FittedLearner {
 public:
  FittedLearner() = default;
  FittedLearner(const LearnerSpec& spec, const Matrix& features, const Vector& y);

  Vector predict(const Matrix& features) const;

 private:
  FeatureMap map_;
  double intercept_ = 0.0;
  Vector coef_;
};

/// Penalty used on expanded design columns: lambda for Ridge, a tiny
/// stabilizer for splines, none for Linear.
double learner_penalty(const LearnerSpec& spec, const Matrix& design);

/// Least squares of y on [1, design] with `penalty` added to the non-intercept
/// normal equations after centering. Returns (intercept, coefficients).
std::pair<double, Vector> fit_with_intercept(const Matrix& design, const Vector& y, double penalty);

}  // namespace fcausal
