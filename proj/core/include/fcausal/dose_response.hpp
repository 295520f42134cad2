#pragma once

#include <map>
#include <vector>

#include "fcausal/spline.hpp"

namespace fcausal {

/// One fitted dose-response curve g, either a straight line or a cubic
/// B-spline. Only differences of g are meaningful; the level is arbitrary.
struct DoseCurve {
  bool is_linear = true;
  double slope = 0.0;
  BSplineBasis basis;
  Vector coef;

  static DoseCurve linear(double slope);
  static DoseCurve spline(BSplineBasis basis, Vector coef);

  double value(double d) const;
  double derivative(double d) const;
  Vector values(const Vector& d) const;
  Vector derivatives(const Vector& d) const;
  /// True when d falls outside the spline support (never for lines).
  bool clamps(double d) const;
};

struct DoseSummary {
  Vector grid;      // 200 points over the exposure range
  Vector centered;  // g(grid) - g(mean exposure)
  Vector marginal;  // g'(grid)
  double acd = 0.0;
  std::map<double, double> ate;
  bool shift_out_of_support = false;  // > 10% of shifted points clamped for some shift
  double max_clamped_fraction = 0.0;
};

DoseSummary dose_response_summaries(const DoseCurve& curve, const Vector& exposure_sample,
                                    const std::vector<double>& shifts, int grid_points = 200);

/// Unit-averaged summaries for per-unit curves; samples[i] belongs to curves[i].
/// The grid spans the pooled exposure range and the curve is the unit average.
DoseSummary average_summaries(const std::vector<DoseCurve>& curves, const std::vector<Vector>& samples,
                              const std::vector<double>& shifts, int grid_points = 200);

/// PATE contrast: mean over units of g_i(d1_i) - g_i(d2_i).
double pate_contrast(const std::vector<DoseCurve>& curves, const Vector& d1, const Vector& d2);

}  // namespace fcausal
