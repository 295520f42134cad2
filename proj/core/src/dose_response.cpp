#include "fcausal/dose_response.hpp"

#include <algorithm>
#include <limits>

#include "fcausal/error.hpp"

namespace fcausal {

DoseCurve DoseCurve::linear(double slope) {
  DoseCurve c;
  c.is_linear = true;
  c.slope = slope;
  return c;
}

DoseCurve DoseCurve::spline(BSplineBasis basis, Vector coef) {
  if (coef.size() != basis.df()) throw Error(ErrorKind::InvalidArgument, "spline coefficient count mismatch");
  DoseCurve c;
  c.is_linear = false;
  c.basis = std::move(basis);
  c.coef = std::move(coef);
  return c;
}

double DoseCurve::value(double d) const {
  if (is_linear) return slope * d;
  return values(Vector::Constant(1, d))(0);
}

double DoseCurve::derivative(double d) const {
  if (is_linear) return slope;
  return derivatives(Vector::Constant(1, d))(0);
}

Vector DoseCurve::values(const Vector& d) const {
  if (is_linear) return slope * d;
  return basis.evaluate(d) * coef;
}

Vector DoseCurve::derivatives(const Vector& d) const {
  if (is_linear) return Vector::Constant(d.size(), slope);
  return basis.derivative(d) * coef;
}

bool DoseCurve::clamps(double d) const { return !is_linear && (d < basis.lo() || d > basis.hi()); }

namespace {

Vector make_grid(double lo, double hi, int n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least 2 points");
  if (!(hi > lo)) hi = lo + 1.0;
  return Vector::LinSpaced(n, lo, hi);
}

}  // namespace

DoseSummary dose_response_summaries(const DoseCurve& curve, const Vector& sample, const std::vector<double>& shifts,
                                    int grid_points) {
  return average_summaries({curve}, {sample}, shifts, grid_points);
}

DoseSummary average_summaries(const std::vector<DoseCurve>& curves, const std::vector<Vector>& samples,
                              const std::vector<double>& shifts, int grid_points) {
  if (curves.empty() || curves.size() != samples.size()) {
    throw Error(ErrorKind::InvalidArgument, "need one exposure sample per curve");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : samples) {
    if (s.size() == 0) throw Error(ErrorKind::InvalidArgument, "exposure sample is empty");
    lo = std::min(lo, s.minCoeff());
    hi = std::max(hi, s.maxCoeff());
  }
  DoseSummary out;
  out.grid = make_grid(lo, hi, grid_points);
  out.centered = Vector::Zero(grid_points);
  out.marginal = Vector::Zero(grid_points);
  const double k = static_cast<double>(curves.size());
  std::vector<double> ate(shifts.size(), 0.0);
  std::vector<double> clamped(shifts.size(), 0.0);
  double total = 0;
  for (std::size_t u = 0; u < curves.size(); ++u) {
    const auto& g = curves[u];
    const auto& s = samples[u];
    const double center = g.value(s.mean());
    out.centered += (g.values(out.grid).array() - center).matrix() / k;
    out.marginal += g.derivatives(out.grid) / k;
    out.acd += g.derivatives(s).mean() / k;
    const Vector base = g.values(s);
    for (std::size_t h = 0; h < shifts.size(); ++h) {
      const Vector moved = (s.array() + shifts[h]).matrix();
      ate[h] += (g.values(moved) - base).mean() / k;
      for (Eigen::Index n = 0; n < moved.size(); ++n) clamped[h] += g.clamps(moved(n)) ? 1.0 : 0.0;
    }
    total += static_cast<double>(s.size());
  }
  for (std::size_t h = 0; h < shifts.size(); ++h) {
    out.ate[shifts[h]] = ate[h];
    out.max_clamped_fraction = std::max(out.max_clamped_fraction, clamped[h] / total);
  }
  out.shift_out_of_support = out.max_clamped_fraction > 0.10;
  return out;
}

double pate_contrast(const std::vector<DoseCurve>& curves, const Vector& d1, const Vector& d2) {
  if (d1.size() != d2.size()) throw Error(ErrorKind::InvalidArgument, "contrast vectors differ in length");
  if (curves.size() == 1) return (curves[0].values(d1) - curves[0].values(d2)).mean();
  if (static_cast<Eigen::Index>(curves.size()) != d1.size()) {
    throw Error(ErrorKind::InvalidArgument, "need one curve per unit or a single pooled curve");
  }
  double acc = 0;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    acc += curves[i].value(d1(e)) - curves[i].value(d2(e));
  }
  return acc / static_cast<double>(curves.size());
}

}  // namespace fcausal
