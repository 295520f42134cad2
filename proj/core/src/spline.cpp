#include "fcausal/spline.hpp"

#include <algorithm>
#include <cmath>

#include "fcausal/error.hpp"

namespace fcausal {

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

BSplineBasis::BSplineBasis(const Vector& sample, int df) {
  if (df < 3) throw Error(ErrorKind::InvalidArgument, "spline df must be at least 3");
  if (sample.size() == 0) throw Error(ErrorKind::InvalidArgument, "spline needs a nonempty sample");
  std::vector<double> v(sample.data(), sample.data() + sample.size());
  std::sort(v.begin(), v.end());
  lo_ = v.front();
  hi_ = v.back();
  if (!(hi_ > lo_)) throw Error(ErrorKind::DegenerateColumn, "spline sample has no spread");
  const int interior = df - 3;
  for (int k = 1; k <= interior; ++k) {
    const double q = quantile_sorted(v, static_cast<double>(k) / (interior + 1));
    if (q > lo_ && q < hi_ && (interior_.empty() || q > interior_.back())) interior_.push_back(q);
  }
  // Ties in the sample can collapse quantiles; fall back to even spacing.
  if (static_cast<int>(interior_.size()) != interior) {
    interior_.clear();
    for (int k = 1; k <= interior; ++k) interior_.push_back(lo_ + (hi_ - lo_) * k / (interior + 1));
  }
  build_knots();
}

BSplineBasis::BSplineBasis(double lo, double hi, std::vector<double> interior_knots)
    : lo_(lo), hi_(hi), interior_(std::move(interior_knots)) {
  if (!(hi_ > lo_)) throw Error(ErrorKind::InvalidArgument, "spline support must have hi > lo");
  build_knots();
}

void BSplineBasis::build_knots() {
  knots_.assign(4, lo_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), 4, hi_);
}

void BSplineBasis::eval_point(double x, bool deriv, double* out) const {
  const std::size_t nf = num_functions();
  x = std::clamp(x, lo_, hi_);
  // Knot span index s with knots_[s] <= x < knots_[s+1], the last span closed.
  std::size_t s = 3;
  while (s + 1 < nf && x >= knots_[s + 1]) ++s;

  // Cox-de Boor on the local span: b[r] holds B_{s-k+r, k}.
  double b[4] = {1.0, 0.0, 0.0, 0.0};
  double prev[4] = {0.0, 0.0, 0.0, 0.0};
  const int top = deriv ? 2 : 3;
  for (int k = 1; k <= top; ++k) {
    double next[4] = {0.0, 0.0, 0.0, 0.0};
    for (int r = 0; r <= k; ++r) {
      const std::size_t i = s - static_cast<std::size_t>(k) + static_cast<std::size_t>(r);
      double v = 0.0;
      if (r > 0) {
        const double den = knots_[i + static_cast<std::size_t>(k)] - knots_[i];
        if (den > 0) v += (x - knots_[i]) / den * b[r - 1];
      }
      if (r < k) {
        const double den = knots_[i + static_cast<std::size_t>(k) + 1] - knots_[i + 1];
        if (den > 0) v += (knots_[i + static_cast<std::size_t>(k) + 1] - x) / den * b[r];
      }
      next[r] = v;
    }
    std::copy(next, next + 4, b);
  }
  std::fill(out, out + nf, 0.0);
  if (!deriv) {
    for (int r = 0; r <= 3; ++r) out[s - 3 + static_cast<std::size_t>(r)] = b[r];
    return;
  }
  // b holds degree-2 values B_{s-2+r, 2}; B'_{i,3} = 3 B_{i,2}/(t_{i+3}-t_i) - 3 B_{i+1,2}/(t_{i+4}-t_{i+1}).
  std::copy(b, b + 4, prev);
  for (int r = 0; r <= 3; ++r) {
    const std::size_t i = s - 3 + static_cast<std::size_t>(r);
    double v = 0.0;
    if (r >= 1) {
      const double den = knots_[i + 3] - knots_[i];
      if (den > 0) v += 3.0 * prev[r - 1] / den;
    }
    if (r <= 2) {
      const double den = knots_[i + 4] - knots_[i + 1];
      if (den > 0) v -= 3.0 * prev[r] / den;
    }
    out[i] = v;
  }
}

Matrix BSplineBasis::evaluate(const Vector& x) const {
  const std::size_t nf = num_functions();
  Matrix out(x.size(), static_cast<Eigen::Index>(nf - 1));
  std::vector<double> row(nf);
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    eval_point(x(n), false, row.data());
    for (std::size_t c = 1; c < nf; ++c) out(n, static_cast<Eigen::Index>(c - 1)) = row[c];
  }
  return out;
}

Matrix BSplineBasis::derivative(const Vector& x) const {
  const std::size_t nf = num_functions();
  Matrix out(x.size(), static_cast<Eigen::Index>(nf - 1));
  std::vector<double> row(nf);
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const bool inside = x(n) >= lo_ && x(n) <= hi_;
    eval_point(x(n), true, row.data());
    for (std::size_t c = 1; c < nf; ++c) out(n, static_cast<Eigen::Index>(c - 1)) = inside ? row[c] : 0.0;
  }
  return out;
}

}  // namespace fcausal
