#include "fcausal/learner.hpp"

#include <charconv>
#include <set>

#include "fcausal/error.hpp"

namespace fcausal {

LearnerSpec learner_from_string(const std::string& s) {
  auto param = [&](const std::string& prefix) { return s.substr(prefix.size()); };
  auto bad = [&] { return Error(ErrorKind::InvalidArgument, "malformed learner '" + s + "'"); };
  if (s == "linear") return LearnerSpec::linear();
  if (s.rfind("ridge:", 0) == 0) {
    double lambda = 0;
    const std::string text = param("ridge:");
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), lambda);
    if (ec != std::errc() || p != text.data() + text.size()) throw bad();
    if (!(lambda >= 0)) throw Error(ErrorKind::InvalidArgument, "ridge lambda must be nonnegative");
    return LearnerSpec::ridge(lambda);
  }
  if (s == "ridge") return LearnerSpec::ridge(1.0);
  if (s.rfind("spline:", 0) == 0) {
    int df = 0;
    const std::string text = param("spline:");
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), df);
    if (ec != std::errc() || p != text.data() + text.size()) throw bad();
    if (df < 3) throw Error(ErrorKind::InvalidArgument, "spline df must be at least 3");
    return LearnerSpec::spline(df);
  }
  if (s == "spline") return LearnerSpec::spline(5);
  throw Error(ErrorKind::InvalidArgument, "unknown learner '" + s + "' (expected linear, ridge:L or spline:DF)");
}

std::string to_string(const LearnerSpec& spec) {
  switch (spec.kind) {
    case LearnerKind::Linear: return "linear";
    case LearnerKind::Ridge: {
      char buf[32];
      auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), spec.lambda);
      return "ridge:" + std::string(buf, p);
    }
    case LearnerKind::SplineAdditive: return "spline:" + std::to_string(spec.df);
  }
  return "linear";
}

FeatureMap::FeatureMap(const LearnerSpec& spec, const Matrix& features)
    : spec_(spec), input_dim_(static_cast<int>(features.cols())) {
  if (spec_.kind != LearnerKind::SplineAdditive) return;
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    std::set<double> distinct;
    for (Eigen::Index r = 0; r < features.rows() && static_cast<int>(distinct.size()) <= spec_.df + 2; ++r) {
      distinct.insert(features(r, c));
    }
    const bool ok = static_cast<int>(distinct.size()) > spec_.df + 2;
    use_basis_.push_back(ok);
    bases_.push_back(ok ? BSplineBasis(features.col(c), spec_.df) : BSplineBasis());
  }
}

int FeatureMap::output_dim() const {
  if (spec_.kind != LearnerKind::SplineAdditive) return input_dim_;
  int n = 0;
  for (bool b : use_basis_) n += b ? spec_.df : 1;
  return n;
}

Matrix FeatureMap::transform(const Matrix& features) const {
  if (features.cols() != input_dim_) throw Error(ErrorKind::InvalidArgument, "feature count changed since fit");
  if (spec_.kind != LearnerKind::SplineAdditive) return features;
  Matrix out(features.rows(), output_dim());
  Eigen::Index at = 0;
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    if (use_basis_[static_cast<std::size_t>(c)]) {
      out.middleCols(at, spec_.df) = bases_[static_cast<std::size_t>(c)].evaluate(features.col(c));
      at += spec_.df;
    } else {
      out.col(at++) = features.col(c);
    }
  }
  return out;
}

double learner_penalty(const LearnerSpec& spec, const Matrix& design) {
  switch (spec.kind) {
    case LearnerKind::Linear: return 0.0;
    case LearnerKind::Ridge: return spec.lambda;
    case LearnerKind::SplineAdditive: {
      if (design.cols() == 0) return 0.0;
      return 1e-8 * design.squaredNorm() / static_cast<double>(design.cols());
    }
  }
  return 0.0;
}

std::pair<double, Vector> fit_with_intercept(const Matrix& design, const Vector& y, double penalty) {
  const double ymean = y.mean();
  if (design.cols() == 0) return {ymean, Vector()};
  const Eigen::RowVectorXd xmean = design.colwise().mean();
  const Matrix xc = design.rowwise() - xmean;
  Vector coef;
  if (penalty > 0) {
    coef = least_squares(xc, (y.array() - ymean).matrix(), Vector::Constant(xc.cols(), penalty));
  } else {
    coef = least_squares(xc, (y.array() - ymean).matrix());
  }
  return {ymean - xmean.dot(coef), coef};
}

FittedLearner::FittedLearner(const LearnerSpec& spec, const Matrix& features, const Vector& y)
    : map_(spec, features) {
  const Matrix design = map_.transform(features);
  auto [b0, coef] = fit_with_intercept(design, y, learner_penalty(spec, design));
  intercept_ = b0;
  coef_ = std::move(coef);
}

Vector FittedLearner::predict(const Matrix& features) const {
  if (coef_.size() == 0) return Vector::Constant(features.rows(), intercept_);
  return (map_.transform(features) * coef_).array() + intercept_;
}

}  // namespace fcausal
