#include <algorithm>
#include <numeric>

#include "estimator_util.hpp"
#include "fcausal/error.hpp"
#include "fcausal/panel_io.hpp"
#include "fcausal/random.hpp"

namespace fcausal {

std::string to_string(Method m) {
  switch (m) {
    case Method::SingleDML: return "single-dml";
    case Method::MultiDML: return "multi-dml";
    case Method::StackedDML: return "stacked-dml";
    case Method::NaiveDML: return "dml-nuc";
    case Method::FC: return "fc";
    case Method::FCplusDML: return "fc+dml";
    case Method::IFE: return "ife";
    case Method::IFEplusDML: return "ife+dml";
  }
  return "fc";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::SingleDML, Method::MultiDML, Method::StackedDML, Method::NaiveDML, Method::FC,
                   Method::FCplusDML, Method::IFE, Method::IFEplusDML}) {
    if (s == to_string(m)) return m;
  }
  if (s == "nuc" || s == "naive-dml") return Method::NaiveDML;
  throw Error(ErrorKind::InvalidArgument,
              "unknown method '" + s +
                  "' (expected single-dml, multi-dml, stacked-dml, dml-nuc, fc, fc+dml, ife, ife+dml)");
}

void EstimatorConfig::validate(int rows) const {
  if (folds < 2) throw Error(ErrorKind::InvalidArgument, "folds must be at least 2");
  if (rank < 0) throw Error(ErrorKind::InvalidArgument, "rank must be nonnegative");
  if (bootstrap_reps < 0) throw Error(ErrorKind::InvalidArgument, "bootstrap reps must be nonnegative");
  if (n_init < 0) throw Error(ErrorKind::InvalidArgument, "n_init must be nonnegative");
  if (!neighborhoods.members.empty() && neighborhoods.size() != rows) {
    throw Error(ErrorKind::InvalidArgument, "neighborhoods cover " + std::to_string(neighborhoods.size()) +
                                                " rows but the panel has " + std::to_string(rows));
  }
  const bool fc = method == Method::FC || method == Method::FCplusDML;
  if (fc && rank < 1) throw Error(ErrorKind::InvalidArgument, "factor-confounding estimators need rank >= 1");
}

std::string ate_name(double shift) { return "ate(" + format_double(shift) + ")"; }

std::map<std::string, double> EffectEstimate::scalars() const {
  std::map<std::string, double> out;
  for (std::size_t k = 0; k < coef_names.size(); ++k) out[coef_names[k]] = beta(static_cast<Eigen::Index>(k));
  out["acd"] = summary.acd;
  for (const auto& [shift, v] : summary.ate) out[ate_name(shift)] = v;
  return out;
}

namespace detail {

Matrix row_feature_matrix(const PanelData& panel, int row) {
  const int r = panel.replicates();
  const bool add_coords = panel.orientation() == Orientation::ReplicateOverSpace;
  const auto pc = add_coords ? panel.coords().cols() : 0;
  Matrix f(r, panel.num_covariates() + pc);
  for (int k = 0; k < panel.num_covariates(); ++k) f.col(k) = panel.covariates()[static_cast<std::size_t>(k)].row(row).transpose();
  if (add_coords) f.rightCols(pc) = panel.coords();
  return f;
}

NeighborhoodSpec effective_neighborhoods(const EstimatorConfig& config, int rows) {
  return config.neighborhoods.members.empty() ? no_neighborhoods(rows) : config.neighborhoods;
}

std::vector<Matrix> exposure_regressors(const Matrix& d, const NeighborhoodSpec& nb) {
  std::vector<Matrix> out{d};
  if (!nb.trivial()) out.push_back(nb.neighbor_mean(d));
  return out;
}

std::vector<std::string> coefficient_names(const NeighborhoodSpec& nb) {
  if (nb.trivial()) return {"beta"};
  return {"beta1", "beta2"};
}

Vector pooled_slopes(const std::vector<Matrix>& regressors, const Matrix& y) {
  const auto k = static_cast<Eigen::Index>(regressors.size());
  Matrix g(k, k);
  Vector h(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    h(a) = (regressors[static_cast<std::size_t>(a)].array() * y.array()).sum();
    for (Eigen::Index b = 0; b <= a; ++b) {
      g(a, b) = g(b, a) =
          (regressors[static_cast<std::size_t>(a)].array() * regressors[static_cast<std::size_t>(b)].array()).sum();
    }
  }
  Eigen::LDLT<Matrix> ldlt(g);
  if (ldlt.info() != Eigen::Success || !(g.diagonal().array() > 0).all()) {
    throw Error(ErrorKind::NumericalFailure, "pooled regression is singular");
  }
  return ldlt.solve(h);
}

std::vector<int> fold_labels(int n, int folds, std::uint64_t seed) {
  if (n < 2 * folds) {
    throw Error(ErrorKind::FoldTooSmall, std::to_string(n) + " replicates cannot fill " + std::to_string(folds) +
                                             " folds with at least 2 each");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int pos = 0; pos < n; ++pos) labels[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos % folds;
  return labels;
}

Matrix crossfit_rows(const PanelData& panel, const Matrix& values, const LearnerSpec& learner,
                     const std::vector<int>& labels, int folds) {
  const int d = static_cast<int>(values.rows());
  const int r = static_cast<int>(values.cols());
  Matrix resid(d, r);
  for (int i = 0; i < d; ++i) {
    const Matrix f = row_feature_matrix(panel, i);
    const Vector v = values.row(i).transpose();
    if (f.cols() == 0) {
      resid.row(i) = (v.array() - v.mean()).matrix().transpose();
      continue;
    }
    for (int k = 0; k < folds; ++k) {
      std::vector<int> train, test;
      for (int t = 0; t < r; ++t) (labels[static_cast<std::size_t>(t)] == k ? test : train).push_back(t);
      Matrix ftr(static_cast<Eigen::Index>(train.size()), f.cols());
      Vector vtr(static_cast<Eigen::Index>(train.size()));
      for (std::size_t n = 0; n < train.size(); ++n) {
        ftr.row(static_cast<Eigen::Index>(n)) = f.row(train[n]);
        vtr(static_cast<Eigen::Index>(n)) = v(train[n]);
      }
      Matrix fte(static_cast<Eigen::Index>(test.size()), f.cols());
      for (std::size_t n = 0; n < test.size(); ++n) fte.row(static_cast<Eigen::Index>(n)) = f.row(test[n]);
      const FittedLearner fit(learner, ftr, vtr);
      const Vector pred = fit.predict(fte);
      for (std::size_t n = 0; n < test.size(); ++n) resid(i, test[n]) = v(test[n]) - pred(static_cast<Eigen::Index>(n));
    }
    resid.row(i).array() -= resid.row(i).mean();
  }
  return resid;
}

void finalize_pooled(EffectEstimate& est, const PanelData& panel, const EstimatorConfig& config) {
  est.curves = {DoseCurve::linear(est.beta(0))};
  const Matrix& d = panel.exposures();
  est.curve_samples = {Eigen::Map<const Vector>(d.data(), d.size())};
  est.summary = dose_response_summaries(est.curves[0], est.curve_samples[0], config.shifts);
}

}  // namespace detail

EffectEstimate estimate_point(const PanelData& panel, const EstimatorConfig& config) {
  config.validate(panel.rows());
  switch (config.method) {
    case Method::SingleDML:
    case Method::MultiDML:
    case Method::StackedDML:
    case Method::NaiveDML:
      return dml_baseline(panel, config);
    case Method::IFE:
    case Method::IFEplusDML:
      return ife_fit(panel, config);
    case Method::FC:
    case Method::FCplusDML:
      return fc_three_step(panel, config);
  }
  throw Error(ErrorKind::InvalidArgument, "unhandled method");
}

EffectEstimate estimate(const PanelData& panel, const EstimatorConfig& config) {
  EffectEstimate est = estimate_point(panel, config);
  if (config.bootstrap_reps > 0) {
    BootstrapResult boot = bootstrap_infer(panel, config, est, config.bootstrap_reps, config.seed);
    est.intervals = std::move(boot.intervals);
    est.curve_lo = std::move(boot.curve_lo);
    est.curve_hi = std::move(boot.curve_hi);
    est.diagnostics.bootstrap_failures = boot.failures;
    est.diagnostics.bootstrap_reps = boot.reps;
  }
  return est;
}

}  // namespace fcausal
