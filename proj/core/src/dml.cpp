#include "estimator_util.hpp"
#include "fcausal/error.hpp"
#include "fcausal/random.hpp"

namespace fcausal {

using detail::coefficient_names;
using detail::crossfit_rows;
using detail::effective_neighborhoods;
using detail::exposure_regressors;
using detail::fold_labels;
using detail::pooled_slopes;

DmlResiduals dml_residualize(const PanelData& panel, const LearnerSpec& learner, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorKind::InvalidArgument, "folds must be at least 2");
  const auto labels = fold_labels(panel.replicates(), folds, seed);
  DmlResiduals out;
  out.d_resid = crossfit_rows(panel, panel.exposures(), learner, labels, folds);
  out.y_resid = crossfit_rows(panel, panel.outcomes(), learner, labels, folds);
  out.d_fitted = panel.exposures() - out.d_resid;
  out.y_fitted = panel.outcomes() - out.y_resid;
  return out;
}

Matrix partial_out_covariates(const PanelData& panel, const Matrix& values, const LearnerSpec& learner) {
  Matrix out(values.rows(), values.cols());
  for (int i = 0; i < values.rows(); ++i) {
    const Matrix f = detail::row_feature_matrix(panel, i);
    const Vector v = values.row(i).transpose();
    if (f.cols() == 0) {
      out.row(i) = (v.array() - v.mean()).matrix().transpose();
      continue;
    }
    const FittedLearner fit(learner, f, v);
    Vector r = v - fit.predict(f);
    r.array() -= r.mean();
    out.row(i) = r.transpose();
  }
  return out;
}

namespace {

// One partial-linear DML fit per replicate over the cross-section, features
// (X, coordinates); slopes averaged over replicates.
Vector single_dml(const PanelData& panel, const std::vector<Matrix>& treatments, const EstimatorConfig& cfg) {
  const int d = panel.rows();
  const int r = panel.replicates();
  const bool units_are_rows = panel.orientation() == Orientation::ReplicateOverTime;
  const Matrix row_coords = units_are_rows ? panel.coords() : Matrix(d, 0);
  const auto p = panel.num_covariates();
  const auto k = static_cast<Eigen::Index>(treatments.size());
  const auto labels = fold_labels(d, cfg.folds, derive_seed(cfg.seed, 0x51u));
  Vector acc = Vector::Zero(k);
  for (int t = 0; t < r; ++t) {
    Matrix f(d, p + row_coords.cols());
    for (int c = 0; c < p; ++c) f.col(c) = panel.covariates()[static_cast<std::size_t>(c)].col(t);
    f.rightCols(row_coords.cols()) = row_coords;

    auto resid = [&](const Vector& v) {
      Vector out(d);
      if (f.cols() == 0) return Vector((v.array() - v.mean()).matrix());
      for (int fold = 0; fold < cfg.folds; ++fold) {
        std::vector<int> train, test;
        for (int i = 0; i < d; ++i) (labels[static_cast<std::size_t>(i)] == fold ? test : train).push_back(i);
        Matrix ftr(static_cast<Eigen::Index>(train.size()), f.cols());
        Vector vtr(static_cast<Eigen::Index>(train.size()));
        for (std::size_t n = 0; n < train.size(); ++n) {
          ftr.row(static_cast<Eigen::Index>(n)) = f.row(train[n]);
          vtr(static_cast<Eigen::Index>(n)) = v(train[n]);
        }
        const FittedLearner fit(cfg.learner, ftr, vtr);
        for (int i : test) out(i) = v(i) - fit.predict(f.row(i))(0);
      }
      return out;
    };
    std::vector<Matrix> dt;
    for (const auto& tr : treatments) dt.push_back(resid(tr.col(t)));
    const Matrix yt = resid(panel.outcomes().col(t));
    acc += pooled_slopes(dt, yt);
  }
  return acc / r;
}

// One nuisance model over all cells with features (X, unit coordinates);
// folds over replicates.
Vector stacked_dml(const PanelData& panel, const std::vector<Matrix>& treatments, const EstimatorConfig& cfg) {
  const int d = panel.rows();
  const int r = panel.replicates();
  const int p = panel.num_covariates();
  const bool units_are_rows = panel.orientation() == Orientation::ReplicateOverTime;
  const auto ps = panel.coords().cols();
  const auto labels = fold_labels(r, cfg.folds, derive_seed(cfg.seed, 0x57u));
  const Eigen::Index cells = static_cast<Eigen::Index>(d) * r;

  Matrix f(cells, p + ps);
  auto cell = [d](int i, int t) { return static_cast<Eigen::Index>(t) * d + i; };
  for (int t = 0; t < r; ++t)
    for (int i = 0; i < d; ++i) {
      for (int c = 0; c < p; ++c) f(cell(i, t), c) = panel.covariates()[static_cast<std::size_t>(c)](i, t);
      f.row(cell(i, t)).tail(ps) = panel.coords().row(units_are_rows ? i : t);
    }

  auto resid = [&](const Matrix& m) {
    const Eigen::Map<const Vector> v(m.data(), m.size());
    Vector out(cells);
    if (f.cols() == 0) return Matrix((m.array() - m.mean()).matrix());
    for (int fold = 0; fold < cfg.folds; ++fold) {
      std::vector<Eigen::Index> train, test;
      for (int t = 0; t < r; ++t)
        for (int i = 0; i < d; ++i) (labels[static_cast<std::size_t>(t)] == fold ? test : train).push_back(cell(i, t));
      Matrix ftr(static_cast<Eigen::Index>(train.size()), f.cols());
      Vector vtr(static_cast<Eigen::Index>(train.size()));
      for (std::size_t n = 0; n < train.size(); ++n) {
        ftr.row(static_cast<Eigen::Index>(n)) = f.row(train[n]);
        vtr(static_cast<Eigen::Index>(n)) = v(train[n]);
      }
      Matrix fte(static_cast<Eigen::Index>(test.size()), f.cols());
      for (std::size_t n = 0; n < test.size(); ++n) fte.row(static_cast<Eigen::Index>(n)) = f.row(test[n]);
      const FittedLearner fit(cfg.learner, ftr, vtr);
      const Vector pred = fit.predict(fte);
      for (std::size_t n = 0; n < test.size(); ++n) out(test[n]) = v(test[n]) - pred(static_cast<Eigen::Index>(n));
    }
    return Matrix(Eigen::Map<const Matrix>(out.data(), d, r));
  };
  std::vector<Matrix> dt;
  for (const auto& tr : treatments) dt.push_back(resid(tr));
  return pooled_slopes(dt, resid(panel.outcomes()));
}

}  // namespace

EffectEstimate dml_baseline(const PanelData& panel, const EstimatorConfig& config) {
  const NeighborhoodSpec nb = effective_neighborhoods(config, panel.rows());
  const std::vector<Matrix> treatments = exposure_regressors(panel.exposures(), nb);
  EffectEstimate est;
  est.method = config.method;
  est.coef_names = coefficient_names(nb);

  switch (config.method) {
    case Method::SingleDML:
      est.beta = single_dml(panel, treatments, config);
      break;
    case Method::StackedDML:
      est.beta = stacked_dml(panel, treatments, config);
      break;
    case Method::MultiDML:
    case Method::NaiveDML: {
      const auto labels = fold_labels(panel.replicates(), config.folds, config.seed);
      std::vector<Matrix> dt;
      for (const auto& tr : treatments) dt.push_back(crossfit_rows(panel, tr, config.learner, labels, config.folds));
      Matrix yt = crossfit_rows(panel, panel.outcomes(), config.learner, labels, config.folds);
      if (config.method == Method::MultiDML) {
        // Location-indexed nuisances plus replicate effects.
        for (auto& m : dt) m.rowwise() -= m.colwise().mean();
        yt.rowwise() -= yt.colwise().mean();
      }
      est.beta = pooled_slopes(dt, yt);
      break;
    }
    default:
      throw Error(ErrorKind::InvalidArgument, "dml_baseline called with a non-DML method");
  }
  detail::finalize_pooled(est, panel, config);
  return est;
}

}  // namespace fcausal
