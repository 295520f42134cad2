#include <cmath>

#include "estimator_util.hpp"
#include "fcausal/error.hpp"
#include "fcausal/log.hpp"

namespace fcausal {

namespace {

// Best rank-m approximation of w (d x R).
Matrix low_rank(const Matrix& w, int m) {
  if (m == 0) return Matrix::Zero(w.rows(), w.cols());
  if (w.rows() <= w.cols()) {
    const SymEig eig = sym_eig(w * w.transpose());
    const Matrix f = eig.vectors.leftCols(m);
    return f * (f.transpose() * w);
  }
  const SymEig eig = sym_eig(w.transpose() * w);
  const Matrix f = eig.vectors.leftCols(m);
  return (w * f) * f.transpose();
}

Matrix centered(const Matrix& m) { return (m.array() - m.mean()).matrix(); }

}  // namespace

EffectEstimate ife_fit(const PanelData& input, const EstimatorConfig& config) {
  PanelData panel = input;
  if (config.method == Method::IFEplusDML) {
    const DmlResiduals res = dml_residualize(input, config.learner, config.folds, config.seed);
    panel = input.with_values(res.d_resid, res.y_resid, {});
  }
  const int d = panel.rows();
  const int r = panel.replicates();
  const int m = config.rank;
  if (m >= std::min(d, r)) {
    throw Error(ErrorKind::RankTooLarge, "IFE rank must be below min(rows, replicates)");
  }
  const NeighborhoodSpec nb = detail::effective_neighborhoods(config, d);

  // Grand-mean centering stands in for the intercept.
  std::vector<Matrix> z;
  for (const auto& x : detail::exposure_regressors(panel.exposures(), nb)) z.push_back(centered(x));
  const auto n_effects = static_cast<Eigen::Index>(z.size());
  for (const auto& x : panel.covariates()) z.push_back(centered(x));
  const Matrix y = centered(panel.outcomes());

  Vector b = detail::pooled_slopes(z, y);
  auto fitted = [&](const Vector& coef) {
    Matrix out = Matrix::Zero(d, r);
    for (std::size_t k = 0; k < z.size(); ++k) out += coef(static_cast<Eigen::Index>(k)) * z[k];
    return out;
  };

  EffectEstimate est;
  est.method = config.method;
  est.coef_names = detail::coefficient_names(nb);
  bool converged = true;
  int it = 0;
  if (m > 0) {
    converged = false;
    for (; it < config.max_iter; ++it) {
      const Matrix factors = low_rank(y - fitted(b), m);
      const Vector next = detail::pooled_slopes(z, y - factors);
      const double change = (next.head(n_effects) - b.head(n_effects)).cwiseAbs().maxCoeff();
      b = next;
      if (change < config.tol) {
        converged = true;
        ++it;
        break;
      }
    }
    if (!converged) log(LogLevel::Warn, "IFE did not converge in " + std::to_string(it) + " iterations");
  }
  est.beta = b.head(n_effects);
  est.diagnostics.converged = converged;
  est.diagnostics.iterations = it;
  detail::finalize_pooled(est, panel, config);
  return est;
}

}  // namespace fcausal
