#include <algorithm>
#include <cmath>

#include "estimator_util.hpp"
#include "fcausal/error.hpp"
#include "fcausal/log.hpp"
#include "fcausal/parallel.hpp"

namespace fcausal {

namespace {

// Columns of m (d x R) picked by row index, returned as R x k.
Matrix pick_rows_t(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(m.cols(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.row(rows[k]).transpose();
  return out;
}

struct PenalizedFit {
  double intercept = 0.0;
  Vector coef;
  Vector resid;
  double dof = 0.0;  // residual degrees of freedom, R - tr(H)
};

// Least squares of y on [1, design] with a per-column diagonal penalty.
PenalizedFit penalized_fit(const Matrix& design, const Vector& y, const Vector& penalty) {
  PenalizedFit out;
  const double n = static_cast<double>(y.size());
  const Eigen::RowVectorXd xm = design.colwise().mean();
  const Matrix xc = design.rowwise() - xm;
  const double ym = y.mean();
  Matrix gram = xc.transpose() * xc;
  const Matrix raw_gram = gram;
  gram.diagonal() += penalty;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gram);
  out.coef = cod.solve(xc.transpose() * (y.array() - ym).matrix());
  out.intercept = ym - xm.dot(out.coef);
  out.resid = (y.array() - ym).matrix() - xc * out.coef;
  const double hat_trace = (cod.solve(raw_gram)).trace() + 1.0;
  out.dof = n - hat_trace;
  return out;
}

struct StepOne {
  Matrix c_off;  // d x d, filled off-neighborhood
  Matrix resid;  // R x d
  Vector dof;    // per unit
  int reduced_units = 0;
};

// Per-unit regressions of Y_i on its own exposures, covariates and the
// off-neighborhood exposures. When the off block is too wide for the replicate
// count, its coefficients are restricted to the span of Lambda_D^{-1} B over
// the off rows, which is where the bias matrix rows live under the exposure
// factor model.
StepOne step_one(const PanelData& panel, const Matrix& d_tilde, const NeighborhoodSpec& nb, const LearnerSpec& learner,
                 const FactorModel& exposure) {
  const int d = panel.rows();
  const int r = panel.replicates();
  StepOne s;
  s.c_off = Matrix::Zero(d, d);
  s.resid = Matrix::Zero(r, d);
  s.dof = Vector::Zero(d);
  const BoolMatrix mask = nb.off_mask();
  const Matrix w = exposure.uniquenesses.cwiseInverse().asDiagonal() * exposure.loadings;
  for (int i = 0; i < d; ++i) {
    const auto& own = nb.members[static_cast<std::size_t>(i)];
    std::vector<int> off;
    for (int j = 0; j < d; ++j)
      if (mask(i, j)) off.push_back(j);

    const Matrix own_raw = pick_rows_t(panel.exposures(), own);
    const Matrix own_f = FeatureMap(learner, own_raw).transform(own_raw);
    const Matrix x_raw = detail::row_feature_matrix(panel, i);
    const Matrix x_f = x_raw.cols() ? FeatureMap(learner, x_raw).transform(x_raw) : Matrix(r, 0);
    const Matrix off_d = pick_rows_t(d_tilde, off);
    const bool reduced = static_cast<double>(off_d.cols()) > 0.5 * r && off_d.cols() > w.cols();
    Matrix w_off;
    if (reduced) {
      w_off.resize(static_cast<Eigen::Index>(off.size()), w.cols());
      for (std::size_t k = 0; k < off.size(); ++k) w_off.row(static_cast<Eigen::Index>(k)) = w.row(off[k]);
      ++s.reduced_units;
    }
    const Matrix off_cols = reduced ? Matrix(off_d * w_off) : off_d;

    Matrix design(r, own_f.cols() + x_f.cols() + off_cols.cols());
    design << own_f, x_f, off_cols;
    const Eigen::Index n_nuis = own_f.cols() + x_f.cols();
    Vector penalty = Vector::Zero(design.cols());
    penalty.head(n_nuis).setConstant(learner_penalty(learner, design.leftCols(n_nuis)));
    const PenalizedFit fit = penalized_fit(design, panel.outcomes().row(i).transpose(), penalty);
    const Vector theta = fit.coef.tail(off_cols.cols());
    const Vector c = reduced ? Vector(w_off * theta) : theta;
    for (std::size_t k = 0; k < off.size(); ++k) s.c_off(i, off[k]) = c(static_cast<Eigen::Index>(k));
    s.resid.col(i) = fit.resid;
    s.dof(i) = fit.dof;
  }
  return s;
}

}  // namespace

MomentIdentification identify_from_moments(const Matrix& sigma_d, const Matrix& sigma_y_given_d, const Matrix& a,
                                           const NeighborhoodSpec& neighborhoods, int rank,
                                           const ProcrustesOptions& opts, NoiseMode noise) {
  const double n_obs = 1.0;
  const FactorModel exposure = fit_factor_model_cov(sigma_d, n_obs, rank, noise);
  const FactorModel outcome = fit_factor_model_cov(sigma_y_given_d, n_obs, rank, noise);
  MomentIdentification out;
  out.bias_model = fit_bias_model(exposure, outcome, a, neighborhoods, opts);
  out.c = out.bias_model.bias_matrix;
  out.causal = Matrix::Zero(a.rows(), a.cols());
  for (int i = 0; i < neighborhoods.size(); ++i)
    for (int j : neighborhoods.members[static_cast<std::size_t>(i)]) out.causal(i, j) = a(i, j) - out.c(i, j);
  return out;
}

EffectEstimate fc_three_step(const PanelData& input, const EstimatorConfig& config) {
  PanelData panel = input;
  if (config.method == Method::FCplusDML) {
    const DmlResiduals res = dml_residualize(input, config.learner, config.folds, config.seed);
    panel = input.with_values(res.d_resid, res.y_resid, {});
  }
  const int d = panel.rows();
  const int r = panel.replicates();
  const int m = config.rank;
  if (r < 3) throw Error(ErrorKind::InsufficientReplicates, "factor-confounding fit needs at least 3 replicates");
  const NeighborhoodSpec nb = detail::effective_neighborhoods(config, d);

  EffectEstimate est;
  est.method = config.method;
  est.coef_names = detail::coefficient_names(nb);

  // Exposure residuals after the observed covariates.
  const Matrix d_tilde = partial_out_covariates(panel, panel.exposures(), config.learner);
  int x_dim = 0;
  if (d > 0) {
    const Matrix x0 = detail::row_feature_matrix(panel, 0);
    x_dim = x0.cols() ? FeatureMap(config.learner, x0).output_dim() : 0;
  }

  const double d_dof = std::max(1.0, static_cast<double>(r - 1 - x_dim));
  const Matrix sd = symmetrize(d_tilde * d_tilde.transpose() / d_dof);
  const FactorModel exposure = fit_factor_model_cov(sd, r, m, config.noise);

  // Step I: off-neighborhood regression coefficients and residuals.
  const StepOne s1 = step_one(panel, d_tilde, nb, config.learner, exposure);
  if ((s1.dof.array() <= 0.5).any()) {
    throw Error(ErrorKind::InsufficientReplicates, "Step I regressions leave no residual degrees of freedom");
  }

  // Step II: factor models, rotation, completed bias matrix.
  const Vector scale = s1.dof.cwiseSqrt().cwiseInverse();
  const Matrix sy = symmetrize(scale.asDiagonal() * (s1.resid.transpose() * s1.resid) * scale.asDiagonal());
  const FactorModel outcome = fit_factor_model_cov(sy, r, m, config.noise);
  ProcrustesOptions popts;
  popts.n_init = config.n_init;
  popts.seed = config.seed;
  BiasModel bm = fit_bias_model(exposure, outcome, s1.c_off, nb, popts);

  // Step III: debias and refit.
  const Matrix y_dag = panel.outcomes() - bm.bias_matrix * d_tilde;
  const Matrix y_res = partial_out_covariates(panel, y_dag, config.learner);
  const std::vector<Matrix> regs = detail::exposure_regressors(d_tilde, nb);
  est.beta = detail::pooled_slopes(regs, y_res);

  if (!config.heterogeneous) {
    detail::finalize_pooled(est, panel, config);
  } else {
    est.unit_beta = Vector::Zero(d);
    est.curves.resize(static_cast<std::size_t>(d));
    est.curve_samples.resize(static_cast<std::size_t>(d));
    const int df = config.learner.df;
    const Matrix dbar = nb.trivial() ? Matrix() : nb.neighbor_mean(d_tilde);
    for (int i = 0; i < d; ++i) {
      const Vector di = panel.exposures().row(i).transpose();
      const Vector dti = d_tilde.row(i).transpose();
      est.unit_beta(i) = dti.dot(y_res.row(i).transpose()) / dti.squaredNorm();
      est.curve_samples[static_cast<std::size_t>(i)] = di;
      if (config.learner.kind != LearnerKind::SplineAdditive) {
        est.curves[static_cast<std::size_t>(i)] = DoseCurve::linear(est.unit_beta(i));
        continue;
      }

      const BSplineBasis basis(di, df);
      const Matrix g_f = basis.evaluate(di);
      const Matrix x_raw = detail::row_feature_matrix(panel, i);
      const Matrix x_f = x_raw.cols() ? FeatureMap(config.learner, x_raw).transform(x_raw) : Matrix(r, 0);
      Matrix design(r, g_f.cols() + x_f.cols() + (nb.trivial() ? 0 : 1));
      design.leftCols(g_f.cols()) = g_f;
      design.middleCols(g_f.cols(), x_f.cols()) = x_f;
      if (!nb.trivial()) design.rightCols(1) = dbar.row(i).transpose();
      const double pen = learner_penalty(LearnerSpec::spline(df), design);
      auto [b0, coef] = fit_with_intercept(design, y_dag.row(i).transpose(), pen);
      est.curves[static_cast<std::size_t>(i)] = DoseCurve::spline(basis, coef.head(g_f.cols()));
    }
    est.summary = average_summaries(est.curves, est.curve_samples, config.shifts);
  }

  est.diagnostics.procrustes_residual = bm.procrustes.residual;
  est.diagnostics.identified = bm.procrustes.identified;
  est.diagnostics.id_check_passed = bm.id_check.spanning_ok;
  est.diagnostics.reduced_off_block = s1.reduced_units > 0;
  est.diagnostics.converged = exposure.converged && outcome.converged;
  if (s1.reduced_units > 0) {
    est.diagnostics.notes.push_back("factor-restricted off-neighborhood coefficients for " +
                                    std::to_string(s1.reduced_units) + " units");
  }
  if (!bm.id_check.spanning_ok) est.diagnostics.notes.push_back("identification check failed; see partial-ID bounds");
  if (!bm.procrustes.identified) est.diagnostics.notes.push_back("masked Procrustes design is degenerate");
  est.bias_model = std::move(bm);
  return est;
}

}  // namespace fcausal
