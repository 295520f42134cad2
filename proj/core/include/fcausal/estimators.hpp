#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcausal/bias_engine.hpp"
#include "fcausal/dose_response.hpp"
#include "fcausal/factor_model.hpp"
#include "fcausal/learner.hpp"
#include "fcausal/panel.hpp"

namespace fcausal {

enum class Method { SingleDML, MultiDML, StackedDML, NaiveDML, FC, FCplusDML, IFE, IFEplusDML };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct EstimatorConfig {
  Method method = Method::FC;
  int rank = 3;
  NeighborhoodSpec neighborhoods;  // empty means no interference
  LearnerSpec learner = LearnerSpec::spline(5);
  int folds = 5;
  int n_init = 20;
  int bootstrap_reps = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  bool heterogeneous = false;  // per-unit g_i instead of a pooled slope
  NoiseMode noise = NoiseMode::Diagonal;
  std::vector<double> shifts = {1.0};
  int max_iter = 1000;  // IFE alternations
  double tol = 1e-8;

  void validate(int rows) const;
};

struct EstimateDiagnostics {
  double procrustes_residual = 0.0;
  bool identified = true;
  bool id_check_passed = true;
  bool reduced_off_block = false;  // Step I used factor-restricted off-neighborhood coefficients
  bool converged = true;
  int iterations = 0;
  int bootstrap_failures = 0;
  int bootstrap_reps = 0;
  std::vector<std::string> notes;
};

struct EffectEstimate {
  Method method = Method::FC;
  std::vector<std::string> coef_names;  // "beta" or "beta1", "beta2"
  Vector beta;
  Vector unit_beta;                 // per-unit own slopes in heterogeneous mode
  std::vector<DoseCurve> curves;    // one pooled curve, or one per unit
  std::vector<Vector> curve_samples;
  DoseSummary summary;
  std::map<std::string, Interval> intervals;
  Vector curve_lo;  // pointwise bootstrap band of summary.centered (empty without bootstrap)
  Vector curve_hi;
  std::optional<BiasModel> bias_model;
  EstimateDiagnostics diagnostics;

  double acd() const { return summary.acd; }
  /// Named scalar summaries: the slopes, "acd", and "ate(<shift>)".
  std::map<std::string, double> scalars() const;
};

/// Name used for ATE(shift) scalars, e.g. "ate(1)".
std::string ate_name(double shift);

struct DmlResiduals {
  Matrix d_resid;
  Matrix y_resid;
  Matrix d_fitted;
  Matrix y_fitted;
};

/// Cross-fitted per-row residualization of D and Y on that row's covariates,
/// folds drawn over the replicate axis.
DmlResiduals dml_residualize(const PanelData& panel, const LearnerSpec& learner, int folds, std::uint64_t seed);

/// In-sample per-row residuals of `values` on the row's covariates.
Matrix partial_out_covariates(const PanelData& panel, const Matrix& values, const LearnerSpec& learner);

EffectEstimate dml_baseline(const PanelData& panel, const EstimatorConfig& config);
EffectEstimate ife_fit(const PanelData& panel, const EstimatorConfig& config);
EffectEstimate fc_three_step(const PanelData& panel, const EstimatorConfig& config);

/// Completes the bias matrix from population-level moments: Sigma_D,
/// Cov(Y | D) and the full regression matrix of Y on D.
struct MomentIdentification {
  BiasModel bias_model;
  Matrix c;             // completed bias matrix
  Matrix causal;        // A - C restricted to the neighborhoods (zero elsewhere)
};
MomentIdentification identify_from_moments(const Matrix& sigma_d, const Matrix& sigma_y_given_d, const Matrix& a,
                                           const NeighborhoodSpec& neighborhoods, int rank,
                                           const ProcrustesOptions& opts = {}, NoiseMode noise = NoiseMode::Diagonal);

/// Point estimate without bootstrap.
EffectEstimate estimate_point(const PanelData& panel, const EstimatorConfig& config);

struct BootstrapResult {
  std::map<std::string, Interval> intervals;
  std::map<std::string, std::vector<double>> draws;
  Vector curve_lo;  // pointwise band of the centered curve
  Vector curve_hi;
  int failures = 0;
  int reps = 0;
};

/// Resamples replicate columns with replacement and re-runs the point
/// estimator; 95% percentile intervals.
BootstrapResult bootstrap_infer(const PanelData& panel, const EstimatorConfig& config, const EffectEstimate& point,
                                int reps, std::uint64_t seed);

/// Point estimate plus bootstrap intervals when config.bootstrap_reps > 0.
EffectEstimate estimate(const PanelData& panel, const EstimatorConfig& config);

}  // namespace fcausal
