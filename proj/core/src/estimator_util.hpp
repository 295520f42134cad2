#pragma once

// Helpers shared by the estimator translation units.

#include <vector>

#include "fcausal/estimators.hpp"

namespace fcausal::detail {

/// R x q features for row i: the row's covariates, plus spatial coordinates
/// when replicates are units.
Matrix row_feature_matrix(const PanelData& panel, int row);

/// Neighborhoods from the config, or singletons when none were given.
NeighborhoodSpec effective_neighborhoods(const EstimatorConfig& config, int rows);

/// Exposure regressors: D, plus the neighbor mean of D under interference.
std::vector<Matrix> exposure_regressors(const Matrix& d, const NeighborhoodSpec& nb);
std::vector<std::string> coefficient_names(const NeighborhoodSpec& nb);

/// Pooled least squares of y on the regressors over all cells, no intercept.
Vector pooled_slopes(const std::vector<Matrix>& regressors, const Matrix& y);

/// Fold label per index, balanced and shuffled by seed.
std::vector<int> fold_labels(int n, int folds, std::uint64_t seed);

/// Cross-fitted residuals of each row of `values` on row features.
Matrix crossfit_rows(const PanelData& panel, const Matrix& values, const LearnerSpec& learner,
                     const std::vector<int>& labels, int folds);

/// Fills curves and summary for a pooled linear fit (slope = beta(0)).
void finalize_pooled(EffectEstimate& est, const PanelData& panel, const EstimatorConfig& config);

}  // namespace fcausal::detail
