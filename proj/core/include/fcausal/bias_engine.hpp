#pragma once

#include <cstdint>
#include <vector>

#include "fcausal/factor_model.hpp"
#include "fcausal/panel.hpp"

namespace fcausal {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
};

/// R = Sigma_{U|D}^{-1/2} B^T Sigma_D^{-1}, M x d.
Matrix build_r_operator(const FactorModel& exposure_model);
Matrix build_r_operator(const Matrix& loadings, const Vector& uniquenesses);

/// Per-unit interval for the bias of contrast `delta` when the rotation is
/// unknown: +- |gamma_i| |R delta|.
Interval partial_id_interval(const Matrix& gamma, const Matrix& r_operator, int unit, const Vector& delta);

/// gamma_i^T Theta R delta for a given rotation.
double realized_bias(const Matrix& gamma, const Matrix& theta, const Matrix& r_operator, int unit,
                     const Vector& delta);

/// C = gamma Theta R.
Matrix bias_matrix(const Matrix& gamma, const Matrix& theta, const Matrix& r_operator);

struct ProcrustesOptions {
  int n_init = 20;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  int max_iter = 20000;
  int threads = 1;
  double degenerate_tol = 1e-10;  // relative smallest singular value of the masked design
};

struct ProcrustesResult {
  Matrix theta;
  double residual = 0.0;  // sum of squared masked misfits
  bool identified = true;
  double design_condition = 0.0;  // sigma_min / sigma_max of the masked design
  int starts = 0;
};

/// Minimizes sum over masked (i, j) of (gamma_i^T Theta r_j - c_off(i, j))^2
/// over orthogonal Theta. c_off is read only where mask is true.
ProcrustesResult masked_procrustes(const Matrix& gamma, const Matrix& r_operator, const Matrix& c_off,
                                   const BoolMatrix& mask, const ProcrustesOptions& opts = {});

struct IdCheckReport {
  std::vector<int> basis_indices;
  std::vector<bool> row_rank_ok;
  std::vector<double> condition_numbers;  // sigma_min / sigma_max of R restricted to off-neighborhood columns
  bool spanning_ok = false;
  double spanning_condition = 0.0;
  double threshold = 1e-6;
};

IdCheckReport check_identification(const Matrix& gamma, const Matrix& r_operator, const NeighborhoodSpec& neighborhoods,
                                   double threshold = 1e-6);

/// Rank-M bias machinery for one fit.
struct BiasModel {
  Matrix gamma;       // d x M outcome loadings
  Vector lambda_y;    // outcome uniquenesses
  Matrix r_operator;  // M x d
  Matrix sigma_d;     // d x d
  Matrix theta;       // M x M orthogonal
  Matrix bias_matrix; // d x d, off-neighborhood entries overwritten by the supplied estimates
  BoolMatrix mask;    // true off-neighborhood
  ProcrustesResult procrustes;
  IdCheckReport id_check;
};

/// Step II: combines the two factor models with off-neighborhood estimates
/// c_off into a completed bias matrix.
BiasModel fit_bias_model(const FactorModel& exposure_model, const FactorModel& outcome_model, const Matrix& c_off,
                         const NeighborhoodSpec& neighborhoods, const ProcrustesOptions& opts = {});

}  // namespace fcausal
