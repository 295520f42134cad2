#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcausal/numerics.hpp"

namespace fcausal {

enum class NoiseMode { Isotropic, Diagonal };

std::string to_string(NoiseMode m);

struct FactorFitOptions {
  int max_iter = 2000;
  double tol = 1e-8;  // relative log-likelihood change
  std::uint64_t seed = 0;
  bool center = true;
};

/// Gaussian linear factor model x = L u + e, u ~ N(0, I_M), e ~ N(0, diag(psi)).
struct FactorModel {
  Matrix loadings;      // d x M, canonical frame
  Vector uniquenesses;  // d, strictly positive
  NoiseMode noise_mode = NoiseMode::Diagonal;
  int rank = 0;
  double loglik = 0.0;
  bool converged = true;
  int iterations = 0;

  int dim() const { return static_cast<int>(loadings.rows()); }
  Matrix implied_cov() const;
};

/// Gaussian conditional moments of U given the observed vector.
struct PosteriorMoments {
  Matrix mean_operator;  // M x d, B^T Sigma_D^{-1}
  Matrix cov;            // M x M, I - B^T Sigma_D^{-1} B
  Matrix sigma_d;        // d x d, B B^T + Lambda_D
};

/// Counting condition for rank M on d coordinates: (d - M)^2 >= d + M.
bool rank_is_admissible(int d, int m);

/// Fits a rank-M factor model to the rows of `residuals` (R x d).
FactorModel fit_factor_model(const Matrix& residuals, int rank, NoiseMode mode, const FactorFitOptions& opts = {});

/// Same fit from a covariance matrix estimated from `n_obs` replicates.
FactorModel fit_factor_model_cov(const Matrix& cov, double n_obs, int rank, NoiseMode mode,
                                 const FactorFitOptions& opts = {});

/// Rotates loadings so L^T Psi^{-1} L is diagonal descending and each
/// column's largest-magnitude entry is positive.
Matrix canonical_loadings(const Matrix& loadings, const Vector& uniquenesses);

/// Gaussian log-likelihood of `n_obs` replicates with sample covariance `cov`.
double factor_loglik(const Matrix& loadings, const Vector& uniquenesses, const Matrix& cov, double n_obs);

PosteriorMoments posterior_moments(const FactorModel& model);
PosteriorMoments posterior_moments(const Matrix& loadings, const Vector& uniquenesses);

enum class RankMethod { EigenRatio, InfoCriterion, ParallelAnalysis };

std::string to_string(RankMethod m);
RankMethod rank_method_from_string(const std::string& s);

struct RankSelection {
  int rank = 0;
  RankMethod method = RankMethod::EigenRatio;
  Vector eigenvalues;            // sample covariance spectrum, descending
  std::vector<double> scores;    // scores[k-1] for candidate k = 1..max_rank
  std::vector<double> thresholds;  // parallel analysis 95th percentiles
};

/// Chooses the number of factors from the rows of `residuals` (R x d).
RankSelection select_rank(const Matrix& residuals, RankMethod method, int max_rank, std::uint64_t seed = 0,
                          int permutations = 100);

}  // namespace fcausal
