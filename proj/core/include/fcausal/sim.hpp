#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcausal/panel.hpp"
#include "fcausal/random.hpp"

namespace fcausal {

enum class ScenarioKind { LinearFixedSpatial, LinearSpatiotemporal, IFEGrid, Interference, NonlinearHetero, Misspec };
enum class NoiseDist { Gaussian, Laplace, StudentT, NormalMixture, SkewNormal, Heteroskedastic };

std::string to_string(ScenarioKind k);
std::string to_string(NoiseDist d);
NoiseDist noise_dist_from_string(const std::string& s);

/// Shape constants of the linear designs (loadings, mean fields, covariate
/// effects). Loadings are a common direction plus column-centered Gaussian
/// spread; Y uses Gamma Sigma_{U|D}^{-1/2} as its confounder coefficient.
struct DesignConstants {
  double exposure_common = 1.0;
  double exposure_spread = 1.0;
  double outcome_common = 0.2;
  double outcome_spread = 0.6;
  double field_amplitude = 1.0;     // spatial mean fields f(S), h(S)
  double temporal_amplitude = 1.0;  // spatiotemporal variant only
  double temporal_period = 25.0;
  double covariate_base_d = 0.5;    // common covariate effect on D
  double covariate_base_y = 0.3;    // common covariate effect on Y
  double covariate_het_d = 1.0;     // spatially varying part on D
  double covariate_het_y = 0.75;    // spatially varying part on Y
  double intercept = 0.0;
};

struct SimScenario {
  ScenarioKind kind = ScenarioKind::LinearFixedSpatial;
  int n = 50;
  int t = 100;
  int m = 3;
  int p = 2;
  double sigma_xi = 1.0;
  double sigma_eps = 1.0;
  double beta = 1.0;
  double beta2 = 0.5;  // interference spillover
  double rho = 0.0;    // IFE grid loading correlation
  int k_neighbors = 3;
  NoiseDist dist = NoiseDist::Gaussian;
  DesignConstants constants;

  static SimScenario linear_fixed();
  static SimScenario linear_spatiotemporal();
  static SimScenario ife_grid(double rho, int t);
  static SimScenario interference();
  static SimScenario nonlinear_hetero();
  static SimScenario misspec(NoiseDist dist);

  /// Short name, e.g. "linear-fixed", "misspec-laplace".
  std::string name() const;
  void validate() const;
};

/// Parses "linear-fixed", "linear-spatiotemporal", "ife-grid", "interference",
/// "nonlinear-hetero", "misspec-<dist>".
SimScenario scenario_from_name(const std::string& name);

struct Truth {
  std::vector<std::string> names;
  Vector beta;
  bool has_curves = false;  // per-unit curves (nonlinear design)
};

struct SimDraw {
  SimScenario scenario;
  PanelData panel;
  NeighborhoodSpec neighborhoods;
  Truth truth;
  Matrix latent;          // R x M confounder draws, replicate order
  Matrix oracle_extra;    // R x q known deterministic replicate features
  Matrix exposure_loadings;  // B, N x M
  Matrix outcome_loadings;   // Gamma (the Cov(Y|D) factor), N x M
  Matrix confounder_effect;  // coefficient of U in Y, N x M
  Vector lambda_d;
  Vector lambda_y;
};

SimDraw generate(const SimScenario& scenario, std::uint64_t seed);
SimDraw gen_linear(const SimScenario& scenario, std::uint64_t seed);
SimDraw gen_ife_grid(const SimScenario& scenario, std::uint64_t seed);
SimDraw gen_interference(const SimScenario& scenario, std::uint64_t seed);
SimDraw gen_nonlinear_hetero(const SimScenario& scenario, std::uint64_t seed);
SimDraw gen_misspec(const SimScenario& scenario, std::uint64_t seed);

/// One standardized (mean 0, variance 1) draw from `dist`; Heteroskedastic
/// draws are Gaussian here and rescaled by the generator.
double draw_noise(Rng& rng, NoiseDist dist);

/// True dose-response curve of unit i in the nonlinear design.
double nonlinear_truth(int unit, double d);

/// Fixed parameter matrices of the nonlinear design (5 x 2 each).
Matrix nonlinear_alpha();
Matrix nonlinear_b();
Matrix nonlinear_gamma();

/// Regression that adjusts for the true latent draws: per-unit partialling of
/// [1, X, U, extras] from Y, D (and the neighbor mean), then pooled slopes.
Vector oracle_estimate(const SimDraw& draw);

}  // namespace fcausal
