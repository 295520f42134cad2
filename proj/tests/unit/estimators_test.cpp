#include <doctest.h>

#include "fcausal/error.hpp"
#include "fcausal/estimators.hpp"
#include "fcausal/random.hpp"
#include "fcausal/sim.hpp"
#include "oracles.hpp"

using namespace fcausal;

namespace {

// D = B U + xi, Y = beta D + G U + eps with optional covariate effects.
struct Toy {
  PanelData panel;
  Matrix u;
};

Toy toy_panel(int n, int t, int m, double gamma_scale, double noise, std::uint64_t seed, bool covariate = false) {
  std::mt19937_64 gen(seed);
  Matrix b = oracle::random_normal(gen, n, m);
  Matrix g = gamma_scale * oracle::random_normal(gen, n, m);
  Matrix u = oracle::random_normal(gen, m, t);
  Matrix x = oracle::random_normal(gen, n, t);
  Matrix d = b * u + noise * oracle::random_normal(gen, n, t);
  Matrix y = d + g * u + noise * oracle::random_normal(gen, n, t);
  if (covariate) {
    d += 0.7 * x;
    y += -0.4 * x;
  }
  std::vector<Matrix> cov;
  if (covariate) cov.push_back(x);
  return {PanelData(d, y, cov, oracle::random_normal(gen, n, 2)), u};
}

// Panel whose sample moments (divisor t - 1) equal the population moments of
// D = B U + xi, Y = D + G U + eps with unit-variance U and noise variance s2.
PanelData exact_moment_panel(const Matrix& b, const Matrix& g, double s2, int t, std::uint64_t seed) {
  const auto n = b.rows();
  Matrix sd = b * b.transpose();
  sd.diagonal().array() += s2;
  const Matrix syd = sd + g * b.transpose();
  Matrix sy = sd + g * b.transpose() + b * g.transpose() + g * g.transpose();
  sy.diagonal().array() += s2;
  Matrix joint(2 * n, 2 * n);
  joint << sd, syd.transpose(), syd, sy;
  const Matrix l = joint.llt().matrixL();

  std::mt19937_64 gen(seed);
  Matrix z(t, 2 * n + 1);
  z.col(0).setOnes();
  z.rightCols(2 * n) = oracle::random_normal(gen, t, 2 * n);
  const Matrix q = Eigen::HouseholderQR<Matrix>(z).householderQ() * Matrix::Identity(t, 2 * n + 1);
  const Matrix w = l * q.rightCols(2 * n).transpose() * std::sqrt(static_cast<double>(t - 1));
  return PanelData(w.topRows(n), w.bottomRows(n), {}, oracle::random_normal(gen, n, 2));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("method names round-trip") {
  for (Method m : {Method::SingleDML, Method::MultiDML, Method::StackedDML, Method::NaiveDML, Method::FC,
                   Method::FCplusDML, Method::IFE, Method::IFEplusDML})
    CHECK(method_from_string(to_string(m)) == m);
  CHECK(method_from_string("nuc") == Method::NaiveDML);
  CHECK_THROWS_AS(method_from_string("lasso"), Error);
  CHECK(ate_name(1.0) == "ate(1)");
  CHECK(ate_name(0.5) == "ate(0.5)");
}

TEST_CASE("config validation") {
  EstimatorConfig c;
  c.folds = 1;
  CHECK_THROWS_AS(c.validate(10), Error);
  c = EstimatorConfig{};
  c.rank = 0;
  CHECK_THROWS_AS(c.validate(10), Error);
  c.method = Method::IFE;
  CHECK_NOTHROW(c.validate(10));
  c.neighborhoods = no_neighborhoods(4);
  CHECK_THROWS_AS(c.validate(10), Error);
}

TEST_CASE("exactly explained outcomes leave no residual") {
  std::mt19937_64 gen(1);
  Matrix x1 = oracle::random_normal(gen, 4, 60), x2 = oracle::random_normal(gen, 4, 60);
  Matrix d = (1.0 + 2.0 * x1.array() - x2.array()).matrix();
  Matrix y = (-3.0 + 0.5 * x1.array() + 4.0 * x2.array()).matrix();
  PanelData p(d, y, {x1, x2}, Matrix());
  DmlResiduals r = dml_residualize(p, LearnerSpec::linear(), 5, 3);
  CHECK(oracle::max_abs(r.d_resid) <= 1e-6);
  CHECK(oracle::max_abs(r.y_resid) <= 1e-6);
}

TEST_CASE("without covariates residualization is row demeaning") {
  std::mt19937_64 gen(2);
  Matrix d = oracle::random_normal(gen, 3, 20), y = oracle::random_normal(gen, 3, 20);
  PanelData p(d, y, {}, Matrix());
  DmlResiduals r = dml_residualize(p, LearnerSpec::spline(5), 5, 3);
  CHECK(oracle::max_abs(r.d_resid - (d.colwise() - d.rowwise().mean())) < 1e-12);
  CHECK(oracle::max_abs(r.y_resid - (y.colwise() - y.rowwise().mean())) < 1e-12);
}

TEST_CASE("folds must fit the replicates") {
  PanelData p(Matrix::Random(2, 7), Matrix::Random(2, 7), {}, Matrix());
  try {
    dml_residualize(p, LearnerSpec::linear(), 5, 0);
    FAIL("expected FoldTooSmall");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FoldTooSmall);
  }
}

TEST_CASE("partially linear design: spline cross-fitting recovers the slope") {
  std::vector<double> slopes;
  for (int rep = 0; rep < 50; ++rep) {
    Rng rng(derive_seed(41, rep));
    const int n = 2, t = 300;
    Matrix x(n, t), d(n, t), y(n, t);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < t; ++j) {
        x(i, j) = rng.uniform(-2.5, 2.5);
        d(i, j) = std::cos(x(i, j)) + 0.5 * rng.normal();
        y(i, j) = d(i, j) + std::sin(x(i, j)) + 0.5 * rng.normal();
      }
    DmlResiduals r = dml_residualize(PanelData(d, y, {x}, Matrix()), LearnerSpec::spline(6), 5, rep);
    slopes.push_back((r.d_resid.array() * r.y_resid.array()).sum() / r.d_resid.squaredNorm());
  }
  CHECK(std::abs(mean_of(slopes) - 1.0) <= 0.05);
}

TEST_CASE("baselines are unbiased without confounding") {
  SimScenario sc = SimScenario::linear_fixed();
  sc.constants.outcome_common = 0.0;
  sc.constants.outcome_spread = 0.0;
  sc.constants.field_amplitude = 0.0;
  sc.constants.covariate_het_d = 0.0;
  sc.constants.covariate_het_y = 0.0;
  for (Method m : {Method::SingleDML, Method::MultiDML, Method::StackedDML}) {
    std::vector<double> est;
    for (int rep = 0; rep < 10; ++rep) {
      SimDraw draw = generate(sc, derive_seed(5, rep));
      EstimatorConfig cfg;
      cfg.method = m;
      cfg.seed = rep;
      est.push_back(estimate_point(draw.panel, cfg).beta(0));
    }
    INFO(to_string(m));
    CHECK(std::abs(mean_of(est) - 1.0) <= 0.05);
  }
}

TEST_CASE("IFE with no factors is pooled OLS") {
  Toy toy = toy_panel(8, 30, 2, 1.0, 1.0, 4, true);
  EstimatorConfig cfg;
  cfg.method = Method::IFE;
  cfg.rank = 0;
  EffectEstimate est = ife_fit(toy.panel, cfg);
  const Matrix& d = toy.panel.exposures();
  const Matrix& y = toy.panel.outcomes();
  const Matrix& x = toy.panel.covariates()[0];
  Matrix design(d.size(), 3);
  design.col(0).setOnes();
  design.col(1) = Eigen::Map<const Vector>(d.data(), d.size());
  design.col(2) = Eigen::Map<const Vector>(x.data(), x.size());
  Vector ref = oracle::ols(design, Eigen::Map<const Vector>(y.data(), y.size()));
  CHECK(std::abs(est.beta(0) - ref(1)) < 1e-12);
}

TEST_CASE("IFE is unbiased when factors only move the exposure") {
  std::vector<double> est;
  for (int rep = 0; rep < 20; ++rep) {
    Toy toy = toy_panel(20, 40, 2, 0.0, 1.0, 100 + rep);
    EstimatorConfig cfg;
    cfg.method = Method::IFE;
    cfg.rank = 2;
    est.push_back(ife_fit(toy.panel, cfg).beta(0));
  }
  CHECK(std::abs(mean_of(est) - 1.0) <= 2.0 * sd_of(est) / std::sqrt(20.0));
}

TEST_CASE("IFE rank bound") {
  Toy toy = toy_panel(5, 30, 1, 1.0, 1.0, 4);
  EstimatorConfig cfg;
  cfg.method = Method::IFE;
  cfg.rank = 5;
  CHECK_THROWS_AS(ife_fit(toy.panel, cfg), Error);
}

TEST_CASE("FC recovers slopes in a nearly noiseless panel") {
  std::mt19937_64 gen(8);
  const Matrix b = oracle::random_normal(gen, 12, 2);
  const Matrix g = oracle::random_normal(gen, 12, 2);
  const PanelData panel = exact_moment_panel(b, g, 1e-6, 40000, 9);
  EstimatorConfig cfg;
  cfg.rank = 2;
  cfg.learner = LearnerSpec::linear();
  EffectEstimate est = fc_three_step(panel, cfg);
  CHECK(std::abs(est.beta(0) - 1.0) <= 1e-3);
  CHECK(est.bias_model.has_value());
  CHECK(est.diagnostics.identified);
}

TEST_CASE("FC without outcome confounding matches the naive fit") {
  std::mt19937_64 gen(10);
  const Matrix b = oracle::random_normal(gen, 12, 2);
  const PanelData panel = exact_moment_panel(b, Matrix::Zero(12, 2), 1.0, 2000, 11);
  EstimatorConfig cfg;
  cfg.rank = 2;
  cfg.learner = LearnerSpec::linear();
  EffectEstimate fc = fc_three_step(panel, cfg);
  EstimatorConfig naive;
  naive.method = Method::NaiveDML;
  naive.learner = LearnerSpec::linear();
  EffectEstimate nv = dml_baseline(panel, naive);
  CHECK(std::abs(fc.beta(0) - nv.beta(0)) <= 1e-3);
  CHECK(fc.bias_model->bias_matrix.cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("short panels restrict the off-neighborhood block to the factor span") {
  SimDraw draw = generate(SimScenario::ife_grid(0.5, 10), 4);
  EstimatorConfig cfg;
  cfg.rank = 3;
  EffectEstimate est = fc_three_step(draw.panel, cfg);
  CHECK(est.diagnostics.reduced_off_block);
  CHECK(std::isfinite(est.beta(0)));

  SimDraw long_draw = generate(SimScenario::ife_grid(0.5, 200), 4);
  CHECK_FALSE(fc_three_step(long_draw.panel, cfg).diagnostics.reduced_off_block);
}

TEST_CASE("linear learner without interference reduces to one slope") {
  Toy toy = toy_panel(10, 120, 2, 0.5, 1.0, 12, true);
  EstimatorConfig cfg;
  cfg.rank = 2;
  cfg.learner = LearnerSpec::linear();
  cfg.shifts = {1.0, 2.0};
  EffectEstimate est = estimate(toy.panel, cfg);
  REQUIRE(est.curves.size() == 1);
  CHECK(est.curves[0].is_linear);
  CHECK(est.curves[0].slope == est.beta(0));
  CHECK(est.acd() == doctest::Approx(est.beta(0)));
  CHECK(est.scalars().at("ate(2)") == doctest::Approx(2.0 * est.beta(0)));
}

TEST_CASE("interference adds a spillover coefficient") {
  SimDraw draw = generate(SimScenario::interference(), 3);
  EstimatorConfig cfg;
  cfg.rank = 4;
  cfg.neighborhoods = draw.neighborhoods;
  EffectEstimate est = estimate_point(draw.panel, cfg);
  CHECK(est.coef_names == std::vector<std::string>{"beta1", "beta2"});
  CHECK(std::abs(est.beta(0) - 1.0) < 0.2);
  CHECK(std::abs(est.beta(1) - 0.5) < 0.25);
}

TEST_CASE("heterogeneous FC produces per-unit curves") {
  SimDraw draw = generate(SimScenario::nonlinear_hetero(), 2);
  EstimatorConfig cfg;
  cfg.rank = 2;
  cfg.heterogeneous = true;
  EffectEstimate est = estimate_point(draw.panel, cfg);
  CHECK(est.curves.size() == 5);
  CHECK(est.unit_beta.size() == 5);
  CHECK(std::abs(est.acd() - draw.truth.beta(0)) < 0.15);
}

TEST_CASE("bootstrap on a noiseless design has zero width") {
  std::mt19937_64 gen(3);
  Matrix d = oracle::random_normal(gen, 6, 40);
  PanelData p(d, 2.0 * d, {}, Matrix());
  EstimatorConfig cfg;
  cfg.method = Method::MultiDML;
  cfg.learner = LearnerSpec::linear();
  cfg.bootstrap_reps = 30;
  EffectEstimate est = estimate(p, cfg);
  const Interval iv = est.intervals.at("beta");
  CHECK(iv.hi - iv.lo <= 1e-6);
  CHECK(iv.contains(2.0, 1e-9));
}

TEST_CASE("single resample gives the degenerate interval") {
  Toy toy = toy_panel(6, 40, 1, 0.5, 1.0, 14);
  EstimatorConfig cfg;
  cfg.method = Method::MultiDML;
  cfg.learner = LearnerSpec::linear();
  EffectEstimate point = estimate_point(toy.panel, cfg);
  BootstrapResult br = bootstrap_infer(toy.panel, cfg, point, 1, 5);
  REQUIRE(br.draws.at("beta").size() == 1);
  CHECK(br.intervals.at("beta").lo == br.draws.at("beta")[0]);
  CHECK(br.intervals.at("beta").hi == br.draws.at("beta")[0]);
}

TEST_CASE("every interval contains its point estimate") {
  SimDraw draw = generate(SimScenario::linear_fixed(), 21);
  EstimatorConfig cfg;
  cfg.bootstrap_reps = 20;
  cfg.threads = 2;
  EffectEstimate est = estimate(draw.panel, cfg);
  for (const auto& [name, value] : est.scalars()) {
    INFO(name);
    REQUIRE(est.intervals.count(name) == 1);
    CHECK(est.intervals.at(name).contains(value));
  }
  CHECK(est.curve_lo.size() == est.summary.grid.size());
  for (int k = 0; k < est.curve_lo.size(); ++k) {
    CHECK(est.curve_lo(k) <= est.summary.centered(k));
    CHECK(est.curve_hi(k) >= est.summary.centered(k));
  }
}

TEST_CASE("bootstrap is reproducible across thread counts") {
  Toy toy = toy_panel(8, 60, 1, 0.5, 1.0, 15);
  EstimatorConfig cfg;
  cfg.method = Method::MultiDML;
  cfg.bootstrap_reps = 16;
  cfg.threads = 1;
  EffectEstimate a = estimate(toy.panel, cfg);
  cfg.threads = 4;
  EffectEstimate b = estimate(toy.panel, cfg);
  CHECK(a.intervals.at("beta").lo == b.intervals.at("beta").lo);
  CHECK(a.intervals.at("beta").hi == b.intervals.at("beta").hi);
}

TEST_CASE("bootstrap coverage on an unconfounded linear design") {
  int covered = 0;
  const int outer = 100;
  for (int rep = 0; rep < outer; ++rep) {
    Toy toy = toy_panel(10, 50, 1, 0.0, 1.0, 1000 + rep);
    EstimatorConfig cfg;
    cfg.method = Method::MultiDML;
    cfg.learner = LearnerSpec::linear();
    cfg.bootstrap_reps = 200;
    cfg.seed = rep;
    EffectEstimate est = estimate(toy.panel, cfg);
    covered += est.intervals.at("beta").contains(1.0) ? 1 : 0;
  }
  const double coverage = covered / static_cast<double>(outer);
  CHECK(coverage >= 0.88);
  CHECK(coverage <= 0.99);
}

}
