#include "fcausal/sim.hpp"

#include <cmath>
#include <numbers>

#include "fcausal/error.hpp"
#include "fcausal/random.hpp"

namespace fcausal {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::LinearFixedSpatial: return "linear-fixed";
    case ScenarioKind::LinearSpatiotemporal: return "linear-spatiotemporal";
    case ScenarioKind::IFEGrid: return "ife-grid";
    case ScenarioKind::Interference: return "interference";
    case ScenarioKind::NonlinearHetero: return "nonlinear-hetero";
    case ScenarioKind::Misspec: return "misspec";
  }
  return "linear-fixed";
}

std::string to_string(NoiseDist d) {
  switch (d) {
    case NoiseDist::Gaussian: return "gaussian";
    case NoiseDist::Laplace: return "laplace";
    case NoiseDist::StudentT: return "student-t";
    case NoiseDist::NormalMixture: return "mixture";
    case NoiseDist::SkewNormal: return "skew-normal";
    case NoiseDist::Heteroskedastic: return "heteroskedastic";
  }
  return "gaussian";
}

NoiseDist noise_dist_from_string(const std::string& s) {
  for (NoiseDist d : {NoiseDist::Gaussian, NoiseDist::Laplace, NoiseDist::StudentT, NoiseDist::NormalMixture,
                      NoiseDist::SkewNormal, NoiseDist::Heteroskedastic}) {
    if (s == to_string(d)) return d;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown noise distribution '" + s + "'");
}

SimScenario SimScenario::linear_fixed() { return SimScenario{}; }

SimScenario SimScenario::linear_spatiotemporal() {
  SimScenario s;
  s.kind = ScenarioKind::LinearSpatiotemporal;
  return s;
}

SimScenario SimScenario::ife_grid(double rho, int t) {
  SimScenario s;
  s.kind = ScenarioKind::IFEGrid;
  s.n = 50;
  s.t = t;
  s.m = 3;
  s.p = 0;
  s.rho = rho;
  return s;
}

SimScenario SimScenario::interference() {
  SimScenario s;
  s.kind = ScenarioKind::Interference;
  s.n = 50;
  s.t = 200;
  s.m = 4;
  s.beta = 1.0;
  s.beta2 = 0.5;
  s.constants.intercept = 0.5;
  s.constants.field_amplitude = 0.0;
  return s;
}

SimScenario SimScenario::nonlinear_hetero() {
  SimScenario s;
  s.kind = ScenarioKind::NonlinearHetero;
  s.n = 5;
  s.t = 1000;
  s.m = 2;
  s.p = 2;
  s.sigma_xi = 0.5;
  s.sigma_eps = 0.5;
  return s;
}

SimScenario SimScenario::misspec(NoiseDist dist) {
  SimScenario s;
  s.kind = ScenarioKind::Misspec;
  s.dist = dist;
  return s;
}

std::string SimScenario::name() const {
  if (kind == ScenarioKind::Misspec) return "misspec-" + to_string(dist);
  return to_string(kind);
}

void SimScenario::validate() const {
  if (n < 2 || t < 2 || m < 1 || p < 0) throw Error(ErrorKind::InvalidArgument, "scenario dims must be positive");
  if (!(sigma_xi > 0) || !(sigma_eps > 0)) throw Error(ErrorKind::InvalidArgument, "noise SDs must be positive");
  if (kind == ScenarioKind::IFEGrid && !(rho >= 0 && rho < 1)) {
    throw Error(ErrorKind::InvalidArgument, "loading correlation must be in [0, 1)");
  }
  if (kind == ScenarioKind::NonlinearHetero && (n != 5 || m != 2 || p != 2)) {
    throw Error(ErrorKind::InvalidArgument, "the nonlinear design has fixed N = 5, M = 2, p = 2");
  }
  if (kind == ScenarioKind::Interference && (k_neighbors < 1 || k_neighbors >= n)) {
    throw Error(ErrorKind::InvalidArgument, "neighbor count must be in [1, N)");
  }
}

SimScenario scenario_from_name(const std::string& name) {
  if (name == "linear-fixed") return SimScenario::linear_fixed();
  if (name == "linear-spatiotemporal") return SimScenario::linear_spatiotemporal();
  if (name == "ife-grid") return SimScenario::ife_grid(0.5, 50);
  if (name == "interference") return SimScenario::interference();
  if (name == "nonlinear-hetero") return SimScenario::nonlinear_hetero();
  if (name.rfind("misspec-", 0) == 0) return SimScenario::misspec(noise_dist_from_string(name.substr(8)));
  throw Error(ErrorKind::InvalidArgument, "unknown scenario '" + name + "'");
}

double draw_noise(Rng& rng, NoiseDist dist) {
  switch (dist) {
    case NoiseDist::Gaussian:
    case NoiseDist::Heteroskedastic:
      return rng.normal();
    case NoiseDist::Laplace:
      return rng.laplace(1.0 / std::numbers::sqrt2);
    case NoiseDist::StudentT:
      return rng.student_t(5) * std::sqrt(3.0 / 5.0);
    case NoiseDist::NormalMixture: {
      const double mean = rng.uniform() < 0.7 ? -0.6 : 1.4;
      return (mean + 0.8 * rng.normal()) / std::sqrt(1.48);
    }
    case NoiseDist::SkewNormal: {
      const double alpha = 4.0;
      const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
      const double z0 = std::abs(rng.normal());
      const double z1 = rng.normal();
      const double x = delta * z0 + std::sqrt(1.0 - delta * delta) * z1;
      const double mean = delta * std::sqrt(2.0 / kPi);
      const double var = 1.0 - 2.0 * delta * delta / kPi;
      return (x - mean) / std::sqrt(var);
    }
  }
  return rng.normal();
}

namespace {

Matrix uniform_coords(Rng& rng, int n) {
  Matrix s(n, 2);
  for (int i = 0; i < n; ++i) {
    s(i, 0) = rng.uniform();
    s(i, 1) = rng.uniform();
  }
  return s;
}

Matrix gaussian(Rng& rng, int rows, int cols) {
  Matrix z(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) z(i, j) = rng.normal();
  return z;
}

// Common direction plus column-centered spread.
Matrix aligned_loadings(const Matrix& z, double common, double spread) {
  const auto m = z.cols();
  const Eigen::RowVectorXd u = Eigen::RowVectorXd::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
  Matrix centered = z.rowwise() - z.colwise().mean();
  return (spread * centered).rowwise() + common * u;
}

// Sigma_{U|D} for B and isotropic Lambda_D = s2 I.
Matrix posterior_cov(const Matrix& b, double s2) {
  const auto m = b.cols();
  Matrix k = Matrix::Identity(m, m) + b.transpose() * b / s2;
  return symmetrize(k.ldlt().solve(Matrix::Identity(m, m)));
}

// Spatially varying covariate effects; the two patterns alternate over k.
double cov_effect_d(const Matrix& s, int i, int k) {
  return k % 2 == 0 ? std::cos(kPi * s(i, 0)) : s(i, 1) - 0.5;
}
double cov_effect_y(const Matrix& s, int i, int k) {
  return k % 2 == 0 ? std::cos(kPi * s(i, 0)) + 0.3 * s(i, 1) : 0.5 - s(i, 1) + s(i, 0) * s(i, 0);
}

Truth scalar_truth(double beta) {
  Truth t;
  t.names = {"beta"};
  t.beta = Vector::Constant(1, beta);
  return t;
}

// Shared body of the linear, misspecified and interference designs.
SimDraw linear_family(const SimScenario& sc, std::uint64_t seed, bool interference) {
  sc.validate();
  Rng rng(seed);
  const int n = sc.n, t = sc.t, m = sc.m, p = sc.p;
  const auto& k = sc.constants;
  const NoiseDist dist = sc.kind == ScenarioKind::Misspec ? sc.dist : NoiseDist::Gaussian;

  SimDraw out;
  out.scenario = sc;
  const Matrix coords = uniform_coords(rng, n);
  const Matrix b = aligned_loadings(gaussian(rng, n, m), k.exposure_common, k.exposure_spread);
  const Matrix gamma = aligned_loadings(gaussian(rng, n, m), k.outcome_common, k.outcome_spread);
  const double s2 = sc.sigma_xi * sc.sigma_xi;
  const Matrix effect = gamma * sym_inv_sqrt(posterior_cov(b, s2), 0.0);

  Matrix u(t, m);
  for (int r = 0; r < t; ++r)
    for (int c = 0; c < m; ++c) u(r, c) = draw_noise(rng, dist);
  std::vector<Matrix> x(static_cast<std::size_t>(p), Matrix(n, t));
  for (auto& xk : x)
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < t; ++r) xk(i, r) = rng.normal();
  Matrix xi(n, t), eps(n, t);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < t; ++r) xi(i, r) = draw_noise(rng, dist);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < t; ++r) eps(i, r) = draw_noise(rng, dist);
  if (dist == NoiseDist::Heteroskedastic && p > 0) {
    const Matrix scale = (0.5 + 0.5 * x[0].array().square()).sqrt().matrix();
    xi.array() *= scale.array();
    eps.array() *= scale.array();
  }

  const bool temporal = sc.kind == ScenarioKind::LinearSpatiotemporal;
  const double omega = 2.0 * kPi / k.temporal_period;
  Matrix d(n, t), y(n, t);
  const Matrix bu = b * u.transpose();
  const Matrix gu = effect * u.transpose();
  for (int i = 0; i < n; ++i) {
    const double s1 = coords(i, 0), s2c = coords(i, 1);
    const double f = k.field_amplitude * (std::sin(kPi * s1) + s2c * s2c);
    const double h = k.field_amplitude * (std::cos(kPi * s2c) - s1);
    for (int r = 0; r < t; ++r) {
      double dv = f + bu(i, r) + sc.sigma_xi * xi(i, r);
      double yv = k.intercept + h + gu(i, r) + sc.sigma_eps * eps(i, r);
      for (int c = 0; c < p; ++c) {
        const double xv = x[static_cast<std::size_t>(c)](i, r);
        dv += (k.covariate_base_d + k.covariate_het_d * cov_effect_d(coords, i, c)) * xv;
        yv += (k.covariate_base_y + k.covariate_het_y * cov_effect_y(coords, i, c)) * xv;
      }
      if (temporal) {
        dv += k.temporal_amplitude * std::sin(omega * r + kPi * s1);
        yv += 0.8 * k.temporal_amplitude * std::cos(omega * r + kPi * s2c);
      }
      d(i, r) = dv;
      y(i, r) = yv;
    }
  }

  if (interference) {
    out.neighborhoods = knn_neighborhoods(coords, sc.k_neighbors);
    y += sc.beta * d + sc.beta2 * out.neighborhoods.neighbor_mean(d);
    out.truth.names = {"beta1", "beta2"};
    out.truth.beta = Vector(2);
    out.truth.beta << sc.beta, sc.beta2;
  } else {
    out.neighborhoods = no_neighborhoods(n);
    y += sc.beta * d;
    out.truth = scalar_truth(sc.beta);
  }

  out.latent = u;
  out.oracle_extra = Matrix(t, temporal ? 2 : 0);
  if (temporal) {
    for (int r = 0; r < t; ++r) {
      out.oracle_extra(r, 0) = std::sin(omega * r);
      out.oracle_extra(r, 1) = std::cos(omega * r);
    }
  }
  out.exposure_loadings = b;
  out.outcome_loadings = gamma;
  out.confounder_effect = effect;
  out.lambda_d = Vector::Constant(n, s2);
  out.lambda_y = Vector::Constant(n, sc.sigma_eps * sc.sigma_eps);
  out.panel = PanelData(std::move(d), std::move(y), std::move(x), coords);
  return out;
}

}  // namespace

SimDraw gen_linear(const SimScenario& sc, std::uint64_t seed) {
  if (sc.kind != ScenarioKind::LinearFixedSpatial && sc.kind != ScenarioKind::LinearSpatiotemporal) {
    throw Error(ErrorKind::InvalidArgument, "gen_linear needs a linear scenario");
  }
  return linear_family(sc, seed, false);
}

SimDraw gen_misspec(const SimScenario& sc, std::uint64_t seed) {
  if (sc.kind != ScenarioKind::Misspec) throw Error(ErrorKind::InvalidArgument, "gen_misspec needs a misspec scenario");
  return linear_family(sc, seed, false);
}

SimDraw gen_interference(const SimScenario& sc, std::uint64_t seed) {
  if (sc.kind != ScenarioKind::Interference) {
    throw Error(ErrorKind::InvalidArgument, "gen_interference needs the interference scenario");
  }
  return linear_family(sc, seed, true);
}

SimDraw gen_ife_grid(const SimScenario& sc, std::uint64_t seed) {
  if (sc.kind != ScenarioKind::IFEGrid) throw Error(ErrorKind::InvalidArgument, "gen_ife_grid needs the grid scenario");
  sc.validate();
  Rng rng(seed);
  const int n = sc.n, t = sc.t, m = sc.m;
  SimDraw out;
  out.scenario = sc;
  const Matrix coords = uniform_coords(rng, n);
  Matrix b(n, m), g(n, m);
  const double c = std::sqrt(1.0 - sc.rho * sc.rho);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k) {
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      b(i, k) = z1;
      g(i, k) = sc.rho * z1 + c * z2;
    }
  const Matrix u = gaussian(rng, t, m);
  Matrix d = b * u.transpose();
  Matrix y = g * u.transpose();
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < t; ++r) d(i, r) += sc.sigma_xi * rng.normal();
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < t; ++r) y(i, r) += sc.beta * d(i, r) + sc.sigma_eps * rng.normal();
  out.neighborhoods = no_neighborhoods(n);
  out.truth = scalar_truth(sc.beta);
  out.latent = u;
  out.oracle_extra = Matrix(t, 0);
  out.exposure_loadings = b;
  out.confounder_effect = g;
  out.outcome_loadings = g * sym_sqrt(posterior_cov(b, sc.sigma_xi * sc.sigma_xi));
  out.lambda_d = Vector::Constant(n, sc.sigma_xi * sc.sigma_xi);
  out.lambda_y = Vector::Constant(n, sc.sigma_eps * sc.sigma_eps);
  out.panel = PanelData(std::move(d), std::move(y), {}, coords);
  return out;
}

Matrix nonlinear_alpha() {
  Matrix a(5, 2);
  a << 1.0, -1.2, 0.8, 0.5, -0.4, 1.0, 0.6, -0.7, 1.5, 0.9;
  return a;
}

Matrix nonlinear_b() {
  Matrix b(5, 2);
  b << 1.0, 0.3, 0.4, -0.8, -0.6, 1.0, -0.7, -0.3, 1.0, -0.5;
  return b;
}

Matrix nonlinear_gamma() {
  Matrix g(5, 2);
  g << 0.4, -0.7, -0.3, 0.2, 0.8, 0.2, 0.2, 0.7, 0.5, 0.4;
  return g;
}

double nonlinear_truth(int unit, double d) {
  switch (unit) {
    case 0: return 0.6 * (std::sqrt(1.0 + d * d) - 1.0) + 0.3 * d;
    case 1: return 0.5 * d + 0.1 * d * d;
    case 2: return std::tanh(d);
    case 3: return -0.5 * d + 0.3 * std::sin(d);
    case 4: return std::log1p(std::exp(d));
    default: throw Error(ErrorKind::InvalidArgument, "nonlinear design has 5 units");
  }
}

SimDraw gen_nonlinear_hetero(const SimScenario& sc, std::uint64_t seed) {
  if (sc.kind != ScenarioKind::NonlinearHetero) {
    throw Error(ErrorKind::InvalidArgument, "gen_nonlinear_hetero needs the nonlinear scenario");
  }
  sc.validate();
  Rng rng(seed);
  const int n = sc.n, t = sc.t;
  const Matrix alpha = nonlinear_alpha();
  const Matrix b = nonlinear_b();
  const Matrix g = nonlinear_gamma();
  SimDraw out;
  out.scenario = sc;
  const Matrix coords = uniform_coords(rng, n);
  const Matrix u = gaussian(rng, t, 2);
  // Covariates are shared by all units at each time.
  Vector x1(t), x2(t);
  for (int r = 0; r < t; ++r) {
    x1(r) = rng.normal();
    x2(r) = rng.normal();
  }
  Matrix d(n, t), y(n, t);
  std::vector<Matrix> x(2, Matrix(n, t));
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < t; ++r) {
      d(i, r) = alpha(i, 0) * std::sin(x1(r)) + alpha(i, 1) * (x2(r) * x2(r) - 1.0) + b.row(i).dot(u.row(r)) +
                sc.sigma_xi * rng.normal();
      x[0](i, r) = x1(r);
      x[1](i, r) = x2(r);
    }
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < t; ++r) {
      y(i, r) = nonlinear_truth(i, d(i, r)) + 0.5 * x1(r) + 0.25 * x2(r) + g.row(i).dot(u.row(r)) +
                sc.sigma_eps * rng.normal();
    }
  out.neighborhoods = no_neighborhoods(n);
  out.truth.names = {"acd"};
  out.truth.has_curves = true;
  // ACD of the true curves over the realized exposures.
  double acd = 0;
  const double h = 1e-6;
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int r = 0; r < t; ++r) s += (nonlinear_truth(i, d(i, r) + h) - nonlinear_truth(i, d(i, r) - h)) / (2 * h);
    acd += s / t / n;
  }
  out.truth.beta = Vector::Constant(1, acd);
  out.latent = u;
  out.oracle_extra = Matrix(t, 0);
  out.exposure_loadings = b;
  out.confounder_effect = g;
  const double s2 = sc.sigma_xi * sc.sigma_xi;
  out.outcome_loadings = g * sym_sqrt(posterior_cov(b, s2));
  out.lambda_d = Vector::Constant(n, s2);
  out.lambda_y = Vector::Constant(n, sc.sigma_eps * sc.sigma_eps);
  out.panel = PanelData(std::move(d), std::move(y), std::move(x), coords);
  return out;
}

SimDraw generate(const SimScenario& sc, std::uint64_t seed) {
  switch (sc.kind) {
    case ScenarioKind::LinearFixedSpatial:
    case ScenarioKind::LinearSpatiotemporal:
      return gen_linear(sc, seed);
    case ScenarioKind::IFEGrid: return gen_ife_grid(sc, seed);
    case ScenarioKind::Interference: return gen_interference(sc, seed);
    case ScenarioKind::NonlinearHetero: return gen_nonlinear_hetero(sc, seed);
    case ScenarioKind::Misspec: return gen_misspec(sc, seed);
  }
  throw Error(ErrorKind::InvalidArgument, "unhandled scenario");
}

Vector oracle_estimate(const SimDraw& draw) {
  const PanelData panel = orient(draw.panel, Orientation::ReplicateOverTime);
  const int n = panel.rows(), t = panel.replicates(), p = panel.num_covariates();
  const auto q = draw.latent.cols() + draw.oracle_extra.cols();
  std::vector<Matrix> regs{panel.exposures()};
  if (!draw.neighborhoods.trivial()) regs.push_back(draw.neighborhoods.neighbor_mean(panel.exposures()));
  std::vector<Matrix> resid(regs.size(), Matrix(n, t));
  Matrix y_res(n, t);
  for (int i = 0; i < n; ++i) {
    Matrix z(t, 1 + p + q);
    z.col(0).setOnes();
    for (int k = 0; k < p; ++k) z.col(1 + k) = panel.covariates()[static_cast<std::size_t>(k)].row(i).transpose();
    z.middleCols(1 + p, draw.latent.cols()) = draw.latent;
    z.rightCols(draw.oracle_extra.cols()) = draw.oracle_extra;
    Eigen::ColPivHouseholderQR<Matrix> qr(z);
    auto partial = [&](const Vector& v) -> Vector { return v - z * qr.solve(v); };
    for (std::size_t k = 0; k < regs.size(); ++k) resid[k].row(i) = partial(regs[k].row(i).transpose()).transpose();
    y_res.row(i) = partial(panel.outcomes().row(i).transpose()).transpose();
  }
  const auto k = static_cast<Eigen::Index>(regs.size());
  Matrix g(k, k);
  Vector h(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    h(a) = (resid[static_cast<std::size_t>(a)].array() * y_res.array()).sum();
    for (Eigen::Index b = 0; b < k; ++b)
      g(a, b) = (resid[static_cast<std::size_t>(a)].array() * resid[static_cast<std::size_t>(b)].array()).sum();
  }
  return g.ldlt().solve(h);
}

}  // namespace fcausal
