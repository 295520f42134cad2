#include "fcausal/bias_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fcausal/error.hpp"
#include "fcausal/parallel.hpp"
#include "fcausal/random.hpp"

namespace fcausal {

Matrix build_r_operator(const Matrix& loadings, const Vector& uniquenesses) {
  const PosteriorMoments pm = posterior_moments(loadings, uniquenesses);
  return sym_inv_sqrt(pm.cov, default_ridge(pm.cov)) * pm.mean_operator;
}

Matrix build_r_operator(const FactorModel& exposure_model) {
  return build_r_operator(exposure_model.loadings, exposure_model.uniquenesses);
}

Interval partial_id_interval(const Matrix& gamma, const Matrix& r_operator, int unit, const Vector& delta) {
  const double h = gamma.row(unit).norm() * (r_operator * delta).norm();
  return {-h, h};
}

double realized_bias(const Matrix& gamma, const Matrix& theta, const Matrix& r_operator, int unit,
                     const Vector& delta) {
  return gamma.row(unit).dot(theta * (r_operator * delta));
}

Matrix bias_matrix(const Matrix& gamma, const Matrix& theta, const Matrix& r_operator) {
  return gamma * theta * r_operator;
}

namespace {

// Quadratic form of the masked objective in vec(Theta) (column-major):
// f = v^T G v - 2 h^T v + c2.
struct MaskedQuadratic {
  Matrix g;
  Vector h;
  double c2 = 0.0;
  long long entries = 0;

  double value(const Matrix& theta) const {
    const Eigen::Map<const Vector> v(theta.data(), theta.size());
    return std::max(v.dot(g * v) - 2.0 * h.dot(v) + c2, 0.0);
  }
};

MaskedQuadratic masked_quadratic(const Matrix& gamma, const Matrix& r, const Matrix& c_off, const BoolMatrix& mask) {
  const auto d = gamma.rows();
  const auto m = gamma.cols();
  MaskedQuadratic q;
  q.g = Matrix::Zero(m * m, m * m);
  Matrix hm = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < d; ++i) {
    Matrix p = Matrix::Zero(m, m);
    Vector cr = Vector::Zero(m);
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!mask(i, j)) continue;
      p.noalias() += r.col(j) * r.col(j).transpose();
      cr += c_off(i, j) * r.col(j);
      q.c2 += c_off(i, j) * c_off(i, j);
      ++q.entries;
    }
    const Matrix gg = gamma.row(i).transpose() * gamma.row(i);
    // (r r^T) kron (gamma gamma^T) for column-major vec(Theta).
    for (Eigen::Index b = 0; b < m; ++b)
      for (Eigen::Index bb = 0; bb < m; ++bb) q.g.block(b * m, bb * m, m, m) += p(b, bb) * gg;
    hm += gamma.row(i).transpose() * cr.transpose();
  }
  q.g = symmetrize(q.g);
  q.h = Eigen::Map<const Vector>(hm.data(), hm.size());
  return q;
}

struct StartResult {
  Matrix theta;
  double residual = std::numeric_limits<double>::infinity();
};

StartResult descend(const MaskedQuadratic& q, Matrix theta, double step, const ProcrustesOptions& opts) {
  const auto m = theta.rows();
  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::Map<const Vector> v(theta.data(), theta.size());
    const Vector grad = q.g * v - q.h;
    Vector moved = v - grad / step;
    const Matrix next = polar_factor(Eigen::Map<const Matrix>(moved.data(), m, m));
    const double change = (next - theta).norm();
    theta = next;
    if (change < opts.tol) break;
  }
  return {theta, q.value(theta)};
}

// Gauss-Newton refinement in the tangent space Theta (I + S), S skew. The
// projected-gradient descent crawls on ill-conditioned designs; this restores
// full accuracy near a (near-)zero-residual solution.
StartResult polish(const MaskedQuadratic& q, StartResult start) {
  const auto m = start.theta.rows();
  const auto p = m * (m - 1) / 2;
  if (p == 0) return start;
  double last_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 50; ++it) {
    const Matrix& theta = start.theta;
    Matrix jac(m * m, p);
    Eigen::Index k = 0;
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = a + 1; b < m; ++b, ++k) {
        Matrix e = Matrix::Zero(m, m);
        e(a, b) = 1.0;
        e(b, a) = -1.0;
        const Matrix dir = theta * e;
        jac.col(k) = Eigen::Map<const Vector>(dir.data(), dir.size());
      }
    const Eigen::Map<const Vector> v(theta.data(), theta.size());
    const Vector s = (jac.transpose() * q.g * jac).ldlt().solve(jac.transpose() * (q.h - q.g * v));
    if (!s.allFinite()) break;
    Vector moved = v + jac * s;
    const Matrix next = polar_factor(Eigen::Map<const Matrix>(moved.data(), m, m));
    // The quadratic form loses about eps * c2 to cancellation, so increases
    // below that level are noise.
    const double value = q.value(next);
    if (value > start.residual + 1e-13 * (1.0 + q.c2) || s.norm() >= last_step) break;
    start = {next, value};
    last_step = s.norm();
    if (last_step < 1e-15) break;
  }
  return start;
}

}  // namespace

ProcrustesResult masked_procrustes(const Matrix& gamma, const Matrix& r_operator, const Matrix& c_off,
                                   const BoolMatrix& mask, const ProcrustesOptions& opts) {
  const auto d = gamma.rows();
  const auto m = gamma.cols();
  if (r_operator.rows() != m || r_operator.cols() != d || c_off.rows() != d || c_off.cols() != d ||
      mask.rows() != d || mask.cols() != d) {
    throw Error(ErrorKind::InvalidArgument, "masked_procrustes: inconsistent shapes");
  }
  if (!gamma.allFinite() || !r_operator.allFinite()) {
    throw Error(ErrorKind::NonFiniteValue, "masked_procrustes: non-finite loadings");
  }
  const MaskedQuadratic q = masked_quadratic(gamma, r_operator, c_off, mask);
  if (q.entries < m * m) {
    throw Error(ErrorKind::MaskTooSmall, "mask has " + std::to_string(q.entries) + " entries, need at least " +
                                             std::to_string(m * m));
  }

  ProcrustesResult out;
  const SymEig eig = sym_eig(q.g);
  const double smax = std::sqrt(std::max(eig.values(0), 0.0));
  const double smin = std::sqrt(std::max(eig.values(eig.values.size() - 1), 0.0));
  out.design_condition = smax > 0 ? smin / smax : 0.0;
  out.identified = out.design_condition >= opts.degenerate_tol;
  const double step = std::max(eig.values(0), std::numeric_limits<double>::min());

  // Starts: identity, the projected unconstrained solution, then Haar draws.
  std::vector<Matrix> starts;
  starts.push_back(Matrix::Identity(m, m));
  {
    const Vector v = q.g.completeOrthogonalDecomposition().solve(q.h);
    starts.push_back(polar_factor(Eigen::Map<const Matrix>(v.data(), m, m)));
  }
  for (int s = 0; s < opts.n_init; ++s) {
    Rng rng(derive_seed(opts.seed, 0x9e37u, static_cast<std::uint64_t>(s)));
    starts.push_back(random_orthogonal(rng, static_cast<int>(m)));
  }
  std::vector<StartResult> results(starts.size());
  parallel_for(starts.size(), opts.threads,
               [&](std::size_t s) { results[s] = polish(q, descend(q, starts[s], step, opts)); });

  const Matrix eye = Matrix::Identity(m, m);
  std::size_t best = 0;
  for (std::size_t s = 1; s < results.size(); ++s) {
    const double diff = results[s].residual - results[best].residual;
    if (diff < -1e-12 ||
        (std::abs(diff) <= 1e-12 && (results[s].theta - eye).norm() < (results[best].theta - eye).norm())) {
      best = s;
    }
  }
  out.theta = results[best].theta;
  out.residual = results[best].residual;
  out.starts = static_cast<int>(results.size());
  return out;
}

IdCheckReport check_identification(const Matrix& gamma, const Matrix& r_operator, const NeighborhoodSpec& neighborhoods,
                                   double threshold) {
  const auto d = gamma.rows();
  const auto m = gamma.cols();
  IdCheckReport report;
  report.threshold = threshold;
  const BoolMatrix mask = neighborhoods.off_mask();

  auto rel_sv = [](const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0) return 0.0;
    return s.size() < std::min(a.rows(), a.cols()) ? 0.0 : s(s.size() - 1) / s(0);
  };

  Matrix basis(0, m);
  for (Eigen::Index i = 0; i < d && static_cast<Eigen::Index>(report.basis_indices.size()) < m; ++i) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < d; ++j)
      if (mask(i, j)) cols.push_back(j);
    if (static_cast<Eigen::Index>(cols.size()) < m) continue;
    Matrix r_off(m, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) r_off.col(static_cast<Eigen::Index>(c)) = r_operator.col(cols[c]);
    const double r_cond = rel_sv(r_off);
    if (r_cond <= threshold) continue;
    Matrix trial(basis.rows() + 1, m);
    trial << basis, gamma.row(i);
    if (rel_sv(trial) <= threshold) continue;
    basis = trial;
    report.basis_indices.push_back(static_cast<int>(i));
    report.row_rank_ok.push_back(true);
    report.condition_numbers.push_back(r_cond);
  }

  const MaskedQuadratic q = masked_quadratic(gamma, r_operator, Matrix::Zero(d, d), mask);
  if (q.entries >= m * m) {
    const SymEig eig = sym_eig(q.g);
    const double smax = std::sqrt(std::max(eig.values(0), 0.0));
    const double smin = std::sqrt(std::max(eig.values(eig.values.size() - 1), 0.0));
    report.spanning_condition = smax > 0 ? smin / smax : 0.0;
  }
  report.spanning_ok = static_cast<Eigen::Index>(report.basis_indices.size()) == m &&
                       report.spanning_condition > threshold;
  return report;
}

BiasModel fit_bias_model(const FactorModel& exposure_model, const FactorModel& outcome_model, const Matrix& c_off,
                         const NeighborhoodSpec& neighborhoods, const ProcrustesOptions& opts) {
  if (exposure_model.rank != outcome_model.rank) {
    throw Error(ErrorKind::InvalidArgument, "exposure and outcome factor models must share the rank");
  }
  BiasModel bm;
  bm.gamma = outcome_model.loadings;
  bm.lambda_y = outcome_model.uniquenesses;
  bm.r_operator = build_r_operator(exposure_model);
  bm.sigma_d = exposure_model.implied_cov();
  bm.mask = neighborhoods.off_mask();
  bm.id_check = check_identification(bm.gamma, bm.r_operator, neighborhoods);
  bm.procrustes = masked_procrustes(bm.gamma, bm.r_operator, c_off, bm.mask, opts);
  bm.theta = bm.procrustes.theta;
  bm.bias_matrix = bias_matrix(bm.gamma, bm.theta, bm.r_operator);
  for (Eigen::Index i = 0; i < bm.mask.rows(); ++i)
    for (Eigen::Index j = 0; j < bm.mask.cols(); ++j)
      if (bm.mask(i, j)) bm.bias_matrix(i, j) = c_off(i, j);
  return bm;
}

}  // namespace fcausal
