#include "fcausal/factor_model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>

#include "fcausal/error.hpp"
#include "fcausal/log.hpp"
#include "fcausal/random.hpp"

namespace fcausal {

std::string to_string(NoiseMode m) { return m == NoiseMode::Isotropic ? "isotropic" : "diagonal"; }

std::string to_string(RankMethod m) {
  switch (m) {
    case RankMethod::EigenRatio: return "eigenratio";
    case RankMethod::InfoCriterion: return "ic";
    case RankMethod::ParallelAnalysis: return "parallel";
  }
  return "eigenratio";
}

RankMethod rank_method_from_string(const std::string& s) {
  if (s == "eigenratio" || s == "eigen-ratio") return RankMethod::EigenRatio;
  if (s == "ic" || s == "info" || s == "infocriterion") return RankMethod::InfoCriterion;
  if (s == "parallel" || s == "pa") return RankMethod::ParallelAnalysis;
  throw Error(ErrorKind::InvalidArgument, "unknown rank method '" + s + "'");
}

Matrix FactorModel::implied_cov() const {
  Matrix s = loadings * loadings.transpose();
  s.diagonal() += uniquenesses;
  return s;
}

bool rank_is_admissible(int d, int m) {
  if (m < 1 || m >= d) return false;
  const long long gap = static_cast<long long>(d) - m;
  return gap * gap >= static_cast<long long>(d) + m;
}

namespace {

// psi floor relative to the coordinate's sample variance; keeps Psi^{-1} finite
// on noiseless inputs.
constexpr double kPsiFloor = 1e-15;

struct WoodburyParts {
  Matrix lt_psi_inv;  // M x d
  Matrix k_inv;       // (I + L^T Psi^{-1} L)^{-1}
  double logdet_k = 0;
};

WoodburyParts woodbury(const Matrix& l, const Vector& psi) {
  WoodburyParts w;
  w.lt_psi_inv = l.transpose() * psi.cwiseInverse().asDiagonal();
  Matrix k = Matrix::Identity(l.cols(), l.cols()) + w.lt_psi_inv * l;
  Eigen::LLT<Matrix> llt(k);
  w.k_inv = llt.solve(Matrix::Identity(l.cols(), l.cols()));
  const Matrix lk = llt.matrixL();
  w.logdet_k = 2.0 * lk.diagonal().array().log().sum();
  return w;
}

void check_inputs(const Matrix& cov, int rank) {
  const int d = static_cast<int>(cov.rows());
  if (!rank_is_admissible(d, rank)) {
    throw Error(ErrorKind::RankTooLarge, "rank " + std::to_string(rank) + " violates (d-M)^2 >= d+M for d = " +
                                             std::to_string(d));
  }
  const double scale = std::max(cov.diagonal().maxCoeff(), 0.0);
  for (int i = 0; i < d; ++i)
    if (!(cov(i, i) > 1e-14 * scale) || scale == 0.0) {
      throw Error(ErrorKind::DegenerateColumn, "coordinate " + std::to_string(i) + " has zero variance");
    }
}

}  // namespace

double factor_loglik(const Matrix& l, const Vector& psi, const Matrix& cov, double n_obs) {
  const double d = static_cast<double>(cov.rows());
  const WoodburyParts w = woodbury(l, psi);
  const double logdet = psi.array().log().sum() + w.logdet_k;
  // tr(Sigma^{-1} S) = tr(Psi^{-1} S) - tr(K^{-1} L^T Psi^{-1} S Psi^{-1} L)
  const double tr1 = (cov.diagonal().array() / psi.array()).sum();
  const Matrix a = w.lt_psi_inv * cov * w.lt_psi_inv.transpose();
  const double tr2 = (w.k_inv.array() * a.array()).sum();
  return -0.5 * n_obs * (d * std::log(2.0 * std::numbers::pi) + logdet + tr1 - tr2);
}

Matrix canonical_loadings(const Matrix& loadings, const Vector& uniquenesses) {
  const Matrix g = loadings.transpose() * uniquenesses.cwiseInverse().asDiagonal() * loadings;
  const SymEig eig = sym_eig(g);
  Matrix l = loadings * eig.vectors;
  for (Eigen::Index c = 0; c < l.cols(); ++c) {
    Eigen::Index idx = 0;
    l.col(c).cwiseAbs().maxCoeff(&idx);
    if (l(idx, c) < 0) l.col(c) *= -1.0;
  }
  return l;
}

FactorModel fit_factor_model(const Matrix& residuals, int rank, NoiseMode mode, const FactorFitOptions& opts) {
  if (residuals.rows() < 3) {
    throw Error(ErrorKind::InsufficientReplicates,
                "factor model needs at least 3 replicates, got " + std::to_string(residuals.rows()));
  }
  const Matrix cov = sample_covariance(residuals, opts.center);
  return fit_factor_model_cov(cov, static_cast<double>(residuals.rows()), rank, mode, opts);
}

FactorModel fit_factor_model_cov(const Matrix& cov_in, double n_obs, int rank, NoiseMode mode,
                                 const FactorFitOptions& opts) {
  const Matrix cov = symmetrize(cov_in);
  check_inputs(cov, rank);
  const int d = static_cast<int>(cov.rows());
  const Vector floor = kPsiFloor * cov.diagonal();

  // Isotropic closed form; also the EM starting point.
  const SymEig eig = sym_eig(cov);
  double sigma2 = eig.values.tail(d - rank).mean();
  sigma2 = std::max(sigma2, kPsiFloor * cov.trace() / d);
  Vector top = (eig.values.head(rank).array() - sigma2).max(0.0).sqrt();
  Matrix l = eig.vectors.leftCols(rank) * top.asDiagonal();
  Vector psi = Vector::Constant(d, sigma2);

  FactorModel model;
  model.noise_mode = mode;
  model.rank = rank;

  if (mode == NoiseMode::Diagonal) {
    psi = psi.cwiseMax(floor);
    double ll = factor_loglik(l, psi, cov, n_obs);
    bool converged = false;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
      const WoodburyParts w = woodbury(l, psi);
      const Matrix beta = w.k_inv * w.lt_psi_inv;  // L^T Sigma^{-1}
      const Matrix s_beta_t = cov * beta.transpose();
      const Matrix ezz = Matrix::Identity(rank, rank) - beta * l + beta * s_beta_t;
      const Matrix l_new = s_beta_t * ezz.ldlt().solve(Matrix::Identity(rank, rank));
      Vector psi_new = (cov.diagonal() - (l_new.array() * s_beta_t.array()).rowwise().sum().matrix());
      psi_new = psi_new.cwiseMax(floor);
      const double ll_new = factor_loglik(l_new, psi_new, cov, n_obs);
      assert(ll_new >= ll - 1e-9 * std::abs(ll) - 1e-9);
      l = l_new;
      psi = psi_new;
      const double change = std::abs(ll_new - ll) / std::max(std::abs(ll), 1e-300);
      ll = ll_new;
      if (change < opts.tol) {
        converged = true;
        ++it;
        break;
      }
    }
    model.converged = converged;
    model.iterations = it;
    if (!converged) log(LogLevel::Warn, "factor EM did not reach tolerance in " + std::to_string(it) + " iterations");
  }

  model.loadings = canonical_loadings(l, psi);
  model.uniquenesses = psi;
  model.loglik = factor_loglik(model.loadings, psi, cov, n_obs);

  // A diagonal covariance is fit exactly by zero loadings, and then equally
  // well by any Heywood-type loading set. Keep the zero solution in that case.
  if (mode == NoiseMode::Diagonal) {
    const Vector diag = cov.diagonal();
    const Matrix none = Matrix::Zero(d, rank);
    const double ll_null = factor_loglik(none, diag, cov, n_obs);
    if (model.loglik - ll_null <= 1e-9 * std::max(1.0, std::abs(ll_null))) {
      model.loadings = none;
      model.uniquenesses = diag;
      model.loglik = ll_null;
    }
  }
  return model;
}

PosteriorMoments posterior_moments(const Matrix& loadings, const Vector& uniquenesses) {
  const auto m = loadings.cols();
  const Matrix lt_psi_inv = loadings.transpose() * uniquenesses.cwiseInverse().asDiagonal();
  Matrix k = Matrix::Identity(m, m) + lt_psi_inv * loadings;
  PosteriorMoments out;
  out.cov = symmetrize(k.ldlt().solve(Matrix::Identity(m, m)));
  out.mean_operator = out.cov * lt_psi_inv;
  out.sigma_d = loadings * loadings.transpose();
  out.sigma_d.diagonal() += uniquenesses;
  return out;
}

PosteriorMoments posterior_moments(const FactorModel& model) {
  return posterior_moments(model.loadings, model.uniquenesses);
}

RankSelection select_rank(const Matrix& residuals, RankMethod method, int max_rank, std::uint64_t seed,
                          int permutations) {
  const int r = static_cast<int>(residuals.rows());
  const int d = static_cast<int>(residuals.cols());
  if (max_rank < 1 || max_rank >= std::min(r, d)) {
    throw Error(ErrorKind::InvalidArgument, "max_rank must be in [1, min(R, d))");
  }
  if (!rank_is_admissible(d, max_rank)) {
    throw Error(ErrorKind::RankTooLarge, "max_rank violates the counting condition");
  }
  RankSelection out;
  out.method = method;
  out.eigenvalues = sym_eig(sample_covariance(residuals, true)).values;
  const Vector& lam = out.eigenvalues;

  switch (method) {
    case RankMethod::EigenRatio: {
      double best = -1;
      for (int k = 1; k <= max_rank; ++k) {
        const double denom = lam(k);
        const double ratio = denom > 0 ? lam(k - 1) / denom : std::numeric_limits<double>::infinity();
        out.scores.push_back(ratio);
        if (ratio > best) {
          best = ratio;
          out.rank = k;
        }
      }
      break;
    }
    case RankMethod::InfoCriterion: {
      const double dd = d, rr = r;
      const double penalty = (dd + rr) / (dd * rr) * std::log(dd * rr / (dd + rr));
      double best = std::numeric_limits<double>::infinity();
      for (int k = 1; k <= max_rank; ++k) {
        const double v = std::max(lam.tail(d - k).sum() / dd, std::numeric_limits<double>::min());
        const double ic = std::log(v) + k * penalty;
        out.scores.push_back(ic);
        if (ic < best) {
          best = ic;
          out.rank = k;
        }
      }
      break;
    }
    case RankMethod::ParallelAnalysis: {
      Rng rng(seed);
      Matrix perm_eigs(permutations, max_rank);
      Matrix shuffled = residuals;
      std::vector<int> idx(static_cast<std::size_t>(r));
      for (int b = 0; b < permutations; ++b) {
        for (int c = 0; c < d; ++c) {
          for (int i = 0; i < r; ++i) idx[static_cast<std::size_t>(i)] = i;
          for (int i = r - 1; i > 0; --i) {
            const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
          }
          for (int i = 0; i < r; ++i) shuffled(i, c) = residuals(idx[static_cast<std::size_t>(i)], c);
        }
        perm_eigs.row(b) = sym_eig(sample_covariance(shuffled, true)).values.head(max_rank).transpose();
      }
      for (int k = 0; k < max_rank; ++k) {
        std::vector<double> col(perm_eigs.col(k).data(), perm_eigs.col(k).data() + permutations);
        std::sort(col.begin(), col.end());
        const double pos = 0.95 * (permutations - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, col.size() - 1);
        const double q = col[lo] + (pos - static_cast<double>(lo)) * (col[hi] - col[lo]);
        out.thresholds.push_back(q);
        out.scores.push_back(lam(k) - q);
      }
      out.rank = 0;
      while (out.rank < max_rank && lam(out.rank) > out.thresholds[static_cast<std::size_t>(out.rank)]) ++out.rank;
      break;
    }
  }
  return out;
}

}  // namespace fcausal
