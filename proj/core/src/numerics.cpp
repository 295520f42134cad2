#include "fcausal/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fcausal/error.hpp"

namespace fcausal {

SymEig sym_eig(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a));
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "symmetric eigendecomposition did not converge");
  }
  SymEig out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

double default_ridge(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  return 1e-10 * a.trace() / static_cast<double>(a.rows());
}

Matrix sym_inv_sqrt(const Matrix& a, double ridge) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::InvalidArgument, "sym_inv_sqrt needs a square matrix");
  if (ridge < 0) throw Error(ErrorKind::InvalidArgument, "ridge must be nonnegative");
  const SymEig eig = sym_eig(a);
  const double min_eig = eig.values.size() ? eig.values.minCoeff() : 1.0;
  if (min_eig + ridge <= 0.0) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "smallest eigenvalue " + std::to_string(min_eig) + " plus ridge is not positive");
  }
  Vector inv_root = eig.values.unaryExpr([ridge](double v) { return 1.0 / std::sqrt(std::max(v, ridge)); });
  return symmetrize(eig.vectors * inv_root.asDiagonal() * eig.vectors.transpose());
}

Matrix sym_sqrt(const Matrix& a) {
  const SymEig eig = sym_eig(a);
  Vector root = eig.values.unaryExpr([](double v) { return std::sqrt(std::max(v, 0.0)); });
  return symmetrize(eig.vectors * root.asDiagonal() * eig.vectors.transpose());
}

Matrix sample_covariance(const Matrix& replicates, bool demean) {
  const auto r = replicates.rows();
  if (r < 2) {
    throw Error(ErrorKind::InsufficientReplicates,
                "need at least 2 replicates, got " + std::to_string(r));
  }
  if (!demean) return symmetrize(replicates.transpose() * replicates / static_cast<double>(r));
  const Eigen::RowVectorXd mean = replicates.colwise().mean();
  const Matrix centered = replicates.rowwise() - mean;
  return symmetrize(centered.transpose() * centered / static_cast<double>(r));
}

int numerical_rank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0) return 0;
  return static_cast<int>((s.array() > rel_tol * s(0)).count());
}

double inverse_condition(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0) return 0.0;
  return s(s.size() - 1) / s(0);
}

Matrix polar_factor(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Matrix random_orthogonal(Rng& rng, int m) {
  Matrix z(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) z(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(m, m);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Sign convention that makes the distribution Haar.
  for (int j = 0; j < m; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

Matrix least_squares(const Matrix& design, const Matrix& rhs, const Vector& ridge_diag) {
  if (design.rows() != rhs.rows()) {
    throw Error(ErrorKind::InvalidArgument, "least_squares: design and rhs row counts differ");
  }
  if (ridge_diag.size() == 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    return qr.solve(rhs);
  }
  if (ridge_diag.size() != design.cols()) {
    throw Error(ErrorKind::InvalidArgument, "least_squares: ridge length must match design columns");
  }
  Matrix gram = design.transpose() * design;
  gram.diagonal() += ridge_diag;
  Eigen::LDLT<Matrix> ldlt(gram);
  return ldlt.solve(design.transpose() * rhs);
}

}  // namespace fcausal
