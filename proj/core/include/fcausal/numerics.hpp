#pragma once

// Small dense linear-algebra helpers shared by every module.

#include <Eigen/Dense>

#include "fcausal/random.hpp"

namespace fcausal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Eigendecomposition of a symmetric matrix, eigenvalues in descending order.
struct SymEig {
  Vector values;
  Matrix vectors;  // orthonormal columns
};

SymEig sym_eig(const Matrix& a);

/// Default eigenvalue floor for sym_inv_sqrt: 1e-10 * trace(A) / d.
double default_ridge(const Matrix& a);

/// Principal inverse square root S of a symmetric PD matrix (S A S = I).
/// Eigenvalues below `ridge` are floored at `ridge` before inversion.
/// Throws NotPositiveDefinite when min eigenvalue + ridge <= 0.
Matrix sym_inv_sqrt(const Matrix& a, double ridge);

/// Principal square root of a symmetric PSD matrix (negative eigenvalues clamp to 0).
Matrix sym_sqrt(const Matrix& a);

/// (1/R) sum_r (v_r - vbar)(v_r - vbar)^T over the rows of `replicates`
/// (R x d). Without demeaning, the uncentered second moment. R >= 2.
Matrix sample_covariance(const Matrix& replicates, bool demean = true);

/// Number of singular values above rel_tol * sigma_max.
int numerical_rank(const Matrix& a, double rel_tol = 1e-8);

/// sigma_min / sigma_max (0 for empty or zero matrices).
double inverse_condition(const Matrix& a);

/// Nearest orthogonal matrix in Frobenius norm (U V^T from the SVD).
Matrix polar_factor(const Matrix& a);

/// Haar-distributed random orthogonal matrix.
Matrix random_orthogonal(Rng& rng, int m);

/// Least-squares coefficients for design (n x k) against one or more
/// right-hand sides. `ridge_diag` (length k, may be empty) adds a diagonal
/// penalty to the normal equations; without it a rank-revealing QR is used.
Matrix least_squares(const Matrix& design, const Matrix& rhs, const Vector& ridge_diag = Vector());

/// Symmetrizes in place: (A + A^T) / 2.
inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace fcausal
