#pragma once

// Reference routines used only by the tests. They are deliberately written
// with plain loops and no Eigen decompositions so they fail independently of
// the library code they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Gaussian elimination with partial pivoting; solves A X = B.
inline Mat gauss_solve(Mat a, Mat b) {
  const int n = static_cast<int>(a.rows());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (std::abs(a(piv, c)) < 1e-300) throw std::runtime_error("singular");
    a.row(c).swap(a.row(piv));
    b.row(c).swap(b.row(piv));
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c) / a(c, c);
      for (int k = c; k < n; ++k) a(r, k) -= f * a(c, k);
      for (int k = 0; k < b.cols(); ++k) b(r, k) -= f * b(c, k);
    }
  }
  for (int r = 0; r < n; ++r) b.row(r) /= a(r, r);
  return b;
}

inline Mat inverse(const Mat& a) { return gauss_solve(a, Mat::Identity(a.rows(), a.cols())); }

// Cyclic Jacobi eigenvalue iteration for symmetric matrices. Returns
// eigenvalues sorted descending and the matching eigenvectors as columns.
inline std::pair<Vec, Mat> jacobi_eigen(Mat a, int sweeps = 100) {
  const int n = static_cast<int>(a.rows());
  Mat v = Mat::Identity(n, n);
  const double scale = a.squaredNorm();
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * scale) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
  Vec vals(n);
  Mat vecs(n, n);
  for (int i = 0; i < n; ++i) {
    vals(i) = a(idx[i], idx[i]);
    vecs.col(i) = v.col(idx[i]);
  }
  return {vals, vecs};
}

inline Mat sym_pow(const Mat& a, double p) {
  auto [w, v] = jacobi_eigen(a);
  for (int i = 0; i < w.size(); ++i) w(i) = std::pow(w(i), p);
  return v * w.asDiagonal() * v.transpose();
}

// Covariance with divisor R, rows are replicates.
inline Mat covariance(const Mat& x) {
  const int r = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
  Mat out = Mat::Zero(d, d);
  std::vector<double> mean(d, 0.0);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < r; ++i) mean[j] += x(i, j);
    mean[j] /= r;
  }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      double s = 0.0;
      for (int i = 0; i < r; ++i) s += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
      out(a, b) = s / r;
    }
  return out;
}

// OLS coefficients through the normal equations.
inline Vec ols(const Mat& x, const Vec& y) {
  return gauss_solve(x.transpose() * x, x.transpose() * y).col(0);
}

// Orthogonal matrix from Gram-Schmidt on a Gaussian draw, with a random
// reflection so both determinant signs appear.
inline Mat random_orthogonal(std::mt19937_64& gen, int m) {
  std::normal_distribution<double> n01;
  Mat q(m, m);
  for (int j = 0; j < m; ++j) {
    Vec v(m);
    for (int i = 0; i < m; ++i) v(i) = n01(gen);
    for (int k = 0; k < j; ++k) v -= q.col(k).dot(v) * q.col(k);
    q.col(j) = v / v.norm();
  }
  return q;
}

inline Mat random_normal(std::mt19937_64& gen, int r, int c) {
  std::normal_distribution<double> n01;
  Mat out(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out(i, j) = n01(gen);
  return out;
}

inline double max_abs(const Mat& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace oracle
