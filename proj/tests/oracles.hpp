#pragma once

// Reference computations used by the unit and acceptance tests. These are
// deliberately naive (normal equations, explicit projectors, enumeration,
// SVD) and share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix columns(const Matrix& A, const std::vector<Index>& T) {
  Matrix out(A.rows(), static_cast<Index>(T.size()));
  for (std::size_t i = 0; i < T.size(); ++i) out.col(static_cast<Index>(i)) = A.col(T[i]);
  return out;
}

inline Matrix gaussian_matrix(Index rows, Index cols, double variance, std::uint64_t seed) {
  std::mt19937 rng(static_cast<std::uint32_t>(seed * 2654435761u + 17u));
  std::normal_distribution<double> n(0.0, std::sqrt(variance));
  Matrix A(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) A(i, j) = n(rng);
  return A;
}

inline Vector gaussian_vector(Index n, std::uint64_t seed) { return gaussian_matrix(n, 1, 1.0, seed).col(0); }

// rows x cols with orthonormal columns (rows >= cols).
inline Matrix orthonormal_columns(Index rows, Index cols, std::uint64_t seed) {
  const Matrix G = gaussian_matrix(rows, cols, 1.0, seed);
  Eigen::HouseholderQR<Matrix> qr(G);
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

// argmin_c |y - A_T c| through the normal equations.
inline Vector normal_equations(const Matrix& A, const Vector& y, const std::vector<Index>& T) {
  if (T.empty()) return Vector(0);
  const Matrix B = columns(A, T);
  return (B.transpose() * B).llt().solve(B.transpose() * y);
}

// I - A_T (A_T' A_T)^{-1} A_T'.
inline Matrix explicit_projector(const Matrix& A, const std::vector<Index>& T) {
  const Index m = A.rows();
  if (T.empty()) return Matrix::Identity(m, m);
  const Matrix B = columns(A, T);
  return Matrix::Identity(m, m) - B * (B.transpose() * B).inverse() * B.transpose();
}

// Block update of a least-squares fit on T by the columns `extra`:
// delta = (B' P_T B)^{-1} B' P_T y for the new block and c_T - A_T^+ B delta
// for the old one. Returned in the order [T, extra].
inline Vector block_update(const Matrix& A, const Vector& y, const std::vector<Index>& T,
                           const std::vector<Index>& extra) {
  const Matrix AT = columns(A, T);
  const Matrix B = columns(A, extra);
  const Matrix P = explicit_projector(A, T);
  const Vector delta = (B.transpose() * P * B).inverse() * (B.transpose() * P * y);
  Vector out(static_cast<Index>(T.size() + extra.size()));
  if (!T.empty()) {
    const Matrix pinv = (AT.transpose() * AT).inverse() * AT.transpose();
    out.head(static_cast<Index>(T.size())) = pinv * y - pinv * B * delta;
  }
  out.tail(static_cast<Index>(extra.size())) = delta;
  return out;
}

// Calls f on every k-subset of {0..n-1} in lexicographic order.
inline void for_each_subset(Index n, Index k, const std::function<void(const std::vector<Index>&)>& f) {
  std::vector<Index> c(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) c[static_cast<std::size_t>(i)] = i;
  if (k > n) return;
  while (true) {
    f(c);
    Index i = k - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++c[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  }
}

// Support of size k minimizing the least-squares residual.
inline std::vector<Index> best_support(const Matrix& A, const Vector& y, Index k) {
  std::vector<Index> best;
  double best_r = INFINITY;
  for_each_subset(A.cols(), k, [&](const std::vector<Index>& T) {
    const Vector c = normal_equations(A, y, T);
    const double r = (y - columns(A, T) * c).squaredNorm();
    if (r < best_r) {
      best_r = r;
      best = T;
    }
  });
  return best;
}

// delta_k from the extreme singular values of every k-column submatrix.
inline double ric_by_svd(const Matrix& A, Index k) {
  double d = 0.0;
  for_each_subset(A.cols(), k, [&](const std::vector<Index>& T) {
    Eigen::JacobiSVD<Matrix> svd(columns(A, T));
    const auto& s = svd.singularValues();
    const double hi = s(0) * s(0), lo = s(s.size() - 1) * s(s.size() - 1);
    d = std::max({d, hi - 1.0, 1.0 - lo});
  });
  return d;
}

inline double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double se_mean = 0.0;
  double se_variance = 0.0;  // sqrt((m4 - s^4 (n-3)/(n-1)) / n)
};

inline SampleStats sample_stats(const std::vector<double>& v) {
  SampleStats s;
  const double n = static_cast<double>(v.size());
  for (double x : v) s.mean += x;
  s.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  s.variance = m2 / (n - 1.0);
  m4 /= n;
  s.se_mean = std::sqrt(s.variance / n);
  s.se_variance = std::sqrt(std::max(0.0, m4 - s.variance * s.variance * (n - 3.0) / (n - 1.0)) / n);
  return s;
}

// Standard normal CDF by Simpson integration of the density.
inline double normal_cdf(double u) {
  if (u < 0) return 1.0 - normal_cdf(-u);
  const int n = 20000;
  const double h = u / n;
  auto f = [](double t) { return std::exp(-0.5 * t * t); };
  double s = f(0) + f(u);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return 0.5 + s * h / 3.0 / std::sqrt(2.0 * M_PI);
}

}  // namespace oracle
