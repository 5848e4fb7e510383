#pragma once

#include <span>
#include <vector>

#include "cvomp/problem_gen.hpp"

namespace cvomp {

// Pivot threshold relative to the largest pivot seen so far.
inline constexpr double kRankTolerance = 1e-10;

// Least-squares fit of y on the columns A[:, support], kept as a thin QR
// factorization A_T = Q R that can be extended one column at a time in
// O(m |T|). Immutable once built; extension returns a new value.
class SupportSolve {
 public:
  // The empty fit: no columns, residual = y.
  explicit SupportSolve(const Vector& y);

  [[nodiscard]] const std::vector<Index>& support() const { return support_; }
  [[nodiscard]] Index size() const { return static_cast<Index>(support_.size()); }
  [[nodiscard]] Index rows() const { return rows_; }

  // Coefficients aligned with support() (selection order).
  [[nodiscard]] const Vector& coefficients() const { return coefficients_; }
  [[nodiscard]] const Vector& residual() const { return residual_; }
  [[nodiscard]] double residual_sq() const { return residual_.squaredNorm(); }

  // Orthonormal basis of span(A_T), m x |T|.
  [[nodiscard]] Eigen::Map<const Matrix> basis() const;
  // |T| x |T| upper-triangular factor.
  [[nodiscard]] Matrix triangular_factor() const;

  // (I - A_T A_T^+) v.
  [[nodiscard]] Vector project_out(const Vector& v) const;
  // A_T^+ v, aligned with support().
  [[nodiscard]] Vector pseudo_inverse_apply(const Vector& v) const;

  // Appends column `index` (values `column`). Throws DegenerateSupport if
  // the column is numerically inside the current span.
  void append(Index index, const Eigen::Ref<const Vector>& column);

 private:
  void orthogonalize(Vector& v, Vector& coeffs) const;
  Vector back_substitute(const Vector& rhs) const;

  Index rows_ = 0;
  std::vector<Index> support_;
  std::vector<double> q_;      // column-major m x p
  std::vector<double> r_;      // packed upper triangle, column by column
  std::vector<double> qty_;    // Q' y
  double max_pivot_ = 0.0;
  Vector coefficients_;
  Vector residual_;
};

SupportSolve least_squares_on_support(const Matrix& A, const Vector& y, std::span<const Index> support);

// Adds `new_indices` (disjoint from state.support()) to the fit.
SupportSolve extend_support_solve(SupportSolve state, const Matrix& A, std::span<const Index> new_indices);

// P_T v = (I - A_T A_T^+) v.
Vector project_orthogonal(const Matrix& A, std::span<const Index> support, const Vector& v);

}  // namespace cvomp
