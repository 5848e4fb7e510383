#include "cvomp/solver_core.hpp"

#include <algorithm>
#include <string>

#include "cvomp/error.hpp"

namespace cvomp {

SupportSolve::SupportSolve(const Vector& y) : rows_(y.size()), coefficients_(0), residual_(y) {}

Eigen::Map<const Matrix> SupportSolve::basis() const { return {q_.data(), rows_, size()}; }

Matrix SupportSolve::triangular_factor() const {
  const Index p = size();
  Matrix R = Matrix::Zero(p, p);
  std::size_t t = 0;
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i <= j; ++i) R(i, j) = r_[t++];
  return R;
}

// Classical Gram-Schmidt with one reorthogonalization pass.
void SupportSolve::orthogonalize(Vector& v, Vector& coeffs) const {
  const auto Q = basis();
  coeffs = Q.transpose() * v;
  v.noalias() -= Q * coeffs;
  const Vector again = Q.transpose() * v;
  v.noalias() -= Q * again;
  coeffs += again;
}

Vector SupportSolve::back_substitute(const Vector& rhs) const {
  const Index p = size();
  Vector c = rhs;
  // Column j of the packed factor starts at j(j+1)/2.
  for (Index j = p - 1; j >= 0; --j) {
    const std::size_t col = static_cast<std::size_t>(j * (j + 1) / 2);
    c[j] /= r_[col + static_cast<std::size_t>(j)];
    const double cj = c[j];
    for (Index i = 0; i < j; ++i) c[i] -= r_[col + static_cast<std::size_t>(i)] * cj;
  }
  return c;
}

Vector SupportSolve::project_out(const Vector& v) const {
  if (v.size() != rows_) throw InvalidArgument("project_out: vector length does not match rows");
  Vector w = v;
  Vector unused;
  if (size() > 0) orthogonalize(w, unused);
  return w;
}

Vector SupportSolve::pseudo_inverse_apply(const Vector& v) const {
  if (v.size() != rows_) throw InvalidArgument("pseudo_inverse_apply: vector length does not match rows");
  if (size() == 0) return Vector(0);
  Vector w = v;
  Vector coeffs;
  orthogonalize(w, coeffs);
  return back_substitute(coeffs);
}

void SupportSolve::append(Index index, const Eigen::Ref<const Vector>& column) {
  if (column.size() != rows_) throw InvalidArgument("append: column length does not match rows");
  if (std::find(support_.begin(), support_.end(), index) != support_.end()) {
    throw InvalidArgument("append: index " + std::to_string(index) + " already in support");
  }
  if (size() >= rows_) {
    throw DegenerateSupport("support of size " + std::to_string(size() + 1) + " exceeds " +
                            std::to_string(rows_) + " rows");
  }
  Vector v = column;
  Vector h;
  if (size() > 0) {
    orthogonalize(v, h);
  } else {
    h.resize(0);
  }
  const double pivot = v.norm();
  const double scale = std::max(max_pivot_, pivot);
  if (!(pivot > 0.0) || pivot < kRankTolerance * scale) {
    throw DegenerateSupport("column " + std::to_string(index) + " is numerically dependent on the support (pivot " +
                            std::to_string(pivot) + ")");
  }
  v /= pivot;

  q_.insert(q_.end(), v.data(), v.data() + rows_);
  r_.insert(r_.end(), h.data(), h.data() + h.size());
  r_.push_back(pivot);
  max_pivot_ = scale;
  support_.push_back(index);

  const double z = v.dot(residual_);
  qty_.push_back(z);
  residual_ -= z * v;

  Vector rhs = Eigen::Map<const Vector>(qty_.data(), size());
  coefficients_ = back_substitute(rhs);
}

SupportSolve least_squares_on_support(const Matrix& A, const Vector& y, std::span<const Index> support) {
  if (y.size() != A.rows()) throw InvalidArgument("least_squares_on_support: y length does not match A rows");
  return extend_support_solve(SupportSolve(y), A, support);
}

SupportSolve extend_support_solve(SupportSolve state, const Matrix& A, std::span<const Index> new_indices) {
  if (A.rows() != state.rows()) throw InvalidArgument("extend_support_solve: A rows do not match the fit");
  for (Index j : new_indices) {
    if (j < 0 || j >= A.cols()) throw InvalidArgument("column index " + std::to_string(j) + " out of range");
    state.append(j, A.col(j));
  }
  return state;
}

Vector project_orthogonal(const Matrix& A, std::span<const Index> support, const Vector& v) {
  if (v.size() != A.rows()) throw InvalidArgument("project_orthogonal: vector length does not match A rows");
  Vector zero = Vector::Zero(A.rows());
  const SupportSolve fit = least_squares_on_support(A, zero, support);
  return fit.project_out(v);
}

}  // namespace cvomp
