#include <doctest.h>

#include <vector>

#include "cvomp/error.hpp"
#include "cvomp/solver_core.hpp"
#include "oracles.hpp"

using namespace cvomp;

namespace {

void check_invariants(const Matrix& A, const Vector& y, const SupportSolve& s) {
  const Matrix AT = oracle::columns(A, s.support());
  const Vector fit = AT * s.coefficients();
  CHECK(oracle::relative_error(y - fit, s.residual()) < 1e-10);
  if (s.size() > 0) CHECK((AT.transpose() * s.residual()).cwiseAbs().maxCoeff() <= 1e-10 * y.norm());
  CHECK(std::abs(y.squaredNorm() - fit.squaredNorm() - s.residual_sq()) <= 1e-8 * y.squaredNorm());
}

}  // namespace

TEST_CASE("orthonormal columns give exact coefficients") {
  const Matrix Q = oracle::orthonormal_columns(8, 5, 1);
  const Vector y = 2.0 * Q.col(3);
  const std::vector<Index> T{3};
  const auto s = least_squares_on_support(Q, y, T);
  REQUIRE(s.coefficients().size() == 1);
  CHECK(s.coefficients()[0] == doctest::Approx(2.0));
  CHECK(s.residual().norm() < 1e-14);
}

TEST_CASE("empty support leaves the residual at y") {
  const Matrix A = oracle::gaussian_matrix(5, 7, 1.0, 2);
  const Vector y = oracle::gaussian_vector(5, 3);
  const auto s = least_squares_on_support(A, y, {});
  CHECK(s.coefficients().size() == 0);
  CHECK(s.residual() == y);
  CHECK(s.size() == 0);
}

TEST_CASE("direct solve matches the normal equations") {
  const Matrix A = oracle::gaussian_matrix(6, 8, 1.0 / 6, 4);
  const Vector y = oracle::gaussian_vector(6, 5);
  const std::vector<Index> T{1, 4, 6};
  const auto s = least_squares_on_support(A, y, T);
  CHECK(oracle::relative_error(s.coefficients(), oracle::normal_equations(A, y, T)) < 1e-10);
  check_invariants(A, y, s);
  const Matrix R = s.triangular_factor();
  CHECK((s.basis() * R - oracle::columns(A, T)).norm() < 1e-12);
  CHECK((Matrix(s.basis()).transpose() * s.basis() - Matrix::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("extension by nothing is the identity") {
  const Matrix A = oracle::gaussian_matrix(10, 16, 0.1, 6);
  const Vector y = oracle::gaussian_vector(10, 7);
  const std::vector<Index> T{2, 9};
  const auto s = least_squares_on_support(A, y, T);
  const auto e = extend_support_solve(s, A, {});
  CHECK(e.support() == s.support());
  CHECK(e.coefficients() == s.coefficients());
  CHECK(e.residual() == s.residual());
}

TEST_CASE("orthogonal blocks do not interact") {
  const Matrix Q = oracle::orthonormal_columns(12, 6, 8);
  const Vector y = oracle::gaussian_vector(12, 9);
  const std::vector<Index> T{0, 1}, extra{4, 5};
  const auto s = least_squares_on_support(Q, y, T);
  const auto e = extend_support_solve(s, Q, extra);
  CHECK(oracle::relative_error(e.coefficients().head(2), s.coefficients()) < 1e-12);
  CHECK(e.coefficients()[2] == doctest::Approx(Q.col(4).dot(y)));
  CHECK(e.coefficients()[3] == doctest::Approx(Q.col(5).dot(y)));
}

TEST_CASE("incremental extension equals the direct solve and the block formula") {
  const Matrix A = oracle::gaussian_matrix(10, 16, 0.1, 10);
  const Vector y = oracle::gaussian_vector(10, 11);
  const std::vector<Index> T{1, 5}, extra{9};
  const auto e = extend_support_solve(least_squares_on_support(A, y, T), A, extra);
  const std::vector<Index> all{1, 5, 9};
  const auto d = least_squares_on_support(A, y, all);
  CHECK(oracle::relative_error(e.coefficients(), d.coefficients()) < 1e-8);
  CHECK(oracle::relative_error(e.residual(), d.residual()) < 1e-8);
  CHECK(oracle::relative_error(e.coefficients(), oracle::block_update(A, y, T, extra)) < 1e-8);
  CHECK(oracle::relative_error(e.coefficients(), oracle::normal_equations(A, y, all)) < 1e-8);
}

TEST_CASE("many random extensions agree with direct solves") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index m = 20 + static_cast<Index>(seed % 7), N = 40;
    const Matrix A = oracle::gaussian_matrix(m, N, 1.0 / m, 1000 + seed);
    const Vector y = oracle::gaussian_vector(m, 2000 + seed);
    std::vector<Index> T, extra;
    for (Index j = 0; j < 5; ++j) T.push_back((static_cast<Index>(seed) * 7 + 3 * j) % N);
    for (Index j = 0; j < 4; ++j) extra.push_back((static_cast<Index>(seed) * 7 + 3 * j + 1) % N);
    const auto base = least_squares_on_support(A, y, T);
    const auto e = extend_support_solve(base, A, extra);
    std::vector<Index> all = T;
    all.insert(all.end(), extra.begin(), extra.end());
    CHECK(oracle::relative_error(e.coefficients(), oracle::normal_equations(A, y, all)) < 1e-8);
    CHECK(oracle::relative_error(e.coefficients(), oracle::block_update(A, y, T, extra)) < 1e-8);
    check_invariants(A, y, e);
    CHECK(e.residual().norm() <= base.residual().norm() + 1e-12);
  }
}

TEST_CASE("projection matches the explicit projector") {
  const Matrix A = oracle::gaussian_matrix(9, 14, 1.0 / 9, 12);
  const Vector v = oracle::gaussian_vector(9, 13);
  const std::vector<Index> T{0, 3, 7, 11};
  const Vector p = project_orthogonal(A, T, v);
  CHECK(oracle::relative_error(p, oracle::explicit_projector(A, T) * v) < 1e-10);
  CHECK(oracle::relative_error(project_orthogonal(A, T, p), p) < 1e-10);
  CHECK((oracle::columns(A, T).transpose() * p).cwiseAbs().maxCoeff() < 1e-10 * v.norm());

  const Vector in_span = oracle::columns(A, T) * oracle::gaussian_vector(4, 14);
  CHECK(project_orthogonal(A, T, in_span).norm() < 1e-12 * in_span.norm());
  CHECK(project_orthogonal(A, {}, v) == v);
}

TEST_CASE("pseudo-inverse application") {
  const Matrix A = oracle::gaussian_matrix(9, 14, 1.0 / 9, 15);
  const Vector v = oracle::gaussian_vector(9, 16);
  const std::vector<Index> T{2, 5, 8};
  const auto s = least_squares_on_support(A, v, T);
  CHECK(oracle::relative_error(s.pseudo_inverse_apply(v), oracle::normal_equations(A, v, T)) < 1e-10);
}

TEST_CASE("dependent columns are reported as degenerate") {
  Matrix A = oracle::gaussian_matrix(6, 4, 1.0, 17);
  A.col(2) = 2.0 * A.col(0) - A.col(1);
  const Vector y = oracle::gaussian_vector(6, 18);
  const std::vector<Index> T{0, 1, 2};
  CHECK_THROWS_AS(least_squares_on_support(A, y, T), DegenerateSupport);
  const std::vector<Index> dup{0, 0};
  CHECK_THROWS_AS(least_squares_on_support(A, y, dup), InvalidArgument);

  const Matrix wide = oracle::gaussian_matrix(2, 4, 1.0, 19);
  const std::vector<Index> three{0, 1, 2};
  CHECK_THROWS_AS(least_squares_on_support(wide, oracle::gaussian_vector(2, 20), three), DegenerateSupport);
}
