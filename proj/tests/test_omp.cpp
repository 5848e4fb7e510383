#include <doctest.h>

#include <algorithm>
#include <vector>

#include "cvomp/error.hpp"
#include "cvomp/omp.hpp"
#include "oracles.hpp"

using namespace cvomp;

namespace {

void check_trace(const OmpTrace& t) {
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    CHECK(t.records[i].p == static_cast<Index>(i + 1));
    CHECK(t.records[i].coefficients.size() == t.records[i].p);
    if (i > 0) CHECK(t.records[i].residual_sq <= t.records[i - 1].residual_sq + 1e-12);
  }
  std::vector<Index> sorted = t.order;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
}

}  // namespace

TEST_CASE("orthonormal dictionary picks the right column in one step") {
  const Matrix Q = oracle::orthonormal_columns(10, 6, 1);
  const Vector y = 3.0 * Q.col(2);
  SupportSolve s(y);
  const auto step = omp_step(Q, y, s);
  CHECK(step.status == StepResult::Status::advanced);
  CHECK(step.index == 2);
  CHECK(s.residual().norm() < 1e-14);
  CHECK(omp_step(Q, y, s).status == StepResult::Status::zero_residual);
}

TEST_CASE("correlation ties go to the smallest index") {
  Matrix A = Matrix::Identity(3, 3);
  const Vector y = Vector::Ones(3);
  SupportSolve s(y);
  CHECK(omp_step(A, y, s).index == 0);
  CHECK(omp_step(A, y, s).index == 1);
}

TEST_CASE("noiseless one-sparse signal is recovered in one step") {
  const auto p = generate_problem({40, 20, 5, 1}, 0.0, MatrixEnsemble::gaussian(20), 2);
  const auto t = run_omp(p, StoppingRule::iterations(5));
  CHECK(t.order.front() == p.signal.support.front());
  CHECK(t.records.front().recovery_error.value() < 1e-24);
  CHECK(t.termination == Termination::zero_residual);
  CHECK(t.records.size() == 1);
}

TEST_CASE("two-sparse support against exhaustive search") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrix A = oracle::gaussian_matrix(8, 16, 1.0 / 8, seed);
    const Vector y = oracle::gaussian_vector(8, 100 + seed);
    const auto t = run_omp(A, y, StoppingRule::iterations(2));
    REQUIRE(t.records.size() == 2);
    const auto best = oracle::best_support(A, y, 2);
    const Vector c = oracle::normal_equations(A, y, best);
    CHECK((y - oracle::columns(A, best) * c).squaredNorm() <= t.records.back().residual_sq + 1e-12);
  }
  const Matrix A = oracle::gaussian_matrix(60, 80, 1.0 / 60, 3);
  Vector x = Vector::Zero(80);
  x[4] = 1.5;
  x[9] = -1.1;
  const Vector y = A * x;
  const auto t = run_omp(A, y, StoppingRule::iterations(2));
  REQUIRE(t.records.size() == 2);
  std::vector<Index> got = t.order;
  std::sort(got.begin(), got.end());
  CHECK(got == oracle::best_support(A, y, 2));
  CHECK(got == std::vector<Index>{4, 9});
}

TEST_CASE("k iterations recover a noiseless signal exactly") {
  const auto p = generate_problem({256, 128, 20, 10}, 0.0, MatrixEnsemble::gaussian(128), 4);
  const auto t = run_omp(p, StoppingRule::iterations(10));
  check_trace(t);
  REQUIRE(t.records.size() == 10);
  CHECK(t.records.back().residual_sq < 1e-16 * p.y.squaredNorm());
  CHECK(std::is_permutation(t.order.begin(), t.order.end(), p.signal.support.begin()));
}

TEST_CASE("residual threshold stops at the first record below tau") {
  const auto p = generate_problem({200, 100, 20, 8}, 0.2, MatrixEnsemble::gaussian(100), 5);
  const double tau = 0.04;
  const auto t = run_omp(p, StoppingRule::residual_below(tau));
  check_trace(t);
  REQUIRE(!t.records.empty());
  CHECK(t.records.back().residual_sq < tau);
  for (std::size_t i = 0; i + 1 < t.records.size(); ++i) CHECK(t.records[i].residual_sq >= tau);
}

TEST_CASE("relative residual rule caps at M iterations") {
  const auto p = generate_problem({200, 60, 20, 8}, 0.1, MatrixEnsemble::gaussian(60), 6);
  const auto t = run_omp(p.A, p.y, StoppingRule::relative(1e-5, 25));
  CHECK(t.records.size() <= 25);
  CHECK(t.termination == Termination::rule_satisfied);
}

TEST_CASE("invalid rules are rejected") {
  const auto p = generate_problem({20, 10, 5, 2}, 0.0, MatrixEnsemble::gaussian(10), 7);
  CHECK_THROWS_AS(run_omp(p, StoppingRule::iterations(0)), InvalidArgument);
  CHECK_THROWS_AS(run_omp(p, StoppingRule::iterations(11)), InvalidArgument);
  CHECK_THROWS_AS(run_omp(p, StoppingRule::residual_below(-1.0)), InvalidArgument);
  CHECK_THROWS_AS(run_omp(p, StoppingRule::relative(1e-5, 11)), InvalidArgument);
}

TEST_CASE("first_stop reproduces a separate run under each rule") {
  const auto p = generate_problem({300, 120, 30, 15}, 0.15, MatrixEnsemble::gaussian(120), 8);
  const auto full = run_omp(p.A, p.y, StoppingRule::iterations(120));
  const StoppingRule rules[] = {StoppingRule::iterations(30), StoppingRule::residual_below(0.15 * 0.15),
                                StoppingRule::relative(1e-5, 120), StoppingRule::relative(0.3, 100)};
  for (const auto& rule : rules) {
    const auto direct = run_omp(p.A, p.y, rule);
    const auto stop = first_stop(full, rule, 120);
    REQUIRE(stop.has_value());
    CHECK(*stop == static_cast<Index>(direct.records.size()));
    CHECK(std::equal(direct.order.begin(), direct.order.end(), full.order.begin()));
    CHECK(full.record(*stop).coefficients == direct.records.back().coefficients);
  }
}

TEST_CASE("CV and oracle selection are argmins with early ties") {
  const std::vector<double> v{3.0, 1.0, 2.0, 1.0};
  CHECK(argmin_iteration(v) == 2);
  CHECK_FALSE(argmin_iteration(std::vector<double>{}).has_value());

  const auto p = generate_problem({200, 80, 30, 10}, 0.1, MatrixEnsemble::gaussian(80), 9);
  const auto r = run_omp_cv(p, 40);
  const auto& t = r.trace;
  check_trace(t);
  std::vector<double> cv, err;
  for (const auto& rec : t.records) {
    cv.push_back(*rec.cv_residual);
    err.push_back(*rec.recovery_error);
  }
  CHECK(t.selected_cv == argmin_iteration(cv));
  CHECK(t.selected_oracle == argmin_iteration(err));
  CHECK(r.estimate == t.estimate(*t.selected_cv, 200));
  for (std::size_t i = 0; i < cv.size(); ++i) {
    const Vector xh = t.estimate(static_cast<Index>(i + 1), 200);
    CHECK(cv[i] == doctest::Approx((p.y_cv - p.A_cv * xh).squaredNorm()).epsilon(1e-10));
    CHECK(err[i] == doctest::Approx((p.signal.values - xh).squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("d = 1 selects the first iterate") {
  const auto p = generate_problem({50, 20, 10, 3}, 0.1, MatrixEnsemble::gaussian(20), 10);
  CHECK(run_omp_cv(p, 1).trace.selected_cv == 1);
}

TEST_CASE("noiseless OMP-CV returns the exact signal") {
  int exact = 0;
  const int trials = 200;
  for (int s = 0; s < trials; ++s) {
    const auto p = generate_problem({128, 64, 16, 6}, 0.0, MatrixEnsemble::gaussian(64), 100 + s);
    const auto r = run_omp_cv(p, 12);
    if (*r.trace.record(*r.trace.selected_cv).recovery_error < 1e-12) ++exact;
  }
  CHECK(exact >= 0.95 * trials);
}

TEST_CASE("CV stopping beats running to d on noisy problems") {
  int wins = 0;
  const int trials = 200;
  for (int s = 0; s < trials; ++s) {
    const auto p = generate_problem({256, 100, 30, 10}, 0.1, MatrixEnsemble::gaussian(100), 500 + s);
    const auto r = run_omp_cv(p, 40);
    const auto& t = r.trace;
    if (*t.record(*t.selected_cv).recovery_error <= *t.records.back().recovery_error) ++wins;
  }
  CHECK(wins >= 0.9 * trials);
}

TEST_CASE("CV residual curve dips then rises at the reference configuration") {
  const auto p = generate_problem({1000, 400, 48, 50}, 0.1, MatrixEnsemble::gaussian(400), 1);
  const auto r = run_omp_cv(p, 150);
  const auto& t = r.trace;
  REQUIRE(t.records.size() == 150);
  const Index o = *t.selected_cv;
  CHECK(o > 1);
  CHECK(o < 150);
  CHECK(*t.records.front().cv_residual > *t.record(o).cv_residual);
  CHECK(*t.records.back().cv_residual > *t.record(o).cv_residual);
  CHECK(*t.records.back().recovery_error > *t.record(*t.selected_oracle).recovery_error);
}

TEST_CASE("OMP is deterministic") {
  const auto p = generate_problem({150, 60, 20, 8}, 0.1, MatrixEnsemble::gaussian(60), 11);
  const auto a = run_omp_cv(p, 30);
  const auto b = run_omp_cv(p, 30);
  CHECK(a.trace.order == b.trace.order);
  CHECK(a.estimate == b.estimate);
}

TEST_CASE("noise power estimate") {
  const auto p = generate_problem({40, 20, 5, 3}, 0.0, MatrixEnsemble::gaussian(20), 12);
  CHECK(estimate_noise_power(p.A, p.y, p.signal.values) == doctest::Approx(0.0));
  CHECK(estimate_noise_power(p.A, p.y, Vector::Zero(40)) == doctest::Approx(p.y.squaredNorm() / 20));

  const double sigma = 0.5;
  const Index m = 20;
  std::vector<double> v;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto q = generate_problem({40, m, 1, 3}, sigma, MatrixEnsemble::gaussian(m), s);
    v.push_back(estimate_noise_power(q.A, q.y, q.signal.values));
  }
  const auto st = oracle::sample_stats(v);
  // E|n|^2 / m with E|n|^2 = sigma^2
  CHECK(std::abs(st.mean - sigma * sigma / m) < 5.0 * st.se_mean);
}
