#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cvomp/cv_theory.hpp"
#include "cvomp/error.hpp"
#include "cvomp/omp.hpp"
#include "oracles.hpp"

using namespace cvomp;

namespace {

// Draws |A_cv e|^2 for `draws` Gaussian m_cv x n blocks of entry variance 1/m.
std::vector<double> resample_energy(const Vector& e, Index m, Index m_cv, int draws, std::uint64_t seed,
                                    bool rademacher = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
  std::bernoulli_distribution coin(0.5);
  const double r = 1.0 / std::sqrt(static_cast<double>(m));
  std::vector<double> out(static_cast<std::size_t>(draws));
  for (auto& v : out) {
    double s = 0.0;
    for (Index i = 0; i < m_cv; ++i) {
      double row = 0.0;
      for (Index j = 0; j < e.size(); ++j) row += (rademacher ? (coin(rng) ? r : -r) : n(rng)) * e[j];
      s += row * row;
    }
    v = s;
  }
  return out;
}

// Paired residual difference |A_cv e_p|^2 - |A_cv e_q|^2 with a shared block.
std::vector<double> resample_diff(const Vector& ep, const Vector& eq, Index m, Index m_cv, int draws,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
  std::vector<double> out(static_cast<std::size_t>(draws));
  for (auto& v : out) {
    double s = 0.0;
    for (Index i = 0; i < m_cv; ++i) {
      double a = 0.0, b = 0.0;
      for (Index j = 0; j < ep.size(); ++j) {
        const double g = n(rng);
        a += g * ep[j];
        b += g * eq[j];
      }
      s += a * a - b * b;
    }
    v = s;
  }
  return out;
}

bool within(double value, double target, double se, double z) { return std::abs(value - target) <= z * se; }

}  // namespace

TEST_CASE("phi and erf") {
  CHECK(phi(0.0) == 0.5);
  CHECK(cvomp::erf(0.0) == 0.0);
  CHECK(phi(4.0) == doctest::Approx(0.9999683).epsilon(1e-7));
  for (double u : {-3.7, -1.2, -0.3, 0.4, 1.0, 2.5, 5.0}) {
    CHECK(std::abs(phi(u) - oracle::normal_cdf(u)) < 1e-7);
    CHECK(std::abs(phi(-u) - (1.0 - phi(u))) < 1e-15);
    CHECK(std::abs(cvomp::erf(u / std::sqrt(2.0)) - (2.0 * oracle::normal_cdf(u) - 1.0)) < 1e-7);
  }
  double prev = 0.0;
  for (double u = -8.0; u <= 8.0; u += 0.01) {
    CHECK(phi(u) >= prev);
    prev = phi(u);
  }
  // 100 competing iterates at lambda0 = 4
  CHECK(1.0 - 100.0 * (1.0 - phi(4.0)) == doctest::Approx(0.997).epsilon(1e-3));
}

TEST_CASE("CV residual distribution") {
  const auto z = cv_residual_distribution(0.0, 0.0, 10, 5);
  CHECK(z.mean == 0.0);
  CHECK(z.variance == 0.0);
  const auto g = cv_residual_distribution(1.0, 0.0, 100, 50);
  CHECK(g.mean == doctest::Approx(0.5));
  CHECK(g.variance == doctest::Approx(0.01));
  const auto h = cv_residual_distribution(0.3, 0.2, 96, 48);
  CHECK(h.mean == doctest::Approx(48.0 / 96.0 * 0.34));
  CHECK(h.variance == doctest::Approx(2.0 * 48.0 / (96.0 * 96.0) * 0.34 * 0.34));
  CHECK_THROWS_AS(cv_residual_distribution(-1.0, 0.0, 10, 5), InvalidArgument);
}

TEST_CASE("CV residual distribution against Monte Carlo") {
  Vector e(5);
  e << 0.6, -0.4, 0.3, 0.5, -0.3742;
  e /= e.norm();
  const auto v = resample_energy(e, 100, 50, 100000, 1);
  const auto st = oracle::sample_stats(v);
  CHECK(within(st.mean, 0.5, st.se_mean, 3.0));
  CHECK(within(st.variance, 0.01, st.se_variance, 3.0));
}

TEST_CASE("CV difference distribution") {
  const auto same = cv_diff_distribution({1.3, 1.3, 1.0}, 100, 50);
  CHECK(same.mean == 0.0);
  CHECK(same.variance == doctest::Approx(0.0));
  const auto g = cv_diff_distribution({2.0, 1.0, 0.0}, 100, 50);
  CHECK(g.mean == doctest::Approx(0.5));
  CHECK(g.variance == doctest::Approx(0.05));

  Vector ep(2), eq(2);
  ep << std::sqrt(2.0), 0.0;
  eq << 0.0, 1.0;
  const auto v = resample_diff(ep, eq, 100, 50, 100000, 2);
  const auto st = oracle::sample_stats(v);
  CHECK(within(st.mean, 0.5, st.se_mean, 3.0));
  CHECK(within(st.variance, 0.05, st.se_variance, 3.0));
}

TEST_CASE("ensemble-generalized distributions") {
  Vector dx(4);
  dx << 0.5, -0.2, 0.1, 0.7;
  const Index m = 96, m_cv = 48;
  const double gauss = 2.0 / (m * m);
  const auto base = cv_residual_distribution(dx.squaredNorm(), 0.1, m, m_cv);
  const auto gen = generalized_cv_distribution(dx, 0.1, m, m_cv, gauss);
  CHECK(gen.mean == doctest::Approx(base.mean).epsilon(1e-14));
  CHECK(gen.variance == doctest::Approx(base.variance).epsilon(1e-14));
  const auto rad = generalized_cv_distribution(dx, 0.1, m, m_cv, 0.0);
  CHECK(rad.mean == doctest::Approx(base.mean));
  CHECK(rad.variance < base.variance);

  Vector dq(4);
  dq << 0.4, -0.1, 0.0, 0.6;
  const auto pair = generalized_pair_from_traces(dx, Vector::Zero(4), dx - dq, 0.1);
  const auto d0 = cv_diff_distribution(pair, m, m_cv);
  const auto d1 = generalized_cv_diff_distribution(dx, dq, 0.1, m, m_cv, gauss);
  CHECK(d1.mean == doctest::Approx(d0.mean).epsilon(1e-12));
  CHECK(d1.variance == doctest::Approx(d0.variance).epsilon(1e-12));
  CHECK(generalized_cv_diff_distribution(dx, dq, 0.1, m, m_cv, 0.0).variance < d0.variance);
}

TEST_CASE("Rademacher CV residual variance falls below the Gaussian one") {
  const Index m = 96, m_cv = 48;
  Vector dx = oracle::gaussian_vector(50, 3);
  dx /= dx.norm();
  const auto v = resample_energy(dx, m, m_cv, 100000, 4, true);
  const auto st = oracle::sample_stats(v);
  const auto gauss = cv_residual_distribution(1.0, 0.0, m, m_cv);
  const auto rad = generalized_cv_distribution(dx, 0.0, m, m_cv, 0.0);
  CHECK(gauss.variance - st.variance > 3.0 * st.se_variance);
  CHECK(within(st.variance, rad.variance, st.se_variance, 5.0));
}

TEST_CASE("distribution z-tests on random fixed estimates") {
  const Index m = 96, m_cv = 48;
  const double sigma = 0.1;
  for (int t = 0; t < 20; ++t) {
    // error vector over a 30-column union, with the noise scale appended
    Vector e(31);
    e.head(30) = 0.2 * oracle::gaussian_vector(30, 100 + t);
    e[30] = sigma;
    Vector f = e;
    f.head(30) += 0.05 * oracle::gaussian_vector(30, 200 + t);
    const int draws = 10000;
    const auto v = resample_energy(e, m, m_cv, draws, 300 + t);
    const auto g = cv_residual_distribution(e.head(30).squaredNorm(), sigma, m, m_cv);
    const auto st = oracle::sample_stats(v);
    CHECK(within(st.mean, g.mean, st.se_mean, 5.0));
    CHECK(within(st.variance, g.variance, st.se_variance, 5.0));

    const auto dv = resample_diff(e, f, m, m_cv, draws, 400 + t);
    const double ep = e.squaredNorm(), eq = f.squaredNorm();
    const double rho = e.dot(f) / std::sqrt(ep * eq);
    const auto dg = cv_diff_distribution(ep >= eq ? GeneralizedErrorPair{ep, eq, rho} : GeneralizedErrorPair{eq, ep, rho},
                                         m, m_cv);
    const auto ds = oracle::sample_stats(dv);
    CHECK(within(ds.mean, ep >= eq ? dg.mean : -dg.mean, ds.se_mean, 5.0));
    CHECK(within(ds.variance, dg.variance, ds.se_variance, 5.0));
  }
}

TEST_CASE("estimation interval") {
  const auto iv = estimation_interval(0.1, 3.0, 400, 80, 0.0);
  CHECK(interval_factor(3.0, 400, 80, true) == doctest::Approx(3.39134).epsilon(1e-5));
  CHECK(interval_factor(3.0, 400, 80, false) == doctest::Approx(9.51188).epsilon(1e-5));
  CHECK(iv.lower == doctest::Approx(0.339134).epsilon(1e-5));
  CHECK(iv.upper == doctest::Approx(0.951188).epsilon(1e-5));
  CHECK(iv.confidence == doctest::Approx(0.9973).epsilon(1e-4));

  const auto flat = estimation_interval(0.2, 0.0, 100, 25, 0.1);
  CHECK(flat.lower == doctest::Approx(0.7));
  CHECK(flat.upper == doctest::Approx(0.7));
  CHECK(flat.confidence == 0.0);

  CHECK(interval_factor(2.0, 200, 50, false) == doctest::Approx(4.0 / 0.6));
  CHECK(estimation_interval(0.01, 3.0, 400, 80, 0.5).lower == 0.0);
  CHECK_THROWS_AS(estimation_interval(0.1, 6.0, 400, 50, 0.0), InfeasibleParameter);

  double prev = INFINITY;
  for (Index mcv = 20; mcv <= 200; mcv += 10) {
    const auto w = estimation_interval(0.1 * mcv / 80.0, 3.0, 400, mcv, 0.0);
    CHECK(w.upper - w.lower < prev);
    prev = w.upper - w.lower;
  }
}

TEST_CASE("comparison success") {
  const auto r1 = comparison_success({2.0, 1.0, 1.0}, 48);
  CHECK(r1.lambda == doctest::Approx(std::sqrt(24.0)));
  CHECK(r1.lambda == doctest::Approx(4.899).epsilon(1e-4));
  CHECK(comparison_success({1.5, 1.5, 0.3}, 48).probability == 0.5);
  const auto r = comparison_success({2.0, 1.0, 0.0}, 48);
  CHECK(r.lambda == doctest::Approx(1.0 / std::sqrt(2.0 / 48.0 * 5.0)));
  CHECK(r.lambda == doctest::Approx(2.191).epsilon(1e-3));
  CHECK(r.probability == doctest::Approx(0.9858).epsilon(1e-4));
  CHECK_THROWS_AS(comparison_success({1.0, 2.0, 0.0}, 48), InvalidArgument);

  double prev = 0.0;
  for (Index mcv = 10; mcv <= 100; mcv += 10) {
    const double p = comparison_success({2.0, 1.0, 0.5}, mcv).probability;
    CHECK(p > prev);
    prev = p;
  }
  prev = 0.0;
  for (double rho : {0.0, 0.3, 0.6, 0.9, 0.99}) {
    const double p = comparison_success({2.0, 1.0, rho}, 48).probability;
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("minimum error ratio") {
  CHECK(min_ratio_for_confidence(4.0, 48, 1.0) == doctest::Approx(1.0));
  const double c1 = error_ratio_threshold(4.0, 48, 0.0376);
  CHECK(c1 == doctest::Approx(1.47).epsilon(0.005 / 1.47));
  const double c0 = 9.0 / 32.0;
  CHECK(min_ratio_for_confidence(3.0, 50, 0.0) == doctest::Approx(2 * c0 + 1 + 2 * std::sqrt(c0 * c0 + c0)));
  CHECK(min_ratio_for_confidence(3.0, 50, 0.0) == doctest::Approx(2.763).epsilon(1e-3));
  CHECK_THROWS_AS(min_ratio_for_confidence(5.0, 50, 0.0), InfeasibleParameter);

  for (double lambda0 : {1.0, 2.5, 4.0})
    for (Index mcv : {48, 80, 200})
      for (double rho : {0.0, 0.5, 0.9, 0.99}) {
        const double ratio = min_ratio_for_confidence(lambda0, mcv, rho);
        const auto s = comparison_success({ratio, 1.0, rho}, mcv);
        CHECK(std::abs(s.probability - phi(lambda0)) < 1e-9);
      }
}

TEST_CASE("eta bound") {
  CHECK(eta_bound(RicTable::uniform(0.0, 10), 1, 2, 0) == 0.0);
  const double e = eta_bound(RicTable::uniform(0.1, 10), 1, 2, 0);
  CHECK(e == doctest::Approx(0.01265).epsilon(0.0002 / 0.01265));
  CHECK(e <= 0.0127);
  auto by_hand = [](double d) {
    const double r = d / (1 - d);
    return (d * d + std::pow(d * d / (1 - d), 2)) / ((1 - d) * (1 - d) * (1 - r * r));
  };
  CHECK(e == doctest::Approx(by_hand(0.1)).epsilon(1e-14));
  CHECK(eta_bound(RicTable::uniform(0.05, 10), 1, 2, 0) == doctest::Approx(0.00279).epsilon(0.005));

  // distinct subscripts: q-p=2, q=5, p=3, c+q-p+1=5, c+p+1=6 with c=2
  RicTable t({{2, 0.02}, {3, 0.04}, {5, 0.08}, {6, 0.09}});
  const double got = eta_bound(t, 3, 5, 2);
  const double want = (0.08 * 0.08 + std::pow(0.08 * 0.09 / 0.96, 2)) /
                      (0.98 * 0.98 * (1 - std::pow(0.08 / 0.92, 2)));
  CHECK(got == doctest::Approx(want).epsilon(1e-14));

  CHECK_THROWS_AS(eta_bound(RicTable::uniform(0.6, 10), 1, 2, 0), InfeasibleParameter);
  CHECK_THROWS_AS(eta_bound(RicTable::uniform(0.1, 10), 2, 2, 0), InvalidArgument);
  CHECK_THROWS_AS(eta_bound(RicTable::uniform(0.1, 2), 1, 2, 3), InvalidArgument);
}

TEST_CASE("theorem constants") {
  auto betas = [](double d, double eta) {
    const double rk = d / (1 - d), ro = d / (1 - d);
    struct B {
      double b1, b2, b3, b4, b5;
    } b;
    b.b1 = 2 * (std::pow(1 + rk * rk, 2) * eta + (1 + rk * rk) * rk * rk + (1 + ro * ro));
    b.b2 = 2 * ((1 + rk * rk) * rk * rk * eta + std::pow(rk, 4) + (1 + ro * ro) * eta);
    b.b3 = 2 * d * d / std::pow(1 - d, 2);
    b.b4 = (1 + ro * ro) * eta + b.b3 * std::sqrt(eta);
    b.b5 = (1 - d * d / std::pow(1 - d, 2) * std::sqrt(eta)) / std::sqrt((rk * rk + 1) * (rk * rk + eta + 1));
    return b;
  };

  const auto z = theorem4_constants(0.0, 0.0);
  CHECK(z.beta1 == doctest::Approx(2.0));
  CHECK(z.beta2 == 0.0);
  CHECK(z.beta3 == 0.0);
  CHECK(z.beta4 == 0.0);
  CHECK(z.rho_lb == doctest::Approx(1.0));
  CHECK(z.beta5_eff == doctest::Approx(0.0));

  const double eta = eta_bound(RicTable::uniform(0.1, 10), 1, 2, 0);
  const auto c = theorem4_constants(0.1, eta);
  const auto b = betas(0.1, eta);
  CHECK(c.beta1 == doctest::Approx(b.b1).epsilon(1e-13));
  CHECK(c.beta2 == doctest::Approx(b.b2).epsilon(1e-13));
  CHECK(c.beta3 == doctest::Approx(b.b3).epsilon(1e-13));
  CHECK(c.beta4 == doctest::Approx(b.b4).epsilon(1e-13));
  CHECK(c.rho_lb == doctest::Approx(b.b5).epsilon(1e-13));
  CHECK(std::abs(c.beta1 - 2.08) < 0.01);
  CHECK(std::abs(c.beta2 - 0.03) < 0.01);
  CHECK(std::abs(c.beta3 - 0.03) < 0.01);
  CHECK(std::abs(c.beta4 - 0.02) < 0.01);
  CHECK(std::abs(c.beta5_eff - 0.0376) < 0.005);
  CHECK(c.beta1 > 10 * std::max({c.beta2, c.beta3, c.beta4}));
  CHECK(c.beta5_eff >= 0.0);
  CHECK(c.beta5_eff <= 1.0);

  CHECK_THROWS_AS(theorem4_constants(RicTable::uniform(1.2, 5), 0.01, {1, 1, 1}), InvalidArgument);
}

TEST_CASE("g(alpha) and the lambda lower bound") {
  const double eta = eta_bound(RicTable::uniform(0.1, 10), 1, 2, 0);
  const auto c = theorem4_constants(0.1, eta);
  CHECK(g_alpha(0.0, c) == 1.0);
  CHECK(lambda_lower_bound(0.0, 48, c) == 0.0);
  const double f1 = 1.0 - phi(lambda_lower_bound(1.0, 48, c));
  CHECK(f1 < 0.005);
  const double f2 = 1.0 - phi(lambda_lower_bound(2.0, 48, c));
  CHECK(f2 > 6.3e-5 / 2);
  CHECK(f2 < 6.3e-5 * 2);

  const double a = 1.7;
  const double top = c.beta1 * a * a + c.beta2;
  const double gap = std::max(a * a - c.beta3 * a - c.beta4, 0.0);
  CHECK(g_alpha(a, c) == doctest::Approx(top / (top + gap * gap)));
  CHECK(lambda_lower_bound(a, 48, c) == doctest::Approx(std::sqrt(24.0) * std::sqrt(1 - top / (top + gap * gap))));
  CHECK(g_alpha(5.0, c) == doctest::Approx(c.beta1 / (25.0 + c.beta1)).epsilon(0.1));
}

TEST_CASE("generalized pairs") {
  const Vector x = oracle::gaussian_vector(10, 5);
  const Vector xh = x + 0.1 * oracle::gaussian_vector(10, 6);
  const auto same = generalized_pair_from_traces(x, xh, xh, 0.2);
  CHECK(same.rho_g == doctest::Approx(1.0));
  CHECK(same.eps_g_p == doctest::Approx((x - xh).squaredNorm() + 0.04));

  Vector a = x, b = x;
  a[0] -= 1.0;
  b[1] -= 2.0;
  const auto orth = generalized_pair_from_traces(x, a, b, 0.0);
  CHECK(orth.rho_g == doctest::Approx(0.0));
  CHECK(orth.eps_g_p == doctest::Approx(1.0));
  CHECK(orth.eps_g_q == doctest::Approx(4.0));
  CHECK_THROWS_AS(generalized_pair_from_traces(x, x, a, 0.0), InvalidArgument);
}

TEST_CASE("neighbouring OMP iterates are highly correlated past the sparsity level") {
  int high = 0, total = 0, early_high = 0, early = 0;
  const Index k = 10;
  for (int s = 0; s < 100; ++s) {
    const auto p = generate_problem({256, 100, 20, k}, 0.1, MatrixEnsemble::gaussian(100), 900 + s);
    const auto t = run_omp(p.A, p.y, StoppingRule::iterations(30));
    for (Index q = 1; q + 1 <= static_cast<Index>(t.records.size()); ++q) {
      const auto pair = generalized_pair_from_traces(p.signal.values, t.estimate(q, 256), t.estimate(q + 1, 256), 0.1);
      if (q > k) {
        ++total;
        if (pair.rho_g > 0.9) ++high;
      } else {
        ++early;
        if (pair.rho_g > 0.9) ++early_high;
      }
    }
  }
  CHECK(total > 0);
  CHECK(high >= 0.99 * total);
  // while support is still being acquired each step removes a large error component
  CHECK(early_high < 0.5 * early);
}
