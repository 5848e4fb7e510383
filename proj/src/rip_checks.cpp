#include "cvomp/rip_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "cvomp/error.hpp"
#include "cvomp/omp.hpp"
#include "cvomp/rng.hpp"
#include "cvomp/solver_core.hpp"

namespace cvomp {

std::string to_string(const RicMode& mode) {
  if (mode.kind == RicMode::Kind::exhaustive) return "exhaustive";
  return "sampled(" + std::to_string(mode.n_supports) + ")";
}

double binomial_count(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

double support_deviation(const Matrix& gram, std::span<const Index> support) {
  const Index s = static_cast<Index>(support.size());
  Matrix sub(s, s);
  for (Index i = 0; i < s; ++i)
    for (Index j = 0; j < s; ++j) sub(i, j) = gram(support[i], support[j]);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sub, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  return std::max(ev[s - 1] - 1.0, 1.0 - ev[0]);
}

namespace {

bool next_combination(std::vector<Index>& c, Index n) {
  const Index k = static_cast<Index>(c.size());
  Index i = k - 1;
  while (i >= 0 && c[i] == n - k + i) --i;
  if (i < 0) return false;
  ++c[i];
  for (Index j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  return true;
}

RicEstimate ric_from_gram(const Matrix& gram, Index k, const RicMode& mode) {
  const Index N = gram.rows();
  if (k < 1 || k > N) throw InvalidArgument("RIC order k must satisfy 1 <= k <= N");
  RicEstimate est;
  est.k = k;
  est.mode = mode;
  if (mode.kind == RicMode::Kind::exhaustive) {
    const double count = binomial_count(N, k);
    if (count > kExhaustiveCap) {
      throw InvalidArgument("exhaustive RIC for k = " + std::to_string(k) + " needs C(" + std::to_string(N) + ", " +
                            std::to_string(k) + ") supports, above the cap of " +
                            std::to_string(static_cast<long long>(kExhaustiveCap)) + "; use sampled mode");
    }
    std::vector<Index> c(static_cast<std::size_t>(k));
    std::iota(c.begin(), c.end(), Index{0});
    do {
      est.delta_k = std::max(est.delta_k, support_deviation(gram, c));
      ++est.supports_inspected;
    } while (next_combination(c, N));
  } else {
    if (mode.n_supports < 1) throw InvalidArgument("sampled RIC mode needs at least one support");
    Engine eng = make_engine(mode.seed, static_cast<std::uint64_t>(k));
    std::vector<Index> all(static_cast<std::size_t>(N));
    std::iota(all.begin(), all.end(), Index{0});
    std::vector<Index> c;
    for (Index t = 0; t < mode.n_supports; ++t) {
      c.clear();
      std::sample(all.begin(), all.end(), std::back_inserter(c), k, eng);
      est.delta_k = std::max(est.delta_k, support_deviation(gram, c));
      ++est.supports_inspected;
    }
  }
  return est;
}

}  // namespace

RicEstimate estimate_ric(const Matrix& A, Index k, const RicMode& mode) {
  if (k > A.rows()) throw InvalidArgument("RIC order k must satisfy k <= m");
  const Matrix gram = A.transpose() * A;
  return ric_from_gram(gram, k, mode);
}

std::vector<RicEstimate> estimate_ric_family(const Matrix& A, Index k_max, const RicMode& mode) {
  if (k_max > A.rows()) throw InvalidArgument("RIC order k must satisfy k <= m");
  const Matrix gram = A.transpose() * A;
  std::vector<RicEstimate> out;
  double running = 0.0;
  for (Index k = 1; k <= k_max; ++k) {
    RicEstimate e = ric_from_gram(gram, k, mode);
    running = std::max(running, e.delta_k);
    e.delta_k = running;
    out.push_back(e);
  }
  return out;
}

RicTable to_table(std::span<const RicEstimate> family) {
  RicTable t;
  for (const auto& e : family) t.set(e.k, e.delta_k);
  return t;
}

Index LemmaReport::total_violations() const {
  Index v = 0;
  for (const auto& c : checks) v += c.violations;
  return v;
}

const LemmaCheck& LemmaReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw InvalidArgument("no lemma check named " + name);
}

namespace {

struct Tally {
  std::map<std::string, LemmaCheck> by_name;
  std::vector<std::string> order;

  void record(const std::string& name, double slack) {
    auto& c = entry(name);
    ++c.trials;
    c.min_slack = c.trials == 1 ? slack : std::min(c.min_slack, slack);
    if (slack < kSlackTolerance) ++c.violations;
  }
  void skip(const std::string& name) { ++entry(name).skipped; }

  LemmaCheck& entry(const std::string& name) {
    auto [it, fresh] = by_name.try_emplace(name);
    if (fresh) {
      it->second.name = name;
      order.push_back(name);
    }
    return it->second;
  }
};

Matrix gather_columns(const Matrix& A, std::span<const Index> idx) {
  Matrix out(A.rows(), static_cast<Index>(idx.size()));
  for (Index j = 0; j < out.cols(); ++j) out.col(j) = A.col(idx[j]);
  return out;
}

}  // namespace

LemmaReport check_consequence_lemmas(const Matrix& A, std::span<const RicEstimate> rics, Index trials,
                                     std::uint64_t seed) {
  if (trials < 0) throw InvalidArgument("trials must be non-negative");
  const RicTable table = to_table(rics);
  Index s_max = 0;
  bool advisory = false;
  for (const auto& e : rics) {
    s_max = std::max(s_max, e.k);
    advisory = advisory || e.lower_bound_only();
  }
  if (s_max < 2) throw InvalidArgument("lemma checks need RICs up to at least subscript 2");
  s_max = std::min(s_max, A.cols());

  Engine eng = make_engine(seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Index> all(static_cast<std::size_t>(A.cols()));
  std::iota(all.begin(), all.end(), Index{0});

  Tally tally;
  for (const char* name : {"norm_lower", "norm_upper", "gram_lower", "gram_upper", "inverse_gram_lower",
                           "inverse_gram_upper", "orthogonality", "orthogonality_vector", "pseudo_inverse",
                           "projection_upper", "projection_lower"}) {
    tally.entry(name);
  }

  for (Index t = 0; t < trials; ++t) {
    // |S| + |T| = total, split with both parts non-empty.
    const Index total = std::uniform_int_distribution<Index>(2, s_max)(eng);
    const Index s_size = std::uniform_int_distribution<Index>(1, total - 1)(eng);
    const Index t_size = total - s_size;
    std::vector<Index> pick;
    std::sample(all.begin(), all.end(), std::back_inserter(pick), total, eng);
    std::shuffle(pick.begin(), pick.end(), eng);
    std::vector<Index> S(pick.begin(), pick.begin() + s_size);
    std::vector<Index> T(pick.begin() + s_size, pick.end());

    Vector x(t_size);
    for (Index i = 0; i < t_size; ++i) x[i] = normal(eng);
    const double xn = x.norm();

    const Matrix AT = gather_columns(A, T);
    const Matrix AS = gather_columns(A, S);
    const Vector ATx = AT * x;
    const double d_t = table.at(t_size);
    const double d_s = table.at(s_size);
    const double d_st = table.at(total);

    // Norm equivalences on T.
    tally.record("norm_lower", ATx.norm() - std::sqrt(std::max(0.0, 1.0 - d_t)) * xn);
    tally.record("norm_upper", std::sqrt(1.0 + d_t) * xn - ATx.norm());
    const Matrix gram = AT.transpose() * AT;
    const double gx = (gram * x).norm();
    tally.record("gram_lower", gx - (1.0 - d_t) * xn);
    tally.record("gram_upper", (1.0 + d_t) * xn - gx);
    if (d_t < 1.0) {
      const double ix = gram.ldlt().solve(x).norm();
      tally.record("inverse_gram_lower", ix - xn / (1.0 + d_t));
      tally.record("inverse_gram_upper", xn / (1.0 - d_t) - ix);
    } else {
      tally.skip("inverse_gram_lower");
      tally.skip("inverse_gram_upper");
    }

    // Approximate orthogonality between S and T.
    const Matrix cross = AS.transpose() * AT;
    const double op = Eigen::JacobiSVD<Matrix>(cross).singularValues()[0];
    tally.record("orthogonality", d_st - op);
    if (d_st < 1.0) {
      tally.record("orthogonality_vector", d_st * xn - (cross * x).norm());
    } else {
      tally.skip("orthogonality_vector");
    }

    if (d_st < 1.0 && d_s < 1.0) {
      const SupportSolve fit = least_squares_on_support(A, Vector::Zero(A.rows()), S);
      const double pinv = fit.pseudo_inverse_apply(ATx).norm();
      tally.record("pseudo_inverse", d_st / (1.0 - d_s) * xn - pinv);
    } else {
      tally.skip("pseudo_inverse");
    }

    const double proj = project_orthogonal(A, S, ATx).norm();
    tally.record("projection_upper", ATx.norm() - proj);
    const double ratio = d_st < 1.0 ? d_st / (1.0 - d_st) : std::numeric_limits<double>::infinity();
    if (ratio <= 1.0) {
      tally.record("projection_lower", proj - std::sqrt(1.0 - ratio * ratio) * ATx.norm());
    } else {
      tally.skip("projection_lower");
    }
  }

  LemmaReport report;
  report.advisory = advisory;
  for (const auto& name : tally.order) report.checks.push_back(tally.by_name.at(name));
  return report;
}

namespace {

// Over-determined instance (m > N is allowed here, unlike generate_problem).
SensingProblem tall_instance(const Dims& dims, double sigma_n, std::uint64_t seed) {
  SensingProblem p;
  p.dims = dims;
  p.sigma_n = sigma_n;
  p.ensemble = MatrixEnsemble::gaussian(dims.m);
  p.seed = seed;
  Engine eng = make_engine(seed, static_cast<std::uint64_t>(Stream::support));
  std::vector<Index> all(static_cast<std::size_t>(dims.N));
  std::iota(all.begin(), all.end(), Index{0});
  std::sample(all.begin(), all.end(), std::back_inserter(p.signal.support), dims.k, eng);
  std::normal_distribution<double> normal(0.0, 1.0);
  p.signal.values = Vector::Zero(dims.N);
  for (Index j : p.signal.support) p.signal.values[j] = normal(eng);
  p.A = draw_ensemble_matrix(dims.m, dims.N, p.ensemble, dims.m, seed, Stream::matrix);
  Engine noise_eng = make_engine(seed, static_cast<std::uint64_t>(Stream::noise));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dims.m));
  p.a_noise.resize(dims.m);
  for (Index i = 0; i < dims.m; ++i) p.a_noise[i] = scale * normal(noise_eng);
  p.y = p.A * p.signal.values + sigma_n * p.a_noise;
  return p;
}

}  // namespace

CorrectionBoundReport check_correction_bound(const CorrectionBoundOptions& opt) {
  if (opt.k < 1 || opt.instances < 0) throw InvalidArgument("correction bound check needs k >= 1");
  CorrectionBoundReport report;
  report.min_slack = std::numeric_limits<double>::infinity();
  const Dims dims{opt.N, opt.m, 1, opt.k};
  const Index iters = std::min(opt.k + 1, opt.m);
  const double s2 = opt.sigma_n * opt.sigma_n;

  for (Index inst = 0; inst < opt.instances; ++inst) {
    const SensingProblem prob = tall_instance(dims, opt.sigma_n, derive_seed(opt.seed, static_cast<std::uint64_t>(inst)));
    ++report.instances;
    const OmpTrace trace = run_omp(prob.A, prob.y, StoppingRule::iterations(iters));
    const Index len = static_cast<Index>(trace.records.size());
    const Vector& x = prob.signal.values;

    // Generalized matrix [A, a_n]; RICs computed on demand.
    Matrix G(opt.m, opt.N + 1);
    G << prob.A, prob.a_noise;
    const Matrix gram = G.transpose() * G;
    std::map<Index, double> deltas;
    auto table_for = [&](std::initializer_list<Index> subs) {
      RicTable t;
      for (Index s : subs) {
        if (s < 1) continue;
        auto it = deltas.find(s);
        if (it == deltas.end()) it = deltas.emplace(s, ric_from_gram(gram, s, RicMode::exhaustive()).delta_k).first;
        t.set(s, it->second);
      }
      return t;
    };

    for (Index q = 1; q <= len; ++q) {
      const auto Tq = trace.support(q);
      std::vector<Index> rest;  // T \ T^q
      for (Index j : prob.signal.support)
        if (std::find(Tq.begin(), Tq.end(), j) == Tq.end()) rest.push_back(j);
      const Index c = static_cast<Index>(rest.size());
      Vector r0 = prob.noise();
      for (Index j : rest) r0 += x[j] * prob.A.col(j);
      double rest_energy = s2;
      for (Index j : rest) rest_energy += x[j] * x[j];

      const auto& coeff_q = trace.record(q).coefficients;
      for (Index p = 0; p < q; ++p) {
        // Correction on T^{q-p} read off the q-th iterate.
        Vector measured(q - p);
        for (Index i = p; i < q; ++i) measured[i - p] = coeff_q[i] - x[Tq[static_cast<std::size_t>(i)]];

        // Closed form: regress P_{T^p} r0 on P_{T^p} A_{T^{q-p}}.
        const auto Tp = trace.support(p);
        const SupportSolve base = least_squares_on_support(prob.A, Vector::Zero(opt.m), Tp);
        Matrix PB(opt.m, q - p);
        for (Index i = p; i < q; ++i) PB.col(i - p) = base.project_out(prob.A.col(Tq[static_cast<std::size_t>(i)]));
        std::vector<Index> cols(static_cast<std::size_t>(q - p));
        std::iota(cols.begin(), cols.end(), Index{0});
        const SupportSolve corr = least_squares_on_support(PB, base.project_out(r0), cols);
        report.max_identity_error = std::max(report.max_identity_error, (corr.coefficients() - measured).norm());

        double eta = 0.0;
        try {
          const RicTable t = table_for({q - p, q, p, c + q - p + 1, c + p + 1});
          eta = eta_bound(t, p, q, c);
        } catch (const InfeasibleParameter&) {
          ++report.pairs_skipped;
          continue;
        }
        const double bound = eta * rest_energy;
        const double achieved = measured.squaredNorm();
        ++report.pairs_checked;
        const double slack = bound - achieved;
        report.min_slack = std::min(report.min_slack, slack);
        if (bound > 0.0) report.max_ratio = std::max(report.max_ratio, achieved / bound);
        if (slack < kSlackTolerance) ++report.violations;
      }
    }
  }
  if (report.pairs_checked == 0) report.min_slack = 0.0;
  return report;
}

}  // namespace cvomp
