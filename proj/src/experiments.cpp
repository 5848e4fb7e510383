#include "cvomp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>

#include <json.hpp>

#include "cvomp/error.hpp"
#include "cvomp/omp.hpp"
#include "cvomp/rng.hpp"

namespace cvomp {

// ---- result output ------------------------------------------------------

std::string ExperimentResult::data_rows() const {
  std::string out = "experiment,point,statistic,value,trials\n";
  const std::string exp = to_string(name);
  for (const auto& r : rows) {
    out += exp;
    out += ',';
    out += r.point;
    out += ',';
    out += r.statistic;
    out += ',';
    out += format_double(r.value);
    out += ',';
    out += std::to_string(r.trials);
    out += '\n';
  }
  return out;
}

std::string ExperimentResult::csv() const {
  std::string out;
  std::string echo = config.echo();
  std::size_t start = 0;
  while (start < echo.size()) {
    const auto nl = echo.find('\n', start);
    out += "# " + echo.substr(start, nl - start) + "\n";
    start = nl + 1;
  }
  return out + data_rows();
}

std::string ExperimentResult::metadata_json() const {
  nlohmann::ordered_json j;
  j["format"] = "cvomp-experiment";
  j["version"] = 1;
  j["experiment"] = to_string(name);
  j["seed"] = config.seed;
  j["config_hash"] = config.hash();
  nlohmann::ordered_json cfg;
  for (const auto& k : config.keys()) cfg[k] = config.get(k);
  j["config"] = cfg;
  j["columns"] = {"experiment", "point", "statistic", "value", "trials"};
  j["rows"] = rows.size();
  j["notes"] = notes;
  j["wall_seconds"] = wall_seconds;
  j["workers"] = workers;
  return j.dump(2) + "\n";
}

void ExperimentResult::write(const std::filesystem::path& path) const {
  auto dump = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << text;
  };
  dump(path, csv());
  auto sidecar = path;
  sidecar.replace_extension(".json");
  dump(sidecar, metadata_json());
}

std::optional<double> ExperimentResult::value(std::string_view point, std::string_view statistic) const {
  for (const auto& r : rows)
    if (r.point == point && r.statistic == statistic) return r.value;
  return std::nullopt;
}

double ExperimentResult::at(std::string_view point, std::string_view statistic) const {
  if (auto v = value(point, statistic)) return *v;
  throw InvalidArgument("no row (" + std::string(point) + ", " + std::string(statistic) + ")");
}

std::vector<std::string> ExperimentResult::points() const {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.point) == out.end()) out.push_back(r.point);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kResampleStream = 0x7265'7361'6d70ULL;
constexpr std::uint64_t kRetryStream = 0x7265'7472'79ULL;
constexpr Index kResampleBlock = 1000;

class Progress {
 public:
  Progress(const RunOptions& o, Index total) : fn_(o.progress), total_(total) {}
  void tick() {
    if (!fn_) return;
    std::lock_guard lock(mu_);
    fn_(++done_, total_);
  }

 private:
  std::function<void(Index, Index)> fn_;
  Index total_;
  Index done_ = 0;
  std::mutex mu_;
};

ExperimentResult start(const ExperimentConfig& c, const RunOptions& o) {
  c.validate();
  ExperimentResult r;
  r.name = c.name;
  r.config = c;
  r.workers = std::max<Index>(1, o.workers);
  return r;
}

void add_mean(ExperimentResult& r, const std::string& point, const std::string& label,
              std::span<const double> values) {
  const MeanEstimate e = mean_with_error(values);
  r.rows.push_back({point, label + "_mean", e.mean, e.count});
  r.rows.push_back({point, label + "_se", e.std_error, e.count});
}

std::uint64_t trial_seed(const ExperimentConfig& c, Index trial) {
  return derive_seed(c.seed, static_cast<std::uint64_t>(trial));
}

// cv[j][p - 1] = |y_cv[0:rows_j] - A_cv[0:rows_j] x^p|^2 for every record.
std::vector<std::vector<double>> prefix_cv_residuals(const OmpTrace& trace, const Matrix& A_cv, const Vector& y_cv,
                                                     std::span<const Index> rows) {
  const Index len = static_cast<Index>(trace.records.size());
  Matrix B(A_cv.rows(), len);
  for (Index i = 0; i < len; ++i) B.col(i) = A_cv.col(trace.order[static_cast<std::size_t>(i)]);
  std::vector<std::vector<double>> out(rows.size(), std::vector<double>(static_cast<std::size_t>(len)));
  Vector r(A_cv.rows());
  std::vector<double> cum(static_cast<std::size_t>(A_cv.rows()) + 1);
  for (Index p = 1; p <= len; ++p) {
    const auto& c = trace.record(p).coefficients;
    r = y_cv;
    r.noalias() -= B.leftCols(p) * c;
    cum[0] = 0.0;
    for (Index i = 0; i < r.size(); ++i) cum[static_cast<std::size_t>(i) + 1] = cum[static_cast<std::size_t>(i)] + r[i] * r[i];
    for (std::size_t j = 0; j < rows.size(); ++j) out[j][static_cast<std::size_t>(p - 1)] = cum[static_cast<std::size_t>(rows[j])];
  }
  return out;
}

// Recovery error of the run that `rule` would produce on (A, y), reusing
// `trace` when it is long enough.
double rule_error(const OmpTrace& trace, const std::vector<double>& errors, const StoppingRule& rule,
                  const Matrix& A, const Vector& y, const Vector& x) {
  if (auto p = first_stop(trace, rule, A.rows())) return errors[static_cast<std::size_t>(*p - 1)];
  const OmpTrace full = run_omp(A, y, rule);
  const auto e = recovery_errors(full, x);
  return e.empty() ? x.squaredNorm() : e.back();
}

bool covers_support(const OmpTrace& trace, Index p, const SparseSignal& s) {
  const auto Tp = trace.support(p);
  for (Index j : s.support)
    if (std::find(Tp.begin(), Tp.end(), j) == Tp.end()) return false;
  return true;
}

std::string point_name(const std::string& key, const std::string& value) { return key + "=" + value; }

// One entry of a CV block of ensemble `ens` with variance 1/m.
class EntrySampler {
 public:
  EntrySampler(EnsembleKind kind, Index m) : kind_(kind), scale_(1.0 / std::sqrt(static_cast<double>(m))) {}
  double operator()(Engine& eng) {
    if (kind_ == EnsembleKind::gaussian) return scale_ * normal_(eng);
    if (bits_left_ == 0) {
      bits_ = eng();
      bits_left_ = 64;
    }
    const bool up = bits_ & 1ULL;
    bits_ >>= 1;
    --bits_left_;
    return up ? scale_ : -scale_;
  }

 private:
  EnsembleKind kind_;
  double scale_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t bits_ = 0;
  int bits_left_ = 0;
};

}  // namespace

// ---- comparison calibration --------------------------------------------

double comparison_frequency(const GeneralizedErrorPair& pair, Index m, Index m_cv, Index draws, std::uint64_t seed,
                            Index workers) {
  if (draws < 1 || m < 1 || m_cv < 1) throw InvalidArgument("comparison_frequency needs positive sizes");
  const double sp = std::sqrt(pair.eps_g_p);
  const double sq = std::sqrt(pair.eps_g_q);
  const double rho = std::clamp(pair.rho_g, -1.0, 1.0);
  const double ortho = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  const Index blocks = (draws + kResampleBlock - 1) / kResampleBlock;
  std::vector<Index> wins(static_cast<std::size_t>(blocks), 0);
  parallel_for(blocks, workers, [&](Index b) {
    Engine eng = make_engine(seed, static_cast<std::uint64_t>(b));
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index n = std::min(kResampleBlock, draws - b * kResampleBlock);
    Index w = 0;
    for (Index t = 0; t < n; ++t) {
      double ep = 0.0;
      double eq = 0.0;
      for (Index i = 0; i < m_cv; ++i) {
        const double g1 = scale * normal(eng);
        const double g2 = scale * normal(eng);
        const double u = sp * g1;
        const double v = sq * (rho * g1 + ortho * g2);
        ep += u * u;
        eq += v * v;
      }
      if (ep >= eq) ++w;
    }
    wins[static_cast<std::size_t>(b)] = w;
  });
  Index total = 0;
  for (Index w : wins) total += w;
  return static_cast<double>(total) / static_cast<double>(draws);
}

// ---- lemma validation ---------------------------------------------------

ExperimentResult run_lemma_validation(const ExperimentConfig& c, const RunOptions& o) {
  ExperimentResult res = start(c, o);
  const auto t0 = Clock::now();
  const MatrixEnsemble ens = MatrixEnsemble::parse(c.ensemble, c.m);
  const Dims dims{c.N, c.m, c.m_cv, c.k};

  // Recovered signals x^p, x^q from one OMP run; reseed if it degenerates.
  SensingProblem prob;
  OmpTrace trace;
  Index retries = 0;
  for (;; ++retries) {
    if (retries > 20) throw DegenerateSupport("lemma_validation: OMP degenerated on 20 reseeded problems");
    const std::uint64_t s = retries == 0 ? c.seed : derive_seed(c.seed ^ kRetryStream, static_cast<std::uint64_t>(retries));
    prob = generate_problem(dims, c.sigma_n, ens, s);
    trace = run_omp(prob.A, prob.y, StoppingRule::iterations(c.q_iter));
    if (static_cast<Index>(trace.records.size()) == c.q_iter && !trace.flagged()) break;
  }
  const Vector& x = prob.signal.values;
  const Vector dxp = x - trace.estimate(c.p_iter, c.N);
  const Vector dxq = x - trace.estimate(c.q_iter, c.N);

  // Only columns where either error vector is non-zero affect the residuals.
  std::vector<Index> cols;
  for (Index j = 0; j < c.N; ++j)
    if (dxp[j] != 0.0 || dxq[j] != 0.0) cols.push_back(j);
  const Index u = static_cast<Index>(cols.size());
  Vector up(u), uq(u);
  for (Index i = 0; i < u; ++i) {
    up[i] = dxp[cols[static_cast<std::size_t>(i)]];
    uq[i] = dxq[cols[static_cast<std::size_t>(i)]];
  }

  const GaussianApprox th_p = generalized_cv_distribution(dxp, c.sigma_n, c.m, c.m_cv, ens.gamma);
  const GaussianApprox th_d = generalized_cv_diff_distribution(dxp, dxq, c.sigma_n, c.m, c.m_cv, ens.gamma);

  struct Block {
    Histogram hp, hd;
    double sum_p = 0, sq_p = 0, sum_d = 0, sq_d = 0;
  };
  const Index blocks = (c.resamples + kResampleBlock - 1) / kResampleBlock;
  std::vector<Block> out(static_cast<std::size_t>(blocks));
  Progress progress(o, blocks);
  const std::uint64_t stream_seed = derive_seed(prob.seed, kResampleStream);
  parallel_for(blocks, o.workers, [&](Index b) {
    Block blk{Histogram::around(th_p, c.bins), Histogram::around(th_d, c.bins)};
    Engine eng = make_engine(stream_seed, static_cast<std::uint64_t>(b));
    EntrySampler entry(ens.kind, c.m);
    std::normal_distribution<double> noise(0.0, 1.0 / std::sqrt(static_cast<double>(c.m)));
    const Index n = std::min(kResampleBlock, c.resamples - b * kResampleBlock);
    for (Index t = 0; t < n; ++t) {
      double ep = 0.0;
      double eq = 0.0;
      for (Index i = 0; i < c.m_cv; ++i) {
        double rp = 0.0;
        double rq = 0.0;
        for (Index j = 0; j < u; ++j) {
          const double a = entry(eng);
          rp += a * up[j];
          rq += a * uq[j];
        }
        const double nz = c.sigma_n * noise(eng);
        rp += nz;
        rq += nz;
        ep += rp * rp;
        eq += rq * rq;
      }
      const double dd = ep - eq;
      blk.hp.add(ep);
      blk.hd.add(dd);
      // Shifted sums keep the variance estimate well conditioned.
      blk.sum_p += ep - th_p.mean;
      blk.sq_p += (ep - th_p.mean) * (ep - th_p.mean);
      blk.sum_d += dd - th_d.mean;
      blk.sq_d += (dd - th_d.mean) * (dd - th_d.mean);
    }
    out[static_cast<std::size_t>(b)] = std::move(blk);
    progress.tick();
  });

  Block total{Histogram::around(th_p, c.bins), Histogram::around(th_d, c.bins)};
  for (const auto& blk : out) {
    total.hp.merge(blk.hp);
    total.hd.merge(blk.hd);
    total.sum_p += blk.sum_p;
    total.sq_p += blk.sq_p;
    total.sum_d += blk.sum_d;
    total.sq_d += blk.sq_d;
  }
  const double n = static_cast<double>(c.resamples);
  auto emit = [&](const std::string& point, const Histogram& h, const GaussianApprox& th, double sum, double sq) {
    const double mean_shift = sum / n;
    const double var = n > 1 ? (sq - n * mean_shift * mean_shift) / (n - 1.0) : 0.0;
    const Index R = c.resamples;
    res.rows.push_back({point, "kl", kl_divergence(h, th), R});
    res.rows.push_back({point, "empirical_mean", th.mean + mean_shift, R});
    res.rows.push_back({point, "empirical_variance", var, R});
    res.rows.push_back({point, "theory_mean", th.mean, R});
    res.rows.push_back({point, "theory_variance", th.variance, R});
    res.rows.push_back({point, "outside", static_cast<double>(h.outside), R});
    res.rows.push_back({point, "retries", static_cast<double>(retries), R});
    res.rows.push_back({point, "bin_lower", h.lower, R});
    res.rows.push_back({point, "bin_width", h.width, R});
    char label[32];
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      std::snprintf(label, sizeof label, "count_%03zu", i);
      res.rows.push_back({point, label, h.counts[i], R});
    }
    const double sd = th.stddev();
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double a = h.lower + h.width * static_cast<double>(i);
      std::snprintf(label, sizeof label, "theory_mass_%03zu", i);
      res.rows.push_back({point, label, phi((a + h.width - th.mean) / sd) - phi((a - th.mean) / sd), R});
    }
  };
  emit("eps_cv", total.hp, th_p, total.sum_p, total.sq_p);
  emit("delta_eps_cv", total.hd, th_d, total.sum_d, total.sq_d);

  const GeneralizedErrorPair pair = generalized_pair_from_traces(x, trace.estimate(c.p_iter, c.N),
                                                                 trace.estimate(c.q_iter, c.N), c.sigma_n);
  res.notes["kl_direction"] = "KL(theoretical || empirical)";
  res.notes["binning"] = "equal width, theoretical mean +- 5 std";
  res.notes["eps_x_p"] = format_double(dxp.squaredNorm());
  res.notes["eps_x_q"] = format_double(dxq.squaredNorm());
  res.notes["rho_g"] = format_double(pair.rho_g);
  res.notes["problem_seed"] = std::to_string(prob.seed);
  res.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

// ---- theorem4_validation -------------------------------------------------

ExperimentResult run_theorem4_validation(const ExperimentConfig& c, const RunOptions& o) {
  ExperimentResult res = start(c, o);
  const auto t0 = Clock::now();
  const MatrixEnsemble ens = MatrixEnsemble::parse(c.ensemble, c.m);
  const Index max_cv = *std::max_element(c.m_cv_grid.begin(), c.m_cv_grid.end());
  const std::size_t S = c.sigma_n_grid.size();
  const std::size_t J = c.m_cv_grid.size();

  struct Trial {
    bool flagged = false;
    bool eligible = false;
    std::vector<double> ratio;  // per m_cv
  };
  std::vector<Trial> trials(static_cast<std::size_t>(c.trials) * S);
  Progress progress(o, c.trials * static_cast<Index>(S));
  parallel_for(c.trials * static_cast<Index>(S), o.workers, [&](Index idx) {
    const Index t = idx / static_cast<Index>(S);
    const std::size_t s = static_cast<std::size_t>(idx) % S;
    const double sigma = c.sigma_n_grid[s];
    const SensingProblem p = generate_problem({c.N, c.m, max_cv, c.k}, sigma, ens, trial_seed(c, t));
    OmpTrace trace = run_omp(p.A, p.y, StoppingRule::iterations(c.d));
    Trial& out = trials[static_cast<std::size_t>(idx)];
    if (trace.flagged()) {
      out.flagged = true;
      progress.tick();
      return;
    }
    attach_ground_truth(trace, p.signal.values);
    const Index o_idx = *trace.selected_oracle;
    out.eligible = covers_support(trace, o_idx, p.signal);
    const auto errors = recovery_errors(trace, p.signal.values);
    const double s2 = sigma * sigma;
    const double eg_o = errors[static_cast<std::size_t>(o_idx - 1)] + s2;
    const auto cv = prefix_cv_residuals(trace, p.A_cv, p.y_cv, c.m_cv_grid);
    for (std::size_t j = 0; j < J; ++j) {
      const Index sel = *argmin_iteration(cv[j]);
      const double eg = errors[static_cast<std::size_t>(sel - 1)] + s2;
      out.ratio.push_back(eg == eg_o ? 1.0 : eg / eg_o);
    }
    progress.tick();
  });

  const double levels[] = {0.841, 0.977, 0.992, 0.997};
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t j = 0; j < J; ++j) {
      const std::string point = "sigma_n=" + format_double(c.sigma_n_grid[s]) + "/m_cv=" + std::to_string(c.m_cv_grid[j]);
      std::vector<double> ratios;
      Index flagged = 0;
      Index excluded = 0;
      for (Index t = 0; t < c.trials; ++t) {
        const Trial& tr = trials[static_cast<std::size_t>(t) * S + s];
        if (tr.flagged) {
          ++flagged;
        } else if (!tr.eligible) {
          ++excluded;
        } else {
          ratios.push_back(tr.ratio[j]);
        }
      }
      const Index n = static_cast<Index>(ratios.size());
      const double c1 = error_ratio_threshold(c.lambda0, c.m_cv_grid[j], c.beta5_eff);
      const double within =
          n ? static_cast<double>(std::count_if(ratios.begin(), ratios.end(), [&](double r) { return r <= c1; })) /
                  static_cast<double>(n)
            : std::numeric_limits<double>::quiet_NaN();
      std::vector<double> db(ratios.size());
      std::transform(ratios.begin(), ratios.end(), db.begin(), to_db);
      res.rows.push_back({point, "eligible", static_cast<double>(n), c.trials});
      res.rows.push_back({point, "excluded", static_cast<double>(excluded), c.trials});
      res.rows.push_back({point, "flagged", static_cast<double>(flagged), c.trials});
      res.rows.push_back({point, "c1", c1, n});
      res.rows.push_back({point, "c1_db", to_db(c1), n});
      res.rows.push_back({point, "frac_within_c1", within, n});
      res.rows.push_back({point, "mean_ratio_db", mean_with_error(db).mean, n});
      for (double q : levels) {
        const QuantileEstimate e = quantile_with_error(db, q);
        const std::string label = "q" + format_double(q) + "_db";
        res.rows.push_back({point, label, e.value, n});
        res.rows.push_back({point, label + "_se", e.std_error, n});
      }
    }
  }
  res.notes["ratio"] = "eps_g(cv output) / eps_g(oracle output), in dB = 10 log10";
  res.notes["eligibility"] = "oracle output support contains the true support";
  res.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

// ---- sweeps ---------------------------------------------------------------

ExperimentResult run_mcv_sweep(const ExperimentConfig& c, const RunOptions& o) {
  ExperimentResult res = start(c, o);
  const auto t0 = Clock::now();
  const MatrixEnsemble ens = MatrixEnsemble::parse(c.ensemble, c.m);
  const double sigma = std::sqrt(c.sigma_n_sq);
  const Index max_cv = *std::max_element(c.m_cv_grid.begin(), c.m_cv_grid.end());
  const std::size_t J = c.m_cv_grid.size();

  struct Trial {
    bool flagged = false;
    std::vector<double> cv;
    double oracle = 0.0;
    double residual = 0.0;
  };
  std::vector<Trial> trials(static_cast<std::size_t>(c.trials));
  Progress progress(o, c.trials);
  parallel_for(c.trials, o.workers, [&](Index t) {
    const SensingProblem p = generate_problem({c.N, c.m, max_cv, c.k}, sigma, ens, trial_seed(c, t));
    const OmpTrace trace = run_omp(p.A, p.y, StoppingRule::iterations(c.d));
    Trial& out = trials[static_cast<std::size_t>(t)];
    if (trace.flagged()) {
      out.flagged = true;
      progress.tick();
      return;
    }
    const auto errors = recovery_errors(trace, p.signal.values);
    out.oracle = *std::min_element(errors.begin(), errors.end());
    const auto cv = prefix_cv_residuals(trace, p.A_cv, p.y_cv, c.m_cv_grid);
    for (std::size_t j = 0; j < J; ++j) out.cv.push_back(errors[static_cast<std::size_t>(*argmin_iteration(cv[j]) - 1)]);
    out.residual = rule_error(trace, errors, StoppingRule::residual_below(c.sigma_n_sq), p.A, p.y, p.signal.values);
    progress.tick();
  });

  for (std::size_t j = 0; j < J; ++j) {
    const std::string point = point_name("m_cv", std::to_string(c.m_cv_grid[j]));
    std::vector<double> cv, oracle, residual;
    Index flagged = 0;
    for (const auto& tr : trials) {
      if (tr.flagged) {
        ++flagged;
        continue;
      }
      cv.push_back(tr.cv[j]);
      oracle.push_back(tr.oracle);
      residual.push_back(tr.residual);
    }
    add_mean(res, point, "omp_cv", cv);
    add_mean(res, point, "oracle", oracle);
    add_mean(res, point, "omp_residual", residual);
    res.rows.push_back({point, "flagged", static_cast<double>(flagged), c.trials});
  }
  res.notes["error"] = "recovery error |x - x_hat|^2";
  res.notes["omp_residual"] = "stops once |y - A x|^2 < sigma_n^2, on the same m rows";
  res.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

ExperimentResult run_tradeoff_sweep(const ExperimentConfig& c, const RunOptions& o) {
  ExperimentResult res = start(c, o);
  const auto t0 = Clock::now();
  const MatrixEnsemble ens = MatrixEnsemble::parse(c.ensemble, c.M);
  const double sigma = std::sqrt(c.sigma_n_sq);
  const std::size_t J = c.m_cv_grid.size();

  struct Trial {
    std::vector<char> flagged;
    std::vector<double> cv, oracle, residual;
    double residual_all = 0.0;
  };
  std::vector<Trial> trials(static_cast<std::size_t>(c.trials));
  Progress progress(o, c.trials);
  parallel_for(c.trials, o.workers, [&](Index t) {
    // All M rows drawn once; each grid point uses the first m for
    // reconstruction and the next m_cv for CV.
    const SensingProblem full = generate_problem({c.N, c.M, 1, c.k}, sigma, ens, trial_seed(c, t));
    Trial& out = trials[static_cast<std::size_t>(t)];
    {
      const OmpTrace all = run_omp(full.A, full.y, StoppingRule::residual_below(c.sigma_n_sq));
      const auto e = recovery_errors(all, full.signal.values);
      out.residual_all = e.empty() ? full.signal.values.squaredNorm() : e.back();
    }
    for (std::size_t j = 0; j < J; ++j) {
      const Index mcv = c.m_cv_grid[j];
      const SensingProblem p = split_measurements(full, c.M - mcv, mcv);
      const OmpTrace trace = run_omp(p.A, p.y, StoppingRule::iterations(c.d));
      out.flagged.push_back(trace.flagged() ? 1 : 0);
      const auto errors = recovery_errors(trace, p.signal.values);
      const auto cv = cv_residuals(trace, p.A_cv, p.y_cv);
      out.cv.push_back(errors[static_cast<std::size_t>(*argmin_iteration(cv) - 1)]);
      out.oracle.push_back(*std::min_element(errors.begin(), errors.end()));
      out.residual.push_back(
          rule_error(trace, errors, StoppingRule::residual_below(c.sigma_n_sq), p.A, p.y, p.signal.values));
    }
    progress.tick();
  });

  for (std::size_t j = 0; j < J; ++j) {
    const std::string point = point_name("m_cv", std::to_string(c.m_cv_grid[j]));
    std::vector<double> cv, oracle, residual, residual_all;
    Index flagged = 0;
    for (const auto& tr : trials) {
      if (tr.flagged[j]) {
        ++flagged;
        continue;
      }
      cv.push_back(tr.cv[j]);
      oracle.push_back(tr.oracle[j]);
      residual.push_back(tr.residual[j]);
      residual_all.push_back(tr.residual_all);
    }
    add_mean(res, point, "omp_cv", cv);
    add_mean(res, point, "oracle", oracle);
    add_mean(res, point, "omp_residual", residual);
    add_mean(res, point, "omp_residual_all", residual_all);
    res.rows.push_back({point, "flagged", static_cast<double>(flagged), c.trials});
  }
  res.notes["split"] = "m = M - m_cv reconstruction rows; rows rescaled to variance 1/m";
  res.notes["omp_residual_all"] = "OMP-residual on all M measurements";
  res.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

ExperimentResult run_noise_sweep(const ExperimentConfig& c, const RunOptions& o) {
  ExperimentResult res = start(c, o);
  const auto t0 = Clock::now();
  const MatrixEnsemble ens = MatrixEnsemble::parse(c.ensemble, c.M);
  const std::size_t S = c.sigma_n_sq_grid.size();
  const Index m = c.M - c.m_cv;

  struct Trial {
    bool flagged = false;
    bool no_prior_degenerate = false;
    double cv = 0, oracle = 0, residual = 0, no_prior = 0;
  };
  std::vector<Trial> trials(static_cast<std::size_t>(c.trials) * S);
  Progress progress(o, c.trials * static_cast<Index>(S));
  parallel_for(c.trials * static_cast<Index>(S), o.workers, [&](Index idx) {
    const Index t = idx / static_cast<Index>(S);
    const std::size_t s = static_cast<std::size_t>(idx) % S;
    const double s2 = c.sigma_n_sq_grid[s];
    const SensingProblem full = generate_problem({c.N, c.M, 1, c.k}, std::sqrt(s2), ens, trial_seed(c, t));
    const SensingProblem p = split_measurements(full, m, c.m_cv);
    Trial& out = trials[static_cast<std::size_t>(idx)];

    const OmpTrace trace = run_omp(p.A, p.y, StoppingRule::iterations(c.d));
    if (trace.flagged()) {
      out.flagged = true;
      progress.tick();
      return;
    }
    const auto errors = recovery_errors(trace, p.signal.values);
    out.cv = errors[static_cast<std::size_t>(*argmin_iteration(cv_residuals(trace, p.A_cv, p.y_cv)) - 1)];
    out.oracle = *std::min_element(errors.begin(), errors.end());

    // Both baselines work on all M rows; OMP-residual is a prefix of the
    // no-prior run.
    const OmpTrace np = run_omp(full.A, full.y, StoppingRule::relative(c.no_prior_tolerance, c.M));
    out.no_prior_degenerate = np.flagged();
    const auto np_err = recovery_errors(np, full.signal.values);
    out.no_prior = np_err.empty() ? full.signal.values.squaredNorm() : np_err.back();
    out.residual = rule_error(np, np_err, StoppingRule::residual_below(s2), full.A, full.y, full.signal.values);
    progress.tick();
  });

  for (std::size_t s = 0; s < S; ++s) {
    const std::string point = point_name("sigma_n_sq", format_double(c.sigma_n_sq_grid[s]));
    std::vector<double> cv, oracle, residual, no_prior;
    Index flagged = 0;
    Index degenerate = 0;
    for (Index t = 0; t < c.trials; ++t) {
      const Trial& tr = trials[static_cast<std::size_t>(t) * S + s];
      if (tr.flagged) {
        ++flagged;
        continue;
      }
      if (tr.no_prior_degenerate) ++degenerate;
      cv.push_back(tr.cv);
      oracle.push_back(tr.oracle);
      residual.push_back(tr.residual);
      no_prior.push_back(tr.no_prior);
    }
    add_mean(res, point, "omp_cv", cv);
    add_mean(res, point, "oracle", oracle);
    add_mean(res, point, "omp_residual", residual);
    add_mean(res, point, "omp_no_prior", no_prior);
    res.rows.push_back({point, "flagged", static_cast<double>(flagged), c.trials});
    res.rows.push_back({point, "no_prior_degenerate", static_cast<double>(degenerate), c.trials});
  }
  res.notes["omp_cv"] = "m = M - m_cv reconstruction rows, m_cv CV rows";
  res.notes["omp_residual"] = "all M rows, stops once |y - A x|^2 < sigma_n^2";
  res.notes["omp_no_prior"] = "all M rows, stops after M iterations or once |y - A x| < tol |y|";
  res.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& c, const RunOptions& o) {
  switch (c.name) {
    case ExperimentName::lemma_validation: return run_lemma_validation(c, o);
    case ExperimentName::theorem4_validation: return run_theorem4_validation(c, o);
    case ExperimentName::mcv_sweep: return run_mcv_sweep(c, o);
    case ExperimentName::tradeoff_sweep: return run_tradeoff_sweep(c, o);
    case ExperimentName::noise_sweep: return run_noise_sweep(c, o);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace cvomp
