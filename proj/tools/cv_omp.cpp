// cv-omp: command-line front end for the cvomp library.
//
// Exit codes: 0 success, 2 bad configuration or arguments, 3 numerical
// degeneracy (partial output is still printed).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvomp/bundle.hpp"
#include "cvomp/cv_theory.hpp"
#include "cvomp/error.hpp"
#include "cvomp/experiments.hpp"
#include "cvomp/omp.hpp"
#include "cvomp/problem_gen.hpp"
#include "cvomp/rip_checks.hpp"

namespace {

using namespace cvomp;

constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void print_kv(const std::string& key, const std::string& value) { std::cout << key << ": " << value << "\n"; }

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
  Index N = 64, m = 32, m_cv = 16, k = 4;
  double sigma_n = 0.0;
  std::string ensemble = "gaussian";
  std::uint64_t seed = 1;
  bool normalize = false;
  bool no_truth = false;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  const auto ens = MatrixEnsemble::parse(a.ensemble, a.m);
  const SensingProblem p = generate_problem({a.N, a.m, a.m_cv, a.k}, a.sigma_n, ens, a.seed, {a.normalize});
  if (a.out.empty()) {
    std::cout << problem_to_json(p, !a.no_truth);
  } else {
    save_problem(a.out, p, !a.no_truth);
    print_kv("wrote", a.out);
  }
  return 0;
}

// ---- recover ----------------------------------------------------------------

struct RecoverArgs {
  std::string problem;
  Index d = 0;
  double lambda = 3.0;
  std::string trace_out;
};

int cmd_recover(const RecoverArgs& a) {
  const LoadedProblem loaded = load_problem(a.problem);
  const SensingProblem& p = loaded.problem;
  const Index d = a.d > 0 ? a.d : std::min<Index>(p.A.rows(), 3 * std::max<Index>(p.dims.k, 1));
  OmpCvResult r = omp_cv(p.A, p.y, p.A_cv, p.y_cv, d);
  if (loaded.has_ground_truth) attach_ground_truth(r.trace, p.signal.values);

  const Index o_cv = r.trace.selected_cv.value_or(0);
  const double eps_cv = o_cv > 0 ? *r.trace.record(o_cv).cv_residual : *r.trace.initial_cv_residual;
  const double sigma_hat = estimate_noise_power(p.A, p.y, r.estimate);

  print_kv("iterations", std::to_string(r.trace.records.size()));
  print_kv("termination", to_string(r.trace.termination));
  print_kv("o_cv", std::to_string(o_cv));
  print_kv("eps_cv", num(eps_cv));
  print_kv("sigma_n_sq_hat", num(sigma_hat));
  try {
    const EstimationInterval iv = estimation_interval(eps_cv, a.lambda, p.A.rows(), p.A_cv.rows(), sigma_hat);
    print_kv("interval_lower", num(iv.lower));
    print_kv("interval_upper", num(iv.upper));
    print_kv("interval_confidence", num(iv.confidence));
  } catch (const InfeasibleParameter& e) {
    print_kv("interval", std::string("unavailable (") + e.what() + ")");
  }
  if (loaded.has_ground_truth) {
    const double err = o_cv > 0 ? *r.trace.record(o_cv).recovery_error : p.signal.values.squaredNorm();
    print_kv("eps_x", num(err));
    print_kv("oracle", std::to_string(r.trace.selected_oracle.value_or(0)));
  }
  std::string est;
  for (Index j = 0; j < r.estimate.size(); ++j) {
    if (r.estimate[j] == 0.0) continue;
    if (!est.empty()) est += ' ';
    est += std::to_string(j) + ":" + num(r.estimate[j]);
  }
  print_kv("estimate", est);

  if (!a.trace_out.empty()) {
    std::ofstream out(a.trace_out);
    if (!out) throw ConfigError("cannot write " + a.trace_out);
    out << "p,index,residual_sq,cv_residual,recovery_error\n";
    for (const auto& rec : r.trace.records) {
      out << rec.p << ',' << r.trace.order[static_cast<std::size_t>(rec.p - 1)] << ',' << format_double(rec.residual_sq)
          << ',' << (rec.cv_residual ? format_double(*rec.cv_residual) : "") << ','
          << (rec.recovery_error ? format_double(*rec.recovery_error) : "") << '\n';
    }
  }
  if (r.trace.flagged()) {
    std::cerr << "cv-omp: OMP stopped on a numerically dependent column; output above is partial\n";
    return kExitDegenerate;
  }
  return 0;
}

// ---- theory -----------------------------------------------------------------

struct TheoryArgs {
  double eps_cv = 0, lambda = 3, sigma_n_sq = 0, eps_x = 0, sigma_n = 0;
  double eps_g_p = 0, eps_g_q = 0, rho = 0, lambda0 = 4, beta5_eff = -1;
  double delta = 0.1, eta = -1, alpha = 1, u = 0;
  Index m = 0, m_cv = 0, p = 1, q = 2, c = 0;
};

void emit(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_theory_interval(const TheoryArgs& a) {
  nlohmann::ordered_json j;
  const auto iv = estimation_interval(a.eps_cv, a.lambda, a.m, a.m_cv, a.sigma_n_sq);
  j["h_plus"] = interval_factor(a.lambda, a.m, a.m_cv, true);
  j["h_minus"] = interval_factor(a.lambda, a.m, a.m_cv, false);
  j["lower"] = iv.lower;
  j["upper"] = iv.upper;
  j["confidence"] = iv.confidence;
  emit(j);
  return 0;
}

int cmd_theory_cv_dist(const TheoryArgs& a) {
  nlohmann::ordered_json j;
  const auto g = cv_residual_distribution(a.eps_x, a.sigma_n, a.m, a.m_cv);
  j["mean"] = g.mean;
  j["variance"] = g.variance;
  emit(j);
  return 0;
}

int cmd_theory_diff_dist(const TheoryArgs& a) {
  nlohmann::ordered_json j;
  const auto g = cv_diff_distribution({a.eps_g_p, a.eps_g_q, a.rho}, a.m, a.m_cv);
  j["mean"] = g.mean;
  j["variance"] = g.variance;
  emit(j);
  return 0;
}

int cmd_theory_compare(const TheoryArgs& a) {
  nlohmann::ordered_json j;
  const auto s = comparison_success({a.eps_g_p, a.eps_g_q, a.rho}, a.m_cv);
  j["lambda"] = s.lambda;
  j["probability"] = s.probability;
  emit(j);
  return 0;
}

int cmd_theory_min_ratio(const TheoryArgs& a) {
  nlohmann::ordered_json j;
  const double c1 = a.beta5_eff >= 0 ? error_ratio_threshold(a.lambda0, a.m_cv, a.beta5_eff)
                                     : min_ratio_for_confidence(a.lambda0, a.m_cv, a.rho);
  j["ratio"] = c1;
  j["ratio_db"] = to_db(c1);
  j["confidence"] = phi(a.lambda0);
  emit(j);
  return 0;
}

int cmd_theory_eta(const TheoryArgs& a) {
  nlohmann::ordered_json j;
  const RicTable t = RicTable::uniform(a.delta, a.c + a.q + 1);
  j["eta"] = eta_bound(t, a.p, a.q, a.c);
  emit(j);
  return 0;
}

RicConstants uniform_constants(const TheoryArgs& a) {
  const double eta = a.eta >= 0 ? a.eta : eta_bound(RicTable::uniform(a.delta, a.c + a.q + 1), a.p, a.q, a.c);
  return theorem4_constants(a.delta, eta);
}

int cmd_theory_constants(const TheoryArgs& a) {
  nlohmann::ordered_json j;
  const RicConstants c = uniform_constants(a);
  j["eta"] = c.eta;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["beta3"] = c.beta3;
  j["beta4"] = c.beta4;
  j["rho_lb"] = c.rho_lb;
  j["beta5_eff"] = c.beta5_eff;
  emit(j);
  return 0;
}

int cmd_theory_lambda_bound(const TheoryArgs& a) {
  nlohmann::ordered_json j;
  const RicConstants c = uniform_constants(a);
  const double lb = lambda_lower_bound(a.alpha, a.m_cv, c);
  j["g"] = g_alpha(a.alpha, c);
  j["lambda_lb"] = lb;
  j["failure_bound"] = 1.0 - phi(lb);
  emit(j);
  return 0;
}

int cmd_theory_phi(const TheoryArgs& a) {
  nlohmann::ordered_json j;
  j["phi"] = phi(a.u);
  j["erf"] = cvomp::erf(a.u);
  emit(j);
  return 0;
}

// ---- rip --------------------------------------------------------------------

struct RipArgs {
  Index rows = 24, cols = 48, k_max = 4, samples = 10000, trials = 1000;
  std::uint64_t seed = 1;
  std::string mode = "exhaustive";
  std::string format = "json";
  std::string problem;
  bool normalize = false;
  bool correction = false;
  Index instances = 200;
};

int cmd_rip(const RipArgs& a) {
  Matrix A;
  if (!a.problem.empty()) {
    A = load_problem(a.problem).problem.A;
  } else {
    A = generate_problem({a.cols, a.rows, 1, 0}, 0.0, MatrixEnsemble::gaussian(a.rows), a.seed, {a.normalize}).A;
  }
  RicMode mode;
  if (a.mode == "exhaustive") {
    mode = RicMode::exhaustive();
  } else if (a.mode == "sampled") {
    mode = RicMode::sampled(a.samples, a.seed);
  } else {
    throw ConfigError("unknown RIC mode '" + a.mode + "' (expected exhaustive or sampled)");
  }
  const auto family = estimate_ric_family(A, a.k_max, mode);
  const LemmaReport report = check_consequence_lemmas(A, family, a.trials, a.seed);
  std::optional<CorrectionBoundReport> corr;
  if (a.correction) {
    CorrectionBoundOptions o;
    o.instances = a.instances;
    o.seed = a.seed;
    corr = check_correction_bound(o);
  }

  if (a.format == "csv") {
    std::cout << "section,name,trials,violations,skipped,min_slack\n";
    for (const auto& e : family)
      std::cout << "ric,delta_" << e.k << ',' << e.supports_inspected << ",,," << format_double(e.delta_k) << '\n';
    for (const auto& c : report.checks)
      std::cout << "lemma," << c.name << ',' << c.trials << ',' << c.violations << ',' << c.skipped << ','
                << format_double(c.min_slack) << '\n';
    if (corr)
      std::cout << "correction,delta_bound," << corr->pairs_checked << ',' << corr->violations << ','
                << corr->pairs_skipped << ',' << format_double(corr->min_slack) << '\n';
  } else if (a.format == "json") {
    nlohmann::ordered_json j;
    j["rows"] = A.rows();
    j["cols"] = A.cols();
    j["mode"] = to_string(mode);
    j["advisory"] = report.advisory;
    for (const auto& e : family)
      j["ric"].push_back({{"k", e.k}, {"delta", e.delta_k}, {"supports", e.supports_inspected},
                          {"lower_bound_only", e.lower_bound_only()}});
    for (const auto& c : report.checks)
      j["lemmas"].push_back({{"name", c.name}, {"trials", c.trials}, {"violations", c.violations},
                             {"skipped", c.skipped}, {"min_slack", c.min_slack}});
    if (corr)
      j["correction_bound"] = {{"instances", corr->instances},         {"pairs_checked", corr->pairs_checked},
                               {"pairs_skipped", corr->pairs_skipped}, {"violations", corr->violations},
                               {"min_slack", corr->min_slack},         {"max_ratio", corr->max_ratio}};
    std::cout << j.dump(2) << "\n";
  } else {
    throw ConfigError("unknown format '" + a.format + "' (expected json or csv)");
  }
  const bool failed = report.total_violations() > 0 || (corr && corr->violations > 0);
  if (failed && !report.advisory) std::cerr << "cv-omp: lemma violations found\n";
  return 0;
}

// ---- experiment -------------------------------------------------------------

struct ExperimentArgs {
  std::string name;
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<Index> trials;
  std::optional<Index> resamples;
  std::string out;
  bool progress = false;
};

int cmd_experiment(const ExperimentArgs& a, Index workers) {
  ExperimentConfig cfg = ExperimentConfig::defaults(parse_experiment(a.name));
  if (!a.config.empty()) apply_config_file(cfg, a.config);
  for (const auto& s : a.sets) apply_override(cfg, s);
  if (a.seed) cfg.set("seed", std::to_string(*a.seed));
  if (a.trials) cfg.set("trials", std::to_string(*a.trials));
  if (a.resamples) cfg.set("resamples", std::to_string(*a.resamples));

  RunOptions opt;
  opt.workers = workers;
  if (a.progress) {
    opt.progress = [](Index done, Index total) {
      std::fprintf(stderr, "\r%lld/%lld", static_cast<long long>(done), static_cast<long long>(total));
      if (done == total) std::fputc('\n', stderr);
    };
  }
  const ExperimentResult res = run_experiment(cfg, opt);
  const std::string out = a.out.empty() ? to_string(cfg.name) + ".csv" : a.out;
  res.write(out);
  print_kv("experiment", to_string(cfg.name));
  print_kv("rows", std::to_string(res.rows.size()));
  print_kv("csv", out);
  print_kv("wall_seconds", num(res.wall_seconds));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OMP with cross-validation stopping: recovery, theory and experiments", "cv-omp"};
  app.require_subcommand(1);
  Index workers = std::max<Index>(1, static_cast<Index>(std::thread::hardware_concurrency()));
  app.add_option("--workers", workers, "Worker threads (results do not depend on this)")->check(CLI::PositiveNumber);

  std::function<int()> action;

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a problem bundle (JSON)");
  g->add_option("--N", gen.N, "Signal length");
  g->add_option("--m", gen.m, "Reconstruction measurements");
  g->add_option("--m-cv", gen.m_cv, "CV measurements");
  g->add_option("--k", gen.k, "Sparsity");
  g->add_option("--sigma-n", gen.sigma_n, "Noise scale");
  g->add_option("--ensemble", gen.ensemble, "gaussian or rademacher");
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_flag("--normalize", gen.normalize, "Normalize columns");
  g->add_flag("--no-truth", gen.no_truth, "Omit the signal from the bundle");
  g->add_option("--out", gen.out, "Output path (default: stdout)");
  g->callback([&] { action = [&] { return cmd_generate(gen); }; });

  RecoverArgs rec;
  auto* r = app.add_subcommand("recover", "Run OMP-CV on a problem bundle");
  r->add_option("--problem", rec.problem, "Problem bundle")->required();
  r->add_option("--d", rec.d, "Iterations (default min(m, 3k))");
  r->add_option("--lambda", rec.lambda, "Interval width parameter");
  r->add_option("--trace", rec.trace_out, "Write the per-iteration trace CSV here");
  r->callback([&] { action = [&] { return cmd_recover(rec); }; });

  TheoryArgs th;
  auto* t = app.add_subcommand("theory", "Closed-form CV quantities");
  t->require_subcommand(1);
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const TheoryArgs&);
  };
  const Sub subs[] = {
      {"interval", "Recovery error interval from an observed CV residual", cmd_theory_interval},
      {"cv-dist", "Distribution of the CV residual", cmd_theory_cv_dist},
      {"diff-dist", "Distribution of a CV residual difference", cmd_theory_diff_dist},
      {"compare", "CV comparison success probability", cmd_theory_compare},
      {"min-ratio", "Smallest error ratio reached at confidence Phi(lambda0)", cmd_theory_min_ratio},
      {"eta", "Correction-term constant at uniform RIC", cmd_theory_eta},
      {"constants", "beta constants at uniform RIC", cmd_theory_constants},
      {"lambda-bound", "Lower bound on lambda for an under-recovered iterate", cmd_theory_lambda_bound},
      {"phi", "Standard normal CDF", cmd_theory_phi},
  };
  for (const auto& s : subs) {
    auto* sc = t->add_subcommand(s.name, s.help);
    const std::string n = s.name;
    if (n == "interval") {
      sc->add_option("--eps-cv", th.eps_cv)->required();
      sc->add_option("--lambda", th.lambda)->required();
      sc->add_option("--m", th.m)->required();
      sc->add_option("--m-cv", th.m_cv)->required();
      sc->add_option("--sigma-n-sq", th.sigma_n_sq);
    } else if (n == "cv-dist") {
      sc->add_option("--eps-x", th.eps_x)->required();
      sc->add_option("--sigma-n", th.sigma_n);
      sc->add_option("--m", th.m)->required();
      sc->add_option("--m-cv", th.m_cv)->required();
    } else if (n == "diff-dist" || n == "compare") {
      sc->add_option("--eps-g-p", th.eps_g_p)->required();
      sc->add_option("--eps-g-q", th.eps_g_q)->required();
      sc->add_option("--rho", th.rho);
      if (n == "diff-dist") sc->add_option("--m", th.m)->required();
      sc->add_option("--m-cv", th.m_cv)->required();
    } else if (n == "min-ratio") {
      sc->add_option("--lambda0", th.lambda0);
      sc->add_option("--m-cv", th.m_cv)->required();
      sc->add_option("--rho", th.rho);
      sc->add_option("--beta5-eff", th.beta5_eff, "Use 1 - rho^2 = beta5_eff directly");
    } else if (n == "eta" || n == "constants" || n == "lambda-bound") {
      sc->add_option("--delta", th.delta, "Uniform RIC");
      sc->add_option("--p", th.p);
      sc->add_option("--q", th.q);
      sc->add_option("--c", th.c, "|T minus T^q|");
      if (n != "eta") sc->add_option("--eta", th.eta, "Override eta");
      if (n == "lambda-bound") {
        sc->add_option("--alpha", th.alpha)->required();
        sc->add_option("--m-cv", th.m_cv)->required();
      }
    } else if (n == "phi") {
      sc->add_option("--u", th.u)->required();
    }
    auto fn = s.fn;
    sc->callback([&, fn] { action = [&, fn] { return fn(th); }; });
  }

  RipArgs rip;
  auto* rp = app.add_subcommand("rip", "Estimate RICs and check the RIP consequence lemmas");
  rp->add_option("--rows", rip.rows);
  rp->add_option("--cols", rip.cols);
  rp->add_option("--k-max", rip.k_max);
  rp->add_option("--mode", rip.mode, "exhaustive or sampled");
  rp->add_option("--samples", rip.samples, "Supports per order in sampled mode");
  rp->add_option("--trials", rip.trials, "Random (S, T, x) draws");
  rp->add_option("--seed", rip.seed);
  rp->add_option("--problem", rip.problem, "Use A from a problem bundle");
  rp->add_option("--format", rip.format, "json or csv");
  rp->add_flag("--normalize", rip.normalize, "Unit-norm columns for the generated matrix");
  rp->add_flag("--correction", rip.correction, "Also check the correction-term bound");
  rp->add_option("--instances", rip.instances, "Instances for --correction");
  rp->callback([&] { action = [&] { return cmd_rip(rip); }; });

  ExperimentArgs ex;
  auto* e = app.add_subcommand("experiment", "Run a Monte Carlo experiment");
  e->add_option("name", ex.name, "lemma_validation, theorem4_validation, mcv_sweep, tradeoff_sweep, noise_sweep")
      ->required();
  e->add_option("--config", ex.config, "key = value file");
  e->add_option("--set", ex.sets, "key=value override (repeatable)");
  e->add_option("--seed", ex.seed);
  e->add_option("--trials", ex.trials);
  e->add_option("--resamples", ex.resamples);
  e->add_option("--out", ex.out, "CSV path; metadata goes next to it as .json");
  e->add_flag("--progress", ex.progress, "Trial counter on stderr");
  e->callback([&] { action = [&] { return cmd_experiment(ex, workers); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    return action ? action() : kExitConfig;
  } catch (const DegenerateSupport& err) {
    std::cerr << "cv-omp: numerical degeneracy: " << err.what() << "\n";
    return kExitDegenerate;
  } catch (const ConfigError& err) {
    std::cerr << "cv-omp: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& err) {
    std::cerr << "cv-omp: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& err) {
    std::cerr << "cv-omp: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "cv-omp: " << err.what() << "\n";
    return 1;
  }
}
