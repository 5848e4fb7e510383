#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvomp/cv_theory.hpp"
#include "cvomp/problem_gen.hpp"

namespace cvomp {

enum class ExperimentName { lemma_validation, theorem4_validation, mcv_sweep, tradeoff_sweep, noise_sweep };

std::string to_string(ExperimentName name);
ExperimentName parse_experiment(std::string_view name);
std::span<const ExperimentName> all_experiments();

// Flat configuration. Only the keys returned by keys() are meaningful (and
// accepted) for a given experiment; the rest keep their defaults.
struct ExperimentConfig {
  ExperimentName name = ExperimentName::lemma_validation;
  std::uint64_t seed = 1;
  Index trials = 500;
  Index resamples = 10000;
  Index bins = 100;
  std::string ensemble = "gaussian";
  Index N = 1000;
  Index m = 400;
  Index m_cv = 48;
  Index k = 50;
  Index d = 150;
  Index M = 400;  // total measurements, split as m + m_cv where the sweep needs it
  double sigma_n = 0.1;
  double sigma_n_sq = 0.1;
  Index p_iter = 20;
  Index q_iter = 40;
  double lambda0 = 4.0;
  double beta5_eff = 0.0376;
  double no_prior_tolerance = 1e-5;
  std::vector<Index> m_cv_grid;
  std::vector<double> sigma_n_grid;
  std::vector<double> sigma_n_sq_grid;

  static ExperimentConfig defaults(ExperimentName name);

  [[nodiscard]] std::vector<std::string> keys() const;
  [[nodiscard]] bool accepts(std::string_view key) const;
  // Throws ConfigError on unknown keys or unparseable values.
  void set(std::string_view key, std::string_view value);
  [[nodiscard]] std::string get(std::string_view key) const;
  // Throws ConfigError naming the violated constraint.
  void validate() const;

  // "key=value" lines in keys() order.
  [[nodiscard]] std::string echo() const;
  // FNV-1a of echo(), hex.
  [[nodiscard]] std::string hash() const;
};

// Applies "key = value" lines; '#' starts a comment.
void apply_config_text(ExperimentConfig& config, std::string_view text);
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);
// "key=value".
void apply_override(ExperimentConfig& config, std::string_view assignment);

struct ResultRow {
  std::string point;
  std::string statistic;
  double value = 0.0;
  Index trials = 0;
};

struct ExperimentResult {
  ExperimentName name = ExperimentName::lemma_validation;
  ExperimentConfig config;
  std::vector<ResultRow> rows;
  std::map<std::string, std::string> notes;  // extra metadata, e.g. the KL direction
  double wall_seconds = 0.0;
  Index workers = 1;

  // Leading "# key=value" lines with the effective configuration, then the
  // header and data rows.
  [[nodiscard]] std::string csv() const;
  [[nodiscard]] std::string data_rows() const;
  [[nodiscard]] std::string metadata_json() const;
  // Writes `path` and the sidecar `path` with extension .json.
  void write(const std::filesystem::path& path) const;

  [[nodiscard]] std::optional<double> value(std::string_view point, std::string_view statistic) const;
  [[nodiscard]] double at(std::string_view point, std::string_view statistic) const;
  [[nodiscard]] std::vector<std::string> points() const;
};

std::string format_double(double v);

struct RunOptions {
  Index workers = 1;
  std::function<void(Index done, Index total)> progress;
};

// Runs body(i) for i in [0, n) on `workers` threads. Callers write results
// into slot i so the outcome does not depend on scheduling.
void parallel_for(Index n, Index workers, const std::function<void(Index)>& body);

// Equal-width histogram.
struct Histogram {
  double lower = 0.0;
  double width = 1.0;
  std::vector<double> counts;
  Index outside = 0;

  // `bins` bins covering mean +- span_sigmas * stddev.
  static Histogram around(const GaussianApprox& g, Index bins, double span_sigmas = 5.0);
  void add(double x);
  void merge(const Histogram& other);
  [[nodiscard]] double inside() const;
};

// KL(theoretical || empirical) over the histogram's bins. Theoretical bin
// masses come from the Gaussian CDF, renormalized to the covered range; if
// any bin is empty every bin gets one extra count.
double kl_divergence(const Histogram& empirical, const GaussianApprox& theoretical);
// KL(p || q) for discrete distributions (both normalized here).
double kl_divergence(std::span<const double> p, std::span<const double> q);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  Index count = 0;
};
MeanEstimate mean_with_error(std::span<const double> values);

struct QuantileEstimate {
  double value = 0.0;
  double std_error = 0.0;
};
// Nearest-rank quantile; the error comes from the binomial spread of the
// order-statistic rank, n q +- sqrt(n q (1 - q)).
QuantileEstimate quantile_with_error(std::vector<double> values, double q);

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }

// Empirical P(eps_cv^p >= eps_cv^q) over `draws` Gaussian CV blocks for
// generalized error vectors with the given norms and correlation.
double comparison_frequency(const GeneralizedErrorPair& pair, Index m, Index m_cv, Index draws,
                            std::uint64_t seed, Index workers = 1);

ExperimentResult run_lemma_validation(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_theorem4_validation(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_mcv_sweep(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_tradeoff_sweep(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_noise_sweep(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace cvomp
