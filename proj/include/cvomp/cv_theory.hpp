#pragma once

#include <map>
#include <span>

#include "cvomp/problem_gen.hpp"

namespace cvomp {

// Standard normal CDF and the error function (std::erf / std::erfc).
double phi(double u);
double erf(double u);

// CLT approximation of a residual statistic.
struct GaussianApprox {
  double mean = 0.0;
  double variance = 0.0;

  [[nodiscard]] double stddev() const;
};

// Pair of generalized errors eps_g = |x - x_hat|^2 + sigma_n^2 and the
// correlation of the generalized error vectors [x - x_hat; sigma_n].
struct GeneralizedErrorPair {
  double eps_g_p = 0.0;
  double eps_g_q = 0.0;
  double rho_g = 0.0;
};

// Distribution of |y_cv - A_cv x_hat|^2 over Gaussian CV blocks.
GaussianApprox cv_residual_distribution(double eps_x, double sigma_n, Index m, Index m_cv);

// Distribution of eps_cv^p - eps_cv^q.
GaussianApprox cv_diff_distribution(const GeneralizedErrorPair& pair, Index m, Index m_cv);

// Entry distributions with Var(a_ij^2) = gamma add (m^2 gamma / 2 - 1) sum_j dx_j^4
// inside the bracket of the variance. gamma = 2/m^2 recovers the Gaussian case.
GaussianApprox generalized_cv_distribution(const Vector& delta_x, double sigma_n, Index m, Index m_cv,
                                           double gamma);
GaussianApprox generalized_cv_diff_distribution(const Vector& delta_x_p, const Vector& delta_x_q, double sigma_n,
                                                Index m, Index m_cv, double gamma);

// m / m_cv / (1 +- lambda sqrt(2 / m_cv)).
double interval_factor(double lambda, Index m, Index m_cv, bool plus);

struct EstimationInterval {
  double lower = 0.0;
  double upper = 0.0;
  double confidence = 0.0;
};

// Bounds on eps_x from an observed CV residual, holding with probability
// erf(lambda / sqrt 2). The lower bound is clamped at 0.
EstimationInterval estimation_interval(double eps_cv, double lambda, Index m, Index m_cv, double sigma_n_sq);

struct ComparisonSuccess {
  double lambda = 0.0;
  double probability = 0.5;
};

// Probability that eps_cv^p >= eps_cv^q given eps_g^p >= eps_g^q.
ComparisonSuccess comparison_success(const GeneralizedErrorPair& pair, Index m_cv);

// Smallest eps_g^p / eps_g^q for which the comparison succeeds with
// probability at least Phi(lambda0): 2 C0 + 1 + 2 sqrt(C0^2 + C0) with
// C0 = lambda0^2 (1 - rho^2) / (m_cv - 2 lambda0^2).
double min_ratio_for_confidence(double lambda0, Index m_cv, double rho_g);
// Same with the decorrelation 1 - rho^2 supplied directly.
double error_ratio_threshold(double lambda0, Index m_cv, double decorrelation);

// RIC values indexed by subscript (support size).
class RicTable {
 public:
  RicTable() = default;
  explicit RicTable(std::map<Index, double> values);
  static RicTable uniform(double delta, Index max_subscript);

  [[nodiscard]] double at(Index subscript) const;
  [[nodiscard]] bool contains(Index subscript) const { return values_.contains(subscript); }
  [[nodiscard]] const std::map<Index, double>& values() const { return values_; }
  void set(Index subscript, double delta);

 private:
  std::map<Index, double> values_;
};

// eta in |delta_{T^{q-p}}|^2 <= eta (|x_{(T^q)^c}|^2 + sigma_n^2), where
// complement_size = |T \ T^q|. Subscripts used: q-p, q, p,
// complement_size+q-p+1, complement_size+p+1.
double eta_bound(const RicTable& deltas, Index p, Index q, Index complement_size);

// Which RIC subscripts the OMP-CV constants draw on.
struct TheoremIndices {
  Index k = 0;  // sparsity
  Index p = 0;  // competing iteration
  Index o = 0;  // oracle iteration
};

struct RicConstants {
  RicTable delta;
  double eta = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double beta4 = 0.0;
  double rho_lb = 1.0;     // lower bound on rho_g between a full-support iterate and the oracle
  double beta5_eff = 0.0;  // 1 - rho_lb^2
};

RicConstants theorem4_constants(const RicTable& deltas, double eta, const TheoremIndices& idx);
// Every subscript set to `delta`.
RicConstants theorem4_constants(double delta, double eta);

// g(alpha) = (b1 a^2 + b2) / (b1 a^2 + b2 + max(a^2 - b3 a - b4, 0)^2).
double g_alpha(double alpha, const RicConstants& c);
// sqrt(m_cv / 2) sqrt(1 - g(alpha)).
double lambda_lower_bound(double alpha, Index m_cv, const RicConstants& c);

// Error vectors x - x_hat with sigma_n appended.
GeneralizedErrorPair generalized_pair_from_traces(const Vector& x, const Vector& x_hat_p, const Vector& x_hat_q,
                                                  double sigma_n);

}  // namespace cvomp
