#include "cvomp/cv_theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cvomp/error.hpp"

namespace cvomp {

double phi(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

double erf(double u) { return std::erf(u); }

double GaussianApprox::stddev() const { return std::sqrt(variance); }

namespace {

void require_counts(Index m, Index m_cv) {
  if (m < 1 || m_cv < 1) throw InvalidArgument("measurement counts must satisfy m >= 1 and m_cv >= 1");
}

void require_pair(const GeneralizedErrorPair& pair) {
  if (!(pair.eps_g_p > 0.0) || !(pair.eps_g_q > 0.0))
    throw InvalidArgument("generalized errors must be positive");
  if (!(std::abs(pair.rho_g) <= 1.0 + 1e-12)) throw InvalidArgument("rho_g must lie in [-1, 1]");
}

double decorrelation(double rho) { return std::max(0.0, 1.0 - rho * rho); }

double delta_or_zero(const RicTable& t, Index s) { return s == 0 ? 0.0 : t.at(s); }

}  // namespace

GaussianApprox cv_residual_distribution(double eps_x, double sigma_n, Index m, Index m_cv) {
  require_counts(m, m_cv);
  if (!(eps_x >= 0.0)) throw InvalidArgument("eps_x must be non-negative");
  const double md = static_cast<double>(m);
  const double mcv = static_cast<double>(m_cv);
  const double eg = eps_x + sigma_n * sigma_n;
  return {mcv / md * eg, 2.0 * mcv / (md * md) * eg * eg};
}

GaussianApprox cv_diff_distribution(const GeneralizedErrorPair& pair, Index m, Index m_cv) {
  require_counts(m, m_cv);
  require_pair(pair);
  const double md = static_cast<double>(m);
  const double mcv = static_cast<double>(m_cv);
  const double ep = pair.eps_g_p;
  const double eq = pair.eps_g_q;
  const double bracket = ep * ep + eq * eq - 2.0 * pair.rho_g * pair.rho_g * ep * eq;
  return {mcv / md * (ep - eq), 2.0 * mcv / (md * md) * std::max(0.0, bracket)};
}

GaussianApprox generalized_cv_distribution(const Vector& delta_x, double sigma_n, Index m, Index m_cv,
                                           double gamma) {
  require_counts(m, m_cv);
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be non-negative");
  const double md = static_cast<double>(m);
  const double mcv = static_cast<double>(m_cv);
  const double eg = delta_x.squaredNorm() + sigma_n * sigma_n;
  const double fourth = delta_x.array().square().square().sum();
  const double excess = md * md * gamma / 2.0 - 1.0;
  return {mcv / md * eg, 2.0 * mcv / (md * md) * (eg * eg + excess * fourth)};
}

GaussianApprox generalized_cv_diff_distribution(const Vector& delta_x_p, const Vector& delta_x_q, double sigma_n,
                                                Index m, Index m_cv, double gamma) {
  require_counts(m, m_cv);
  if (delta_x_p.size() != delta_x_q.size()) throw InvalidArgument("error vectors differ in length");
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be non-negative");
  const double md = static_cast<double>(m);
  const double mcv = static_cast<double>(m_cv);
  const double s2 = sigma_n * sigma_n;
  const double ep = delta_x_p.squaredNorm() + s2;
  const double eq = delta_x_q.squaredNorm() + s2;
  const double inner = delta_x_p.dot(delta_x_q) + s2;
  const double fourth = (delta_x_p.array().square() - delta_x_q.array().square()).square().sum();
  const double excess = md * md * gamma / 2.0 - 1.0;
  // rho_g^2 eps_p eps_q = inner^2
  const double bracket = ep * ep + eq * eq - 2.0 * inner * inner + excess * fourth;
  return {mcv / md * (ep - eq), 2.0 * mcv / (md * md) * std::max(0.0, bracket)};
}

double interval_factor(double lambda, Index m, Index m_cv, bool plus) {
  require_counts(m, m_cv);
  const double mcv = static_cast<double>(m_cv);
  const double shift = lambda * std::sqrt(2.0 / mcv);
  const double denom = plus ? 1.0 + shift : 1.0 - shift;
  if (!(denom > 0.0)) {
    throw InfeasibleParameter("lambda = " + std::to_string(lambda) + " is infeasible for m_cv = " +
                              std::to_string(m_cv) + ": need lambda * sqrt(2/m_cv) < 1; use more CV "
                              "measurements or a smaller lambda");
  }
  return static_cast<double>(m) / mcv / denom;
}

EstimationInterval estimation_interval(double eps_cv, double lambda, Index m, Index m_cv, double sigma_n_sq) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  if (!(eps_cv >= 0.0)) throw InvalidArgument("eps_cv must be non-negative");
  const double h_plus = interval_factor(lambda, m, m_cv, true);
  const double h_minus = interval_factor(lambda, m, m_cv, false);
  EstimationInterval out;
  out.lower = std::max(0.0, h_plus * eps_cv - sigma_n_sq);
  out.upper = h_minus * eps_cv - sigma_n_sq;
  out.confidence = erf(lambda / std::numbers::sqrt2);
  return out;
}

ComparisonSuccess comparison_success(const GeneralizedErrorPair& pair, Index m_cv) {
  require_pair(pair);
  if (m_cv < 1) throw InvalidArgument("m_cv must be >= 1");
  if (pair.eps_g_p < pair.eps_g_q) throw InvalidArgument("comparison_success requires eps_g_p >= eps_g_q");
  const double mcv = static_cast<double>(m_cv);
  const double decor = decorrelation(pair.rho_g);
  double cross = 0.0;
  if (decor > 0.0) {
    const double gap = pair.eps_g_p - pair.eps_g_q;
    if (gap == 0.0) return {0.0, 0.5};
    cross = 2.0 * decor * pair.eps_g_p * pair.eps_g_q / (gap * gap);
  }
  const double inv_lambda_sq = 2.0 / mcv * (1.0 + cross);
  const double lambda = 1.0 / std::sqrt(inv_lambda_sq);
  return {lambda, phi(lambda)};
}

double error_ratio_threshold(double lambda0, Index m_cv, double decor) {
  const double mcv = static_cast<double>(m_cv);
  const double denom = mcv - 2.0 * lambda0 * lambda0;
  if (!(denom > 0.0)) {
    throw InfeasibleParameter("need m_cv > 2 lambda0^2 (m_cv = " + std::to_string(m_cv) +
                              ", lambda0 = " + std::to_string(lambda0) + ")");
  }
  if (!(decor >= 0.0 && decor <= 1.0)) throw InvalidArgument("1 - rho^2 must lie in [0, 1]");
  const double c0 = lambda0 * lambda0 * decor / denom;
  return 2.0 * c0 + 1.0 + 2.0 * std::sqrt(c0 * c0 + c0);
}

double min_ratio_for_confidence(double lambda0, Index m_cv, double rho_g) {
  if (!(std::abs(rho_g) <= 1.0)) throw InvalidArgument("rho_g must lie in [-1, 1]");
  return error_ratio_threshold(lambda0, m_cv, decorrelation(rho_g));
}

RicTable::RicTable(std::map<Index, double> values) : values_(std::move(values)) {
  for (const auto& [s, d] : values_) set(s, d);
}

RicTable RicTable::uniform(double delta, Index max_subscript) {
  RicTable t;
  for (Index s = 1; s <= max_subscript; ++s) t.set(s, delta);
  return t;
}

void RicTable::set(Index subscript, double delta) {
  if (subscript < 1) throw InvalidArgument("RIC subscripts start at 1");
  if (!(delta >= 0.0)) throw InvalidArgument("RIC values must be non-negative");
  values_[subscript] = delta;
}

double RicTable::at(Index subscript) const {
  auto it = values_.find(subscript);
  if (it == values_.end()) throw InvalidArgument("RIC delta_" + std::to_string(subscript) + " not available");
  return it->second;
}

double eta_bound(const RicTable& deltas, Index p, Index q, Index complement_size) {
  if (p < 0 || q <= p) throw InvalidArgument("eta_bound requires 0 <= p < q");
  if (complement_size < 0) throw InvalidArgument("complement size must be non-negative");
  const double d_qp = delta_or_zero(deltas, q - p);
  const double d_q = deltas.at(q);
  const double d_p = delta_or_zero(deltas, p);
  const double d_a = deltas.at(complement_size + q - p + 1);
  const double d_b = deltas.at(complement_size + p + 1);
  for (double d : {d_qp, d_q, d_p, d_a, d_b}) {
    if (!(d < 1.0)) throw InfeasibleParameter("eta bound undefined: a required RIC is >= 1");
  }
  const double ratio = d_q / (1.0 - d_q);
  if (!(ratio < 1.0)) throw InfeasibleParameter("eta bound undefined: delta_q / (1 - delta_q) >= 1");
  const double cross = d_q * d_b / (1.0 - d_p);
  const double numer = d_a * d_a + cross * cross;
  const double denom = (1.0 - d_qp) * (1.0 - d_qp) * (1.0 - ratio * ratio);
  return numer / denom;
}

RicConstants theorem4_constants(const RicTable& deltas, double eta, const TheoremIndices& idx) {
  if (!(eta >= 0.0)) throw InvalidArgument("eta must be non-negative");
  const double d_k1 = deltas.at(idx.k + 1);
  const double d_p = delta_or_zero(deltas, idx.p);
  const double d_o = delta_or_zero(deltas, idx.o);
  const double d_p1 = deltas.at(idx.p + 1);
  const double d_o1 = deltas.at(idx.o + 1);
  for (double d : {d_k1, d_p, d_o, d_p1, d_o1}) {
    if (!(d < 1.0)) throw InvalidArgument("theorem constants require every RIC < 1");
  }
  const double inv = 1.0 / (1.0 - d_p);
  const double rk = d_k1 * inv;
  const double ro = d_o * inv;
  const double rk2 = rk * rk;
  const double ro2 = ro * ro;

  RicConstants c;
  c.delta = deltas;
  c.eta = eta;
  c.beta1 = 2.0 * ((1.0 + rk2) * (1.0 + rk2) * eta + (1.0 + rk2) * rk2 + (1.0 + ro2));
  c.beta2 = 2.0 * ((1.0 + rk2) * rk2 * eta + rk2 * rk2 + (1.0 + ro2) * eta);
  c.beta3 = 2.0 * d_o * d_p1 * inv * inv;
  c.beta4 = (1.0 + ro2) * eta + c.beta3 * std::sqrt(eta);

  const double rp1 = d_p1 * inv;
  const double ro1 = d_o1 * inv;
  const double numer = 1.0 - d_p1 * d_o1 * inv * inv * std::sqrt(eta);
  c.rho_lb = numer / std::sqrt((rp1 * rp1 + 1.0) * (ro1 * ro1 + eta + 1.0));
  const double clamped = std::clamp(c.rho_lb, 0.0, 1.0);
  c.beta5_eff = 1.0 - clamped * clamped;
  return c;
}

RicConstants theorem4_constants(double delta, double eta) {
  return theorem4_constants(RicTable::uniform(delta, 2), eta, {1, 1, 1});
}

double g_alpha(double alpha, const RicConstants& c) {
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be non-negative");
  const double a2 = alpha * alpha;
  const double top = c.beta1 * a2 + c.beta2;
  const double gap = std::max(a2 - c.beta3 * alpha - c.beta4, 0.0);
  const double denom = top + gap * gap;
  if (denom == 0.0) return 1.0;
  return top / denom;
}

double lambda_lower_bound(double alpha, Index m_cv, const RicConstants& c) {
  if (m_cv < 1) throw InvalidArgument("m_cv must be >= 1");
  const double g = g_alpha(alpha, c);
  return std::sqrt(static_cast<double>(m_cv) / 2.0) * std::sqrt(std::max(0.0, 1.0 - g));
}

GeneralizedErrorPair generalized_pair_from_traces(const Vector& x, const Vector& x_hat_p, const Vector& x_hat_q,
                                                  double sigma_n) {
  if (x.size() != x_hat_p.size() || x.size() != x_hat_q.size())
    throw InvalidArgument("signal and estimates differ in length");
  const Vector dp = x - x_hat_p;
  const Vector dq = x - x_hat_q;
  const double s2 = sigma_n * sigma_n;
  GeneralizedErrorPair pair;
  pair.eps_g_p = dp.squaredNorm() + s2;
  pair.eps_g_q = dq.squaredNorm() + s2;
  if (pair.eps_g_p == 0.0 || pair.eps_g_q == 0.0) {
    throw InvalidArgument("correlation undefined: a generalized error vector is zero");
  }
  const double inner = dp.dot(dq) + s2;
  pair.rho_g = std::clamp(inner / std::sqrt(pair.eps_g_p * pair.eps_g_q), -1.0, 1.0);
  return pair;
}

}  // namespace cvomp
