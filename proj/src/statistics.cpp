#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "cvomp/error.hpp"
#include "cvomp/experiments.hpp"

namespace cvomp {

void parallel_for(Index n, Index workers, const std::function<void(Index)>& body) {
  if (n <= 0) return;
  const Index threads = std::clamp<Index>(workers, 1, n);
  if (threads == 1) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto worker = [&] {
    for (Index i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (Index t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  // Report the failure of the lowest index, as a serial run would.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Histogram Histogram::around(const GaussianApprox& g, Index bins, double span_sigmas) {
  if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
  if (!(g.variance > 0.0)) throw InfeasibleParameter("degenerate distribution: variance must be positive");
  Histogram h;
  const double half = span_sigmas * g.stddev();
  h.lower = g.mean - half;
  h.width = 2.0 * half / static_cast<double>(bins);
  h.counts.assign(static_cast<std::size_t>(bins), 0.0);
  return h;
}

void Histogram::add(double x) {
  const double pos = (x - lower) / width;
  if (!(pos >= 0.0) || pos >= static_cast<double>(counts.size())) {
    ++outside;
    return;
  }
  counts[static_cast<std::size_t>(pos)] += 1.0;
}

void Histogram::merge(const Histogram& other) {
  if (other.counts.size() != counts.size()) throw InvalidArgument("histogram bin counts differ");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  outside += other.outside;
}

double Histogram::inside() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw InvalidArgument("distributions must have the same non-zero length");
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (!(sp > 0.0) || !(sq > 0.0)) throw InvalidArgument("distributions must have positive mass");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i] / sp;
    if (pi <= 0.0) continue;
    const double qi = q[i] / sq;
    if (qi <= 0.0) return std::numeric_limits<double>::infinity();
    kl += pi * std::log(pi / qi);
  }
  return std::max(0.0, kl);
}

double kl_divergence(const Histogram& empirical, const GaussianApprox& theoretical) {
  if (!(theoretical.variance > 0.0))
    throw InfeasibleParameter("degenerate distribution: theoretical variance must be positive");
  if (!(empirical.inside() > 0.0)) throw InvalidArgument("histogram has no mass inside its range");
  const std::size_t n = empirical.counts.size();
  const double sd = theoretical.stddev();
  std::vector<double> theory(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = empirical.lower + empirical.width * static_cast<double>(i);
    const double b = a + empirical.width;
    theory[i] = phi((b - theoretical.mean) / sd) - phi((a - theoretical.mean) / sd);
  }
  std::vector<double> emp = empirical.counts;
  if (std::any_of(emp.begin(), emp.end(), [](double c) { return c == 0.0; }))
    for (auto& c : emp) c += 1.0;
  return kl_divergence(theory, emp);
}

MeanEstimate mean_with_error(std::span<const double> values) {
  MeanEstimate out;
  out.count = static_cast<Index>(values.size());
  if (values.empty()) {
    out.mean = out.std_error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double n = static_cast<double>(values.size());
  out.std_error = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

QuantileEstimate quantile_with_error(std::vector<double> values, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto at_rank = [&](double rank) {
    const auto r = static_cast<Index>(std::clamp(std::ceil(rank), 1.0, n));
    return values[static_cast<std::size_t>(r - 1)];
  };
  const double spread = std::sqrt(n * q * (1.0 - q));
  QuantileEstimate out;
  out.value = at_rank(n * q);
  out.std_error = 0.5 * (at_rank(n * q + spread) - at_rank(n * q - spread));
  return out;
}

}  // namespace cvomp
