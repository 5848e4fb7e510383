#include "cvomp/omp.hpp"

#include <cmath>
#include <string>

#include "cvomp/error.hpp"

namespace cvomp {

Index StoppingRule::cap(Index m) const {
  switch (kind) {
    case Kind::max_iterations:
      if (max_iterations < 1) throw InvalidArgument("max_iterations rule requires d >= 1");
      if (max_iterations > m)
        throw InvalidArgument("max_iterations rule requires d <= m (d=" + std::to_string(max_iterations) +
                              ", m=" + std::to_string(m) + ")");
      return max_iterations;
    case Kind::residual_threshold:
      if (!(threshold >= 0.0)) throw InvalidArgument("residual_threshold rule requires tau >= 0");
      return m;
    case Kind::relative_residual:
      if (max_iterations < 1) throw InvalidArgument("relative_residual rule requires M >= 1");
      if (max_iterations > m)
        throw InvalidArgument("relative_residual rule requires M <= m (M=" + std::to_string(max_iterations) +
                              ", m=" + std::to_string(m) + ")");
      if (!(threshold >= 0.0)) throw InvalidArgument("relative_residual rule requires rho >= 0");
      return max_iterations;
  }
  return m;
}

bool StoppingRule::satisfied(Index p, double residual_sq, double y_norm_sq) const {
  switch (kind) {
    case Kind::max_iterations:
      return p >= max_iterations;
    case Kind::residual_threshold:
      return residual_sq < threshold;
    case Kind::relative_residual:
      return p >= max_iterations || std::sqrt(residual_sq) < threshold * std::sqrt(y_norm_sq);
  }
  return true;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::rule_satisfied: return "rule_satisfied";
    case Termination::zero_residual: return "zero_residual";
    case Termination::degenerate: return "degenerate";
    case Termination::exhausted: return "exhausted";
  }
  return "unknown";
}

std::span<const Index> OmpTrace::support(Index p) const {
  if (p < 0 || p > static_cast<Index>(order.size())) throw InvalidArgument("iteration out of range");
  return {order.data(), static_cast<std::size_t>(p)};
}

const IterationRecord& OmpTrace::record(Index p) const {
  if (p < 1 || p > static_cast<Index>(records.size()))
    throw InvalidArgument("iteration " + std::to_string(p) + " not in trace");
  return records[static_cast<std::size_t>(p - 1)];
}

Vector OmpTrace::estimate(Index p, Index N) const {
  Vector x = Vector::Zero(N);
  if (p == 0) return x;
  const auto& rec = record(p);
  for (Index i = 0; i < p; ++i) x[order[static_cast<std::size_t>(i)]] = rec.coefficients[i];
  return x;
}

StepResult omp_step(const Matrix& A, const Vector& y, SupportSolve& state) {
  const double y_norm_sq = y.squaredNorm();
  if (state.residual_sq() <= kZeroResidualRatio * kZeroResidualRatio * y_norm_sq) {
    return {StepResult::Status::zero_residual, -1};
  }
  if (state.size() >= A.rows()) return {StepResult::Status::degenerate, -1};

  const Vector corr = A.transpose() * state.residual();
  std::vector<bool> taken(static_cast<std::size_t>(A.cols()), false);
  for (Index j : state.support()) taken[static_cast<std::size_t>(j)] = true;

  Index best = -1;
  double best_abs = -1.0;
  for (Index j = 0; j < A.cols(); ++j) {
    if (taken[static_cast<std::size_t>(j)]) continue;
    const double a = std::abs(corr[j]);
    if (a > best_abs) {
      best_abs = a;
      best = j;
    }
  }
  if (best < 0) return {StepResult::Status::degenerate, -1};
  try {
    state.append(best, A.col(best));
  } catch (const DegenerateSupport&) {
    return {StepResult::Status::degenerate, best};
  }
  return {StepResult::Status::advanced, best};
}

OmpTrace run_omp(const Matrix& A, const Vector& y, const StoppingRule& rule) {
  if (y.size() != A.rows()) throw InvalidArgument("run_omp: y length does not match A rows");
  const Index cap = rule.cap(A.rows());

  OmpTrace trace;
  trace.d = cap;
  trace.y_norm_sq = y.squaredNorm();
  trace.order.reserve(static_cast<std::size_t>(cap));
  trace.records.reserve(static_cast<std::size_t>(cap));
  trace.termination = Termination::exhausted;

  SupportSolve state(y);
  for (Index p = 1; p <= cap; ++p) {
    const StepResult step = omp_step(A, y, state);
    if (step.status == StepResult::Status::zero_residual) {
      trace.termination = Termination::zero_residual;
      break;
    }
    if (step.status == StepResult::Status::degenerate) {
      trace.termination = Termination::degenerate;
      break;
    }
    trace.order.push_back(step.index);
    IterationRecord rec;
    rec.p = p;
    rec.coefficients = state.coefficients();
    rec.residual_sq = state.residual_sq();
    trace.records.push_back(std::move(rec));
    if (rule.satisfied(p, trace.records.back().residual_sq, trace.y_norm_sq)) {
      trace.termination = Termination::rule_satisfied;
      break;
    }
  }
  return trace;
}

std::vector<double> cv_residuals(const OmpTrace& trace, const Matrix& A_cv, const Vector& y_cv) {
  std::vector<double> out;
  out.reserve(trace.records.size());
  Vector r(y_cv.size());
  for (const auto& rec : trace.records) {
    r = y_cv;
    for (Index i = 0; i < rec.p; ++i) r.noalias() -= rec.coefficients[i] * A_cv.col(trace.order[static_cast<std::size_t>(i)]);
    out.push_back(r.squaredNorm());
  }
  return out;
}

std::vector<double> recovery_errors(const OmpTrace& trace, const Vector& x) {
  std::vector<Index> truth;
  for (Index j = 0; j < x.size(); ++j)
    if (x[j] != 0.0) truth.push_back(j);
  std::vector<bool> in_support(static_cast<std::size_t>(x.size()), false);

  std::vector<double> out;
  out.reserve(trace.records.size());
  for (const auto& rec : trace.records) {
    in_support[static_cast<std::size_t>(trace.order[static_cast<std::size_t>(rec.p - 1)])] = true;
    double err = 0.0;
    for (Index i = 0; i < rec.p; ++i) {
      const double diff = x[trace.order[static_cast<std::size_t>(i)]] - rec.coefficients[i];
      err += diff * diff;
    }
    for (Index j : truth)
      if (!in_support[static_cast<std::size_t>(j)]) err += x[j] * x[j];
    out.push_back(err);
  }
  return out;
}

std::optional<Index> argmin_iteration(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[best]) best = i;
  return static_cast<Index>(best + 1);
}

void attach_cv(OmpTrace& trace, const Matrix& A_cv, const Vector& y_cv) {
  const auto values = cv_residuals(trace, A_cv, y_cv);
  for (std::size_t i = 0; i < values.size(); ++i) trace.records[i].cv_residual = values[i];
  trace.initial_cv_residual = y_cv.squaredNorm();
  trace.selected_cv = argmin_iteration(values);
}

void attach_ground_truth(OmpTrace& trace, const Vector& x) {
  const auto values = recovery_errors(trace, x);
  for (std::size_t i = 0; i < values.size(); ++i) trace.records[i].recovery_error = values[i];
  trace.selected_oracle = argmin_iteration(values);
}

std::optional<Index> first_stop(const OmpTrace& trace, const StoppingRule& rule, Index m) {
  const Index cap = rule.cap(m);
  for (const auto& rec : trace.records) {
    if (rec.p >= cap || rule.satisfied(rec.p, rec.residual_sq, trace.y_norm_sq)) return rec.p;
  }
  if (trace.termination == Termination::zero_residual || trace.termination == Termination::degenerate) {
    return static_cast<Index>(trace.records.size());
  }
  return std::nullopt;
}

OmpTrace run_omp(const SensingProblem& problem, const StoppingRule& rule) {
  OmpTrace trace = run_omp(problem.A, problem.y, rule);
  if (problem.A_cv.rows() > 0) attach_cv(trace, problem.A_cv, problem.y_cv);
  attach_ground_truth(trace, problem.signal.values);
  return trace;
}

OmpCvResult omp_cv(const Matrix& A, const Vector& y, const Matrix& A_cv, const Vector& y_cv, Index d) {
  if (A_cv.cols() != A.cols()) throw InvalidArgument("omp_cv: A_cv and A must have the same number of columns");
  if (y_cv.size() != A_cv.rows()) throw InvalidArgument("omp_cv: y_cv length does not match A_cv rows");
  OmpCvResult out;
  out.trace = run_omp(A, y, StoppingRule::iterations(d));
  attach_cv(out.trace, A_cv, y_cv);
  out.estimate = out.trace.estimate(out.trace.selected_cv.value_or(0), A.cols());
  return out;
}

OmpCvResult run_omp_cv(const SensingProblem& problem, Index d) {
  OmpCvResult out = omp_cv(problem.A, problem.y, problem.A_cv, problem.y_cv, d);
  attach_ground_truth(out.trace, problem.signal.values);
  return out;
}

double estimate_noise_power(const Matrix& A, const Vector& y, const Vector& x_hat) {
  if (A.rows() != y.size() || A.cols() != x_hat.size())
    throw InvalidArgument("estimate_noise_power: dimensions do not agree");
  return (y - A * x_hat).squaredNorm() / static_cast<double>(A.rows());
}

}  // namespace cvomp
