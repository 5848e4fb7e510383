#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cvomp/problem_gen.hpp"
#include "cvomp/solver_core.hpp"

namespace cvomp {

// Residual norms at or below this fraction of |y| end the iteration.
inline constexpr double kZeroResidualRatio = 1e-13;

struct StoppingRule {
  enum class Kind { max_iterations, residual_threshold, relative_residual };

  Kind kind = Kind::max_iterations;
  Index max_iterations = 0;  // d, or M for relative_residual; 0 means "up to m" otherwise
  double threshold = 0.0;    // tau on |r|^2, or rho_rel on |r| / |y|

  static StoppingRule iterations(Index d) { return {Kind::max_iterations, d, 0.0}; }
  // Stop once |y - A x|^2 < tau.
  static StoppingRule residual_below(double tau) { return {Kind::residual_threshold, 0, tau}; }
  // Stop after `max_iter` iterations or once |y - A x| < rho * |y|.
  static StoppingRule relative(double rho, Index max_iter) { return {Kind::relative_residual, max_iter, rho}; }

  // Iteration cap for a problem with m rows; throws if the rule is invalid.
  [[nodiscard]] Index cap(Index m) const;
  [[nodiscard]] bool satisfied(Index p, double residual_sq, double y_norm_sq) const;
};

struct IterationRecord {
  Index p = 0;
  Vector coefficients;  // aligned with the first p entries of OmpTrace::order
  double residual_sq = 0.0;
  std::optional<double> cv_residual;
  std::optional<double> recovery_error;
};

enum class Termination { rule_satisfied, zero_residual, degenerate, exhausted };

struct OmpTrace {
  std::vector<Index> order;  // selection order; T^p = first p entries
  std::vector<IterationRecord> records;
  Index d = 0;
  Termination termination = Termination::rule_satisfied;
  double y_norm_sq = 0.0;
  std::optional<double> initial_cv_residual;  // |y_cv|^2
  std::optional<Index> selected_cv;           // iteration p (1-based)
  std::optional<Index> selected_oracle;

  [[nodiscard]] bool flagged() const { return termination == Termination::degenerate; }
  [[nodiscard]] std::span<const Index> support(Index p) const;
  [[nodiscard]] const IterationRecord& record(Index p) const;
  // Dense length-N estimate of iteration p (p = 0 gives the zero vector).
  [[nodiscard]] Vector estimate(Index p, Index N) const;
};

std::string to_string(Termination t);

struct StepResult {
  enum class Status { advanced, zero_residual, degenerate };
  Status status = Status::advanced;
  Index index = -1;
};

// One OMP iteration in place: picks argmax_j |<a_j, r>| over j outside the
// support (ties to the smallest j) and extends the fit with it.
StepResult omp_step(const Matrix& A, const Vector& y, SupportSolve& state);

// Plain OMP on (A, y); no ground truth, no CV.
OmpTrace run_omp(const Matrix& A, const Vector& y, const StoppingRule& rule);

// Fills cv_residual on every record, initial_cv_residual, and selected_cv.
void attach_cv(OmpTrace& trace, const Matrix& A_cv, const Vector& y_cv);
// Fills recovery_error on every record and selected_oracle.
void attach_ground_truth(OmpTrace& trace, const Vector& x);

// A_cv x^p - y_cv residual squares for every record.
std::vector<double> cv_residuals(const OmpTrace& trace, const Matrix& A_cv, const Vector& y_cv);
// Recovery errors |x - x^p|^2 for every record.
std::vector<double> recovery_errors(const OmpTrace& trace, const Vector& x);

// argmin over records (ties to the earliest), as a 1-based iteration.
std::optional<Index> argmin_iteration(std::span<const double> values);

// First iteration p in the trace at which `rule` would have stopped OMP.
// Because OMP is deterministic in (A, y), truncating a longer trace there
// reproduces run_omp(A, y, rule) exactly.
std::optional<Index> first_stop(const OmpTrace& trace, const StoppingRule& rule, Index m);

// Harness form: OMP on problem.(A, y) with CV residuals and, because the
// generated problem carries it, the recovery error of every iterate.
OmpTrace run_omp(const SensingProblem& problem, const StoppingRule& rule);

struct OmpCvResult {
  Vector estimate;
  OmpTrace trace;
};

// OMP-CV: d iterations, return the iterate with minimal CV residual.
// Uses only (A, y, A_cv, y_cv).
OmpCvResult omp_cv(const Matrix& A, const Vector& y, const Matrix& A_cv, const Vector& y_cv, Index d);
// Same, with ground-truth errors attached for evaluation.
OmpCvResult run_omp_cv(const SensingProblem& problem, Index d);

// Minimum-variance unbiased noise estimate |y - A x_hat|^2 / m.
double estimate_noise_power(const Matrix& A, const Vector& y, const Vector& x_hat);

}  // namespace cvomp
