#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvomp/cv_theory.hpp"
#include "cvomp/problem_gen.hpp"

namespace cvomp {

// Largest C(N, k) enumerated in exhaustive mode.
inline constexpr double kExhaustiveCap = 2e5;
// A lemma inequality counts as violated when its slack drops below this.
inline constexpr double kSlackTolerance = -1e-10;

struct RicMode {
  enum class Kind { exhaustive, sampled };
  Kind kind = Kind::exhaustive;
  Index n_supports = 0;   // sampled only
  std::uint64_t seed = 0; // sampled only

  static RicMode exhaustive() { return {}; }
  static RicMode sampled(Index n_supports, std::uint64_t seed) { return {Kind::sampled, n_supports, seed}; }
};

struct RicEstimate {
  Index k = 0;
  double delta_k = 0.0;
  RicMode mode;
  Index supports_inspected = 0;

  // Sampled estimates only bound delta_k from below.
  [[nodiscard]] bool lower_bound_only() const { return mode.kind == RicMode::Kind::sampled; }
};

std::string to_string(const RicMode& mode);

// C(n, k) as a double (exact well past the exhaustive cap).
double binomial_count(Index n, Index k);

// max(lambda_max - 1, 1 - lambda_min) of the Gram block gram[support, support].
double support_deviation(const Matrix& gram, std::span<const Index> support);

RicEstimate estimate_ric(const Matrix& A, Index k, const RicMode& mode);
// delta_1 .. delta_{k_max}, made non-decreasing by a running max (exhaustive
// values already are).
std::vector<RicEstimate> estimate_ric_family(const Matrix& A, Index k_max, const RicMode& mode);
RicTable to_table(std::span<const RicEstimate> family);

struct LemmaCheck {
  std::string name;
  Index trials = 0;
  Index violations = 0;
  Index skipped = 0;  // draws where the lemma's hypothesis did not hold
  double min_slack = 0.0;
};

struct LemmaReport {
  std::vector<LemmaCheck> checks;
  bool advisory = false;  // some RIC was only sampled

  [[nodiscard]] Index total_violations() const;
  [[nodiscard]] const LemmaCheck& check(const std::string& name) const;
};

// Draws `trials` random disjoint (S, T) with |S| + |T| <= the largest RIC
// subscript available, and x_T ~ N(0, I), and evaluates every consequence
// inequality (norm equivalences, approximate orthogonality, pseudo-inverse
// and projection bounds) against the supplied RICs.
LemmaReport check_consequence_lemmas(const Matrix& A, std::span<const RicEstimate> rics, Index trials,
                                     std::uint64_t seed);

struct CorrectionBoundOptions {
  Index N = 19;
  Index m = 200;
  Index k = 3;
  double sigma_n = 0.1;
  Index instances = 200;
  std::uint64_t seed = 1;
};

struct CorrectionBoundReport {
  Index instances = 0;
  Index pairs_checked = 0;
  Index pairs_skipped = 0;  // eta undefined for the instance's RICs
  Index violations = 0;
  double min_slack = 0.0;        // eta (|x_rest|^2 + sigma^2) - |delta|^2
  double max_ratio = 0.0;        // |delta|^2 / (eta (|x_rest|^2 + sigma^2))
  double max_identity_error = 0.0;  // closed-form delta vs the solver's iterate
};

// On small instances, runs k + 1 OMP iterations and, for every pair p < q,
// compares |delta_{T^{q-p}}|^2 with eta (|x_{(T^q)^c}|^2 + sigma_n^2), where
// delta is read off the iterate x^q and eta uses exhaustive RICs of the
// generalized matrix [A, a_n].
CorrectionBoundReport check_correction_bound(const CorrectionBoundOptions& options);

}  // namespace cvomp
