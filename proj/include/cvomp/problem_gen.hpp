#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cvomp {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Dims {
  Index N = 0;     // signal length
  Index m = 0;     // reconstruction measurements
  Index m_cv = 0;  // cross-validation measurements
  Index k = 0;     // sparsity

  friend bool operator==(const Dims&, const Dims&) = default;
};

// Exactly k-sparse signal. `support` is sorted ascending.
struct SparseSignal {
  Vector values;
  std::vector<Index> support;

  [[nodiscard]] Index sparsity() const { return static_cast<Index>(support.size()); }
};

enum class EnsembleKind { gaussian, rademacher };

// Entry distribution of the sensing blocks. All entries have mean 0 and
// variance 1/m; `gamma` is Var(a_ij^2).
struct MatrixEnsemble {
  EnsembleKind kind = EnsembleKind::gaussian;
  double gamma = 0.0;

  static MatrixEnsemble gaussian(Index m);
  static MatrixEnsemble rademacher();
  static MatrixEnsemble parse(std::string_view name, Index m);
};

std::string to_string(EnsembleKind kind);

struct CvBlock {
  Matrix A_cv;
  Vector y_cv;
  Vector a_cv_noise;  // unit-scale noise direction, n_cv = sigma_n * a_cv_noise
};

struct GenerateOptions {
  // Rescale every column of A to unit norm (and of A_cv to sqrt(m_cv/m)).
  // Off by default: the analysis assumes i.i.d. entries.
  bool normalize_columns = false;
};

// A generated instance: y = A x + sigma_n a_n, y_cv = A_cv x + sigma_n a_cv_n.
struct SensingProblem {
  Matrix A;
  Matrix A_cv;
  Vector y;
  Vector y_cv;
  Vector a_noise;
  Vector a_cv_noise;
  SparseSignal signal;
  double sigma_n = 0.0;
  MatrixEnsemble ensemble;
  Dims dims;
  std::uint64_t seed = 0;
  bool normalized_columns = false;

  [[nodiscard]] Vector noise() const { return sigma_n * a_noise; }
  [[nodiscard]] Vector cv_noise() const { return sigma_n * a_cv_noise; }
};

// Sub-stream identifiers under one master seed.
enum class Stream : std::uint64_t {
  support = 1,
  signal_values = 2,
  matrix = 3,
  noise = 4,
  cv_matrix = 5,
  cv_noise = 6,
};

SensingProblem generate_problem(const Dims& dims, double sigma_n, const MatrixEnsemble& ensemble,
                                std::uint64_t seed, const GenerateOptions& options = {});

// Fresh CV block drawn from `seed`'s CV sub-streams. Rows are filled in
// order, so a block with fewer rows is a row prefix of a larger one drawn
// from the same seed.
CvBlock sample_cv_block(const SensingProblem& problem, std::uint64_t seed);
CvBlock sample_cv_block(const SensingProblem& problem, Index m_cv, std::uint64_t seed);

// Copy of `problem` with its CV block replaced.
SensingProblem with_cv_block(SensingProblem problem, CvBlock block);

// Splits the reconstruction rows of `full` (M rows) into a reconstruction
// block of m rows and a CV block of the next m_cv rows, rescaled so both have
// entry variance 1/m. Signal and noise are shared, so y and y_cv stay
// consistent with the measurement model.
SensingProblem split_measurements(const SensingProblem& full, Index m, Index m_cv);

// Fills an rows x cols matrix in row-major order with ensemble entries of
// variance 1/variance_m.
Matrix draw_ensemble_matrix(Index rows, Index cols, const MatrixEnsemble& ensemble,
                            Index variance_m, std::uint64_t master, Stream stream);

}  // namespace cvomp
