#include "cvomp/problem_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cvomp/error.hpp"
#include "cvomp/rng.hpp"

namespace cvomp {

MatrixEnsemble MatrixEnsemble::gaussian(Index m) {
  const double md = static_cast<double>(m);
  return {EnsembleKind::gaussian, 2.0 / (md * md)};
}

MatrixEnsemble MatrixEnsemble::rademacher() { return {EnsembleKind::rademacher, 0.0}; }

MatrixEnsemble MatrixEnsemble::parse(std::string_view name, Index m) {
  if (name == "gaussian") return gaussian(m);
  if (name == "rademacher") return rademacher();
  throw InvalidArgument("unknown ensemble '" + std::string(name) + "' (expected gaussian or rademacher)");
}

std::string to_string(EnsembleKind kind) {
  return kind == EnsembleKind::gaussian ? "gaussian" : "rademacher";
}

namespace {

void check_dims(const Dims& d, double sigma_n) {
  auto fail = [](const std::string& what) { throw InvalidArgument("invalid dimensions: requires " + what); };
  if (d.k < 0) fail("k >= 0");
  if (d.k > d.m) fail("k <= m (k=" + std::to_string(d.k) + ", m=" + std::to_string(d.m) + ")");
  if (d.m > d.N) fail("m <= N (m=" + std::to_string(d.m) + ", N=" + std::to_string(d.N) + ")");
  if (d.m < 1) fail("m >= 1");
  if (d.m_cv < 1) fail("m_cv >= 1");
  if (!(sigma_n >= 0.0) || !std::isfinite(sigma_n)) fail("sigma_n >= 0");
}

Vector draw_noise_direction(Index rows, Index variance_m, std::uint64_t master, Stream stream) {
  auto engine = make_engine(master, static_cast<std::uint64_t>(stream));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(variance_m)));
  Vector v(rows);
  for (Index i = 0; i < rows; ++i) v[i] = normal(engine);
  return v;
}

void normalize_columns(Matrix& M, double target_norm) {
  for (Index j = 0; j < M.cols(); ++j) {
    const double n = M.col(j).norm();
    if (n > 0.0) M.col(j) *= target_norm / n;
  }
}

CvBlock make_cv_block(const SensingProblem& p, Index m_cv, std::uint64_t seed) {
  if (m_cv < 1) throw InvalidArgument("invalid dimensions: requires m_cv >= 1");
  CvBlock block;
  block.A_cv = draw_ensemble_matrix(m_cv, p.dims.N, p.ensemble, p.dims.m, seed, Stream::cv_matrix);
  if (p.normalized_columns) {
    normalize_columns(block.A_cv, std::sqrt(static_cast<double>(m_cv) / static_cast<double>(p.dims.m)));
  }
  block.a_cv_noise = draw_noise_direction(m_cv, p.dims.m, seed, Stream::cv_noise);
  block.y_cv = block.A_cv * p.signal.values + p.sigma_n * block.a_cv_noise;
  return block;
}

}  // namespace

Matrix draw_ensemble_matrix(Index rows, Index cols, const MatrixEnsemble& ensemble, Index variance_m,
                            std::uint64_t master, Stream stream) {
  auto engine = make_engine(master, static_cast<std::uint64_t>(stream));
  const double scale = 1.0 / std::sqrt(static_cast<double>(variance_m));
  Matrix M(rows, cols);
  if (ensemble.kind == EnsembleKind::gaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) M(i, j) = scale * normal(engine);
  } else {
    std::bernoulli_distribution coin(0.5);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) M(i, j) = coin(engine) ? scale : -scale;
  }
  return M;
}

SensingProblem generate_problem(const Dims& dims, double sigma_n, const MatrixEnsemble& ensemble,
                                std::uint64_t seed, const GenerateOptions& options) {
  check_dims(dims, sigma_n);

  SensingProblem p;
  p.dims = dims;
  p.sigma_n = sigma_n;
  p.ensemble = ensemble;
  p.seed = seed;
  p.normalized_columns = options.normalize_columns;

  {
    auto engine = make_engine(seed, static_cast<std::uint64_t>(Stream::support));
    std::vector<Index> all(static_cast<std::size_t>(dims.N));
    std::iota(all.begin(), all.end(), Index{0});
    p.signal.support.reserve(static_cast<std::size_t>(dims.k));
    std::sample(all.begin(), all.end(), std::back_inserter(p.signal.support), dims.k, engine);
  }
  p.signal.values = Vector::Zero(dims.N);
  {
    auto engine = make_engine(seed, static_cast<std::uint64_t>(Stream::signal_values));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index j : p.signal.support) p.signal.values[j] = normal(engine);
  }

  p.A = draw_ensemble_matrix(dims.m, dims.N, ensemble, dims.m, seed, Stream::matrix);
  if (options.normalize_columns) normalize_columns(p.A, 1.0);
  p.a_noise = draw_noise_direction(dims.m, dims.m, seed, Stream::noise);
  p.y = p.A * p.signal.values + sigma_n * p.a_noise;

  CvBlock cv = make_cv_block(p, dims.m_cv, seed);
  p.A_cv = std::move(cv.A_cv);
  p.y_cv = std::move(cv.y_cv);
  p.a_cv_noise = std::move(cv.a_cv_noise);
  return p;
}

CvBlock sample_cv_block(const SensingProblem& problem, std::uint64_t seed) {
  return make_cv_block(problem, problem.dims.m_cv, seed);
}

CvBlock sample_cv_block(const SensingProblem& problem, Index m_cv, std::uint64_t seed) {
  return make_cv_block(problem, m_cv, seed);
}

SensingProblem with_cv_block(SensingProblem problem, CvBlock block) {
  problem.dims.m_cv = block.A_cv.rows();
  problem.A_cv = std::move(block.A_cv);
  problem.y_cv = std::move(block.y_cv);
  problem.a_cv_noise = std::move(block.a_cv_noise);
  return problem;
}

SensingProblem split_measurements(const SensingProblem& full, Index m, Index m_cv) {
  const Index M = full.dims.m;
  if (m < 1 || m_cv < 0 || m + m_cv > M)
    throw InvalidArgument("split requires m >= 1 and m + m_cv <= M (M=" + std::to_string(M) + ")");
  if (full.dims.k > m) throw InvalidArgument("split requires k <= m");
  const double c = std::sqrt(static_cast<double>(M) / static_cast<double>(m));

  SensingProblem p;
  p.dims = {full.dims.N, m, m_cv, full.dims.k};
  p.signal = full.signal;
  p.sigma_n = full.sigma_n;
  p.ensemble = full.ensemble.kind == EnsembleKind::gaussian ? MatrixEnsemble::gaussian(m) : full.ensemble;
  p.seed = full.seed;
  p.normalized_columns = false;
  p.A = c * full.A.topRows(m);
  p.a_noise = c * full.a_noise.head(m);
  p.y = c * full.y.head(m);
  p.A_cv = c * full.A.middleRows(m, m_cv);
  p.a_cv_noise = c * full.a_noise.segment(m, m_cv);
  p.y_cv = c * full.y.segment(m, m_cv);
  return p;
}

}  // namespace cvomp
