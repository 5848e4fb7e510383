#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cvomp/problem_gen.hpp"

namespace cvomp {

// JSON problem bundle used for fixtures and for exchanging instances with
// other implementations. Layout (format "cvomp-problem", version 1):
//
//   dims       {N, m, m_cv, k}
//   seed, sigma_n, normalized_columns
//   ensemble   {kind, gamma}
//   A, A_cv    {rows, cols, data}   data is row-major
//   y, y_cv, noise_direction, cv_noise_direction   arrays
//   signal     {support, values}    optional; values is the dense length-N vector
//
// Doubles are written with round-trip precision.
struct LoadedProblem {
  SensingProblem problem;
  bool has_ground_truth = true;
};

std::string problem_to_json(const SensingProblem& problem, bool include_ground_truth = true);
LoadedProblem problem_from_json(std::string_view text);

void save_problem(const std::filesystem::path& path, const SensingProblem& problem,
                  bool include_ground_truth = true);
LoadedProblem load_problem(const std::filesystem::path& path);

}  // namespace cvomp
