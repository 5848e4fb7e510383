#include "cvomp/bundle.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cvomp/error.hpp"

namespace cvomp {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& M) {
  json data = json::array();
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Matrix matrix_from_json(const json& j, const char* name) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows * cols) {
    throw ConfigError(std::string("bundle matrix '") + name + "' has " + std::to_string(data.size()) +
                      " entries, expected rows*cols = " + std::to_string(rows * cols));
  }
  Matrix M(rows, cols);
  std::size_t t = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) M(i, c) = data[t++].get<double>();
  return M;
}

Vector vector_from_json(const json& j, Index expected, const char* name) {
  if (static_cast<Index>(j.size()) != expected) {
    throw ConfigError(std::string("bundle vector '") + name + "' has length " + std::to_string(j.size()) +
                      ", expected " + std::to_string(expected));
  }
  Vector v(expected);
  for (Index i = 0; i < expected; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string problem_to_json(const SensingProblem& p, bool include_ground_truth) {
  json j;
  j["format"] = "cvomp-problem";
  j["version"] = 1;
  j["dims"] = {{"N", p.dims.N}, {"m", p.dims.m}, {"m_cv", p.dims.m_cv}, {"k", p.dims.k}};
  j["seed"] = p.seed;
  j["sigma_n"] = p.sigma_n;
  j["normalized_columns"] = p.normalized_columns;
  j["ensemble"] = {{"kind", to_string(p.ensemble.kind)}, {"gamma", p.ensemble.gamma}};
  j["A"] = matrix_to_json(p.A);
  j["A_cv"] = matrix_to_json(p.A_cv);
  j["y"] = vector_to_json(p.y);
  j["y_cv"] = vector_to_json(p.y_cv);
  j["noise_direction"] = vector_to_json(p.a_noise);
  j["cv_noise_direction"] = vector_to_json(p.a_cv_noise);
  if (include_ground_truth) {
    j["signal"] = {{"support", p.signal.support}, {"values", vector_to_json(p.signal.values)}};
  }
  return j.dump();
}

LoadedProblem problem_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("bundle is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string{}) != "cvomp-problem") throw ConfigError("bundle format tag missing or wrong");
    if (j.value("version", 0) != 1) throw ConfigError("unsupported bundle version");

    LoadedProblem out;
    SensingProblem& p = out.problem;
    const auto& d = j.at("dims");
    p.dims = {d.at("N").get<Index>(), d.at("m").get<Index>(), d.at("m_cv").get<Index>(), d.at("k").get<Index>()};
    p.seed = j.value("seed", std::uint64_t{0});
    p.sigma_n = j.at("sigma_n").get<double>();
    p.normalized_columns = j.value("normalized_columns", false);
    const auto& e = j.at("ensemble");
    p.ensemble = MatrixEnsemble::parse(e.at("kind").get<std::string>(), p.dims.m);
    p.ensemble.gamma = e.value("gamma", p.ensemble.gamma);

    p.A = matrix_from_json(j.at("A"), "A");
    p.A_cv = matrix_from_json(j.at("A_cv"), "A_cv");
    if (p.A.rows() != p.dims.m || p.A.cols() != p.dims.N) throw ConfigError("bundle A does not match dims");
    if (p.A_cv.rows() != p.dims.m_cv || p.A_cv.cols() != p.dims.N)
      throw ConfigError("bundle A_cv does not match dims");
    p.y = vector_from_json(j.at("y"), p.dims.m, "y");
    p.y_cv = vector_from_json(j.at("y_cv"), p.dims.m_cv, "y_cv");
    p.a_noise = j.contains("noise_direction") ? vector_from_json(j["noise_direction"], p.dims.m, "noise_direction")
                                              : Vector::Zero(p.dims.m);
    p.a_cv_noise = j.contains("cv_noise_direction")
                       ? vector_from_json(j["cv_noise_direction"], p.dims.m_cv, "cv_noise_direction")
                       : Vector::Zero(p.dims.m_cv);

    out.has_ground_truth = j.contains("signal");
    if (out.has_ground_truth) {
      const auto& s = j["signal"];
      p.signal.support = s.at("support").get<std::vector<Index>>();
      p.signal.values = vector_from_json(s.at("values"), p.dims.N, "signal.values");
    } else {
      p.signal.values = Vector::Zero(p.dims.N);
    }
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed bundle: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("malformed bundle: ") + e.what());
  }
}

void save_problem(const std::filesystem::path& path, const SensingProblem& problem, bool include_ground_truth) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out << problem_to_json(problem, include_ground_truth) << '\n';
}

LoadedProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bundle '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return problem_from_json(buf.str());
}

}  // namespace cvomp
