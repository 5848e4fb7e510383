#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>

#include "cvomp/cv_theory.hpp"
#include "cvomp/error.hpp"
#include "cvomp/experiments.hpp"
#include "cvomp/omp.hpp"
#include "cvomp/problem_gen.hpp"
#include "cvomp/rip_checks.hpp"
#include "cvomp/solver_core.hpp"

namespace py = pybind11;
using namespace cvomp;

namespace {

py::dict problem_dict(const SensingProblem& p) {
  py::dict d;
  d["A"] = p.A;
  d["y"] = p.y;
  d["A_cv"] = p.A_cv;
  d["y_cv"] = p.y_cv;
  d["x"] = p.signal.values;
  d["support"] = p.signal.support;
  d["sigma_n"] = p.sigma_n;
  d["ensemble"] = to_string(p.ensemble.kind);
  d["gamma"] = p.ensemble.gamma;
  d["seed"] = p.seed;
  return d;
}

py::dict trace_dict(const OmpTrace& t) {
  py::dict d;
  d["order"] = t.order;
  std::vector<double> res, cv, err;
  for (const auto& r : t.records) {
    res.push_back(r.residual_sq);
    if (r.cv_residual) cv.push_back(*r.cv_residual);
    if (r.recovery_error) err.push_back(*r.recovery_error);
  }
  d["residual_sq"] = res;
  d["cv_residual"] = cv;
  d["recovery_error"] = err;
  d["termination"] = to_string(t.termination);
  d["selected_cv"] = t.selected_cv ? py::cast(*t.selected_cv) : py::none();
  d["selected_oracle"] = t.selected_oracle ? py::cast(*t.selected_oracle) : py::none();
  return d;
}

py::dict gaussian_dict(const GaussianApprox& g) {
  py::dict d;
  d["mean"] = g.mean;
  d["variance"] = g.variance;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cross-validated orthogonal matching pursuit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "generate_problem",
      [](Index N, Index m, Index m_cv, Index k, double sigma_n, const std::string& ensemble, std::uint64_t seed,
         bool normalize_columns) {
        return problem_dict(generate_problem({N, m, m_cv, k}, sigma_n, MatrixEnsemble::parse(ensemble, m), seed,
                                             {normalize_columns}));
      },
      py::arg("N"), py::arg("m"), py::arg("m_cv"), py::arg("k"), py::arg("sigma_n"),
      py::arg("ensemble") = "gaussian", py::arg("seed") = 1, py::arg("normalize_columns") = false);

  m.def(
      "least_squares",
      [](const Matrix& A, const Vector& y, const std::vector<Index>& support) {
        const auto s = least_squares_on_support(A, y, support);
        return py::make_tuple(s.coefficients(), s.residual());
      },
      py::arg("A"), py::arg("y"), py::arg("support"));

  m.def(
      "omp",
      [](const Matrix& A, const Vector& y, Index iterations) {
        return trace_dict(run_omp(A, y, StoppingRule::iterations(iterations)));
      },
      py::arg("A"), py::arg("y"), py::arg("iterations"));

  m.def(
      "omp_cv",
      [](const Matrix& A, const Vector& y, const Matrix& A_cv, const Vector& y_cv, Index d) {
        const auto r = omp_cv(A, y, A_cv, y_cv, d);
        return py::make_tuple(r.estimate, trace_dict(r.trace));
      },
      py::arg("A"), py::arg("y"), py::arg("A_cv"), py::arg("y_cv"), py::arg("d"));

  m.def(
      "cv_residual_distribution",
      [](double eps_x, double sigma_n, Index m, Index m_cv) {
        return gaussian_dict(cv_residual_distribution(eps_x, sigma_n, m, m_cv));
      },
      py::arg("eps_x"), py::arg("sigma_n"), py::arg("m"), py::arg("m_cv"));

  m.def(
      "cv_diff_distribution",
      [](double eps_g_p, double eps_g_q, double rho_g, Index m, Index m_cv) {
        return gaussian_dict(cv_diff_distribution({eps_g_p, eps_g_q, rho_g}, m, m_cv));
      },
      py::arg("eps_g_p"), py::arg("eps_g_q"), py::arg("rho_g"), py::arg("m"), py::arg("m_cv"));

  m.def("interval_factor", &interval_factor, py::arg("lam"), py::arg("m"), py::arg("m_cv"), py::arg("plus"));

  m.def(
      "estimation_interval",
      [](double eps_cv, double lam, Index m, Index m_cv, double sigma_n_sq) {
        const auto i = estimation_interval(eps_cv, lam, m, m_cv, sigma_n_sq);
        return py::make_tuple(i.lower, i.upper, i.confidence);
      },
      py::arg("eps_cv"), py::arg("lam"), py::arg("m"), py::arg("m_cv"), py::arg("sigma_n_sq"));

  m.def(
      "comparison_success",
      [](double eps_g_p, double eps_g_q, double rho_g, Index m_cv) {
        const auto s = comparison_success({eps_g_p, eps_g_q, rho_g}, m_cv);
        return py::make_tuple(s.lambda, s.probability);
      },
      py::arg("eps_g_p"), py::arg("eps_g_q"), py::arg("rho_g"), py::arg("m_cv"));

  m.def("min_ratio_for_confidence", &min_ratio_for_confidence, py::arg("lambda0"), py::arg("m_cv"),
        py::arg("rho_g"));
  m.def("error_ratio_threshold", &error_ratio_threshold, py::arg("lambda0"), py::arg("m_cv"),
        py::arg("decorrelation"));

  m.def(
      "eta_bound",
      [](double delta) { return eta_bound(RicTable::uniform(delta, 10), 1, 2, 0); }, py::arg("delta"));

  m.def(
      "theorem4_constants",
      [](double delta) {
        const auto c = theorem4_constants(delta, eta_bound(RicTable::uniform(delta, 10), 1, 2, 0));
        py::dict d;
        d["eta"] = c.eta;
        d["beta1"] = c.beta1;
        d["beta2"] = c.beta2;
        d["beta3"] = c.beta3;
        d["beta4"] = c.beta4;
        d["rho_lb"] = c.rho_lb;
        d["beta5_eff"] = c.beta5_eff;
        return d;
      },
      py::arg("delta"));

  m.def(
      "estimate_ric",
      [](const Matrix& A, Index k, Index samples, std::uint64_t seed) {
        const auto mode = samples > 0 ? RicMode::sampled(samples, seed) : RicMode::exhaustive();
        const auto e = estimate_ric(A, k, mode);
        return py::make_tuple(e.delta_k, e.lower_bound_only());
      },
      py::arg("A"), py::arg("k"), py::arg("samples") = 0, py::arg("seed") = 1);

  m.def(
      "experiment_names",
      [] {
        std::vector<std::string> out;
        for (auto n : all_experiments()) out.push_back(to_string(n));
        return out;
      });

  m.def(
      "run_experiment",
      [](const std::string& name, const std::map<std::string, std::string>& overrides, Index workers) {
        auto c = ExperimentConfig::defaults(parse_experiment(name));
        for (const auto& [k, v] : overrides) c.set(k, v);
        c.validate();
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c, {workers, {}});
        }
        py::list rows;
        for (const auto& row : r.rows) rows.append(py::make_tuple(row.point, row.statistic, row.value, row.trials));
        py::dict d;
        d["rows"] = rows;
        d["csv"] = r.csv();
        d["notes"] = r.notes;
        d["config_hash"] = c.hash();
        return d;
      },
      py::arg("name"), py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("workers") = 1);
}
