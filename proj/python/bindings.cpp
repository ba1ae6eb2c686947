// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "covlim/covariance_chain.hpp"
#include "covlim/error.hpp"
#include "covlim/experiment_config.hpp"
#include "covlim/experiments.hpp"
#include "covlim/gaussian_kernels.hpp"
#include "covlim/limit_integrators.hpp"
#include "covlim/path_ensemble.hpp"
#include "covlim/stats.hpp"

namespace py = pybind11;
using namespace covlim;

namespace {

using Json = nlohmann::ordered_json;

SampleSet samples_of(const std::vector<double>& values, std::string label = {}) {
  SampleSet s;
  s.values = values;
  s.label = std::move(label);
  return s;
}

py::dict summary_dict(const Summary& s) {
  py::dict d;
  d["count"] = s.count;
  d["mean"] = s.mean;
  d["variance"] = s.variance;
  d["skewness"] = s.skewness;
  d["q05"] = s.q05;
  d["q25"] = s.q25;
  d["q50"] = s.q50;
  d["q75"] = s.q75;
  d["q95"] = s.q95;
  return d;
}

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

// Python-side exception classes, filled in at module init.
PyObject* g_covlim_error = nullptr;
PyObject* g_config_error = nullptr;

void raise_with_attrs(PyObject* cls, const char* what, const std::vector<std::pair<const char*, std::string>>& attrs) {
  PyObject* inst = PyObject_CallFunction(cls, "s", what);
  if (inst == nullptr) return;
  for (const auto& [name, value] : attrs) {
    PyObject* v = PyUnicode_FromString(value.c_str());
    PyObject_SetAttrString(inst, name, v);
    Py_DECREF(v);
  }
  PyErr_SetObject(cls, inst);
  Py_DECREF(inst);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Covariance limits of shaped and residual networks";

  static py::exception<Error> covlim_error(m, "CovlimError", PyExc_RuntimeError);
  static py::exception<SchemaError> config_error(m, "ConfigError", PyExc_ValueError);
  g_covlim_error = covlim_error.ptr();
  g_config_error = config_error.ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      raise_with_attrs(g_covlim_error, e.what(),
                       {{"kind", std::string(to_string(e.kind()))}, {"module", e.module()}, {"op", e.op()}});
    } catch (const SchemaError& e) {
      raise_with_attrs(g_config_error, e.what(), {{"field", e.field()}, {"pointer", e.pointer()}});
    }
  });

  m.attr("__version__") = library_version();

  // --- kernels ---
  m.def("kernel_k", &kernels::kernel_k, py::arg("p"), py::arg("r"), py::arg("rho"),
        "Closed-form ReLU arccosine kernel K_{p,r}(rho).");
  m.def(
      "kernel_oracle",
      [](int p, int r, double rho, std::size_t budget, const std::string& method, std::uint64_t seed) {
        kernels::OracleMethod om;
        if (method == "quadrature") om = kernels::OracleMethod::Quadrature;
        else if (method == "monte_carlo") om = kernels::OracleMethod::MonteCarlo;
        else throw py::value_error("method must be 'quadrature' or 'monte_carlo'");
        const auto est = kernels::kernel_oracle(p, r, rho, budget, om, seed);
        return py::make_tuple(est.value, est.error);
      },
      py::arg("p"), py::arg("r"), py::arg("rho"), py::arg("budget") = 200, py::arg("method") = "quadrature",
      py::arg("seed") = 0, "Independent (value, error) estimate of E phi(g)^p phi(g_hat)^r.");
  m.def("nu", &kernels::nu, py::arg("rho"), py::arg("c_plus"), py::arg("c_minus"));
  m.def("f_resnet", &kernels::f_resnet, py::arg("rho"));
  m.def("shaped_relu_k1", &kernels::shaped_relu_k1, py::arg("rho"), py::arg("s_plus"), py::arg("s_minus"));
  m.def(
      "mu_sigma_correlation",
      [](double rho, double c) {
        const auto co = kernels::mu_sigma_correlation(rho, c);
        return py::make_tuple(co.mu_r, co.sigma_r2);
      },
      py::arg("rho"), py::arg("c") = 2.0, "(mu_r, sigma_r^2) of the finite-width correlation chain.");
  m.def(
      "expanded_correlation_update",
      [](double rho, double n) {
        const auto up = kernels::expanded_correlation_update(rho, n);
        py::dict d;
        d["deterministic"] = up.deterministic;
        d["noise"] = up.noise;
        d["remainder"] = up.remainder;
        return d;
      },
      py::arg("rho"), py::arg("n"));

  // --- ensembles ---
  py::class_<PathEnsemble>(m, "PathEnsemble")
      .def_property_readonly("kind", [](const PathEnsemble& e) { return e.meta().kind; })
      .def_property_readonly("m", [](const PathEnsemble& e) { return e.meta().m; })
      .def_property_readonly("n", [](const PathEnsemble& e) { return e.meta().n; })
      .def_property_readonly("d", [](const PathEnsemble& e) { return e.meta().d; })
      .def_property_readonly("seed", [](const PathEnsemble& e) { return e.meta().master_seed; })
      .def_property_readonly("config_hash", [](const PathEnsemble& e) { return hash_hex(e.meta().config_hash); })
      .def_property_readonly("paths", &PathEnsemble::paths)
      .def_property_readonly("state_dim", &PathEnsemble::state_dim)
      .def_property_readonly("times", [](const PathEnsemble& e) { return to_array(e.times()); })
      .def_property_readonly("values",
                             [](const PathEnsemble& e) {
                               py::array_t<double> out({e.paths(), e.steps(), e.state_dim()});
                               std::memcpy(out.mutable_data(), e.raw().data(), e.raw().size() * sizeof(double));
                               return out;
                             },
                             "Copy of the values, shape (paths, steps, state_dim).")
      .def_property_readonly("status",
                             [](const PathEnsemble& e) {
                               py::array_t<std::uint8_t> out(e.paths());
                               auto* p = out.mutable_data();
                               for (std::size_t i = 0; i < e.paths(); ++i) p[i] = static_cast<std::uint8_t>(e.status(i));
                               return out;
                             },
                             "0 ok, 1 absorbed, 2 diverged.")
      .def_property_readonly("counters",
                             [](const PathEnsemble& e) {
                               py::dict d;
                               d["steps"] = e.counters.steps;
                               d["clamp_events"] = e.counters.clamp_events;
                               d["psd_projections"] = e.counters.psd_projections;
                               d["reflections"] = e.counters.reflections;
                               return d;
                             })
      .def("__repr__", [](const PathEnsemble& e) {
        return "<PathEnsemble kind=" + e.meta().kind + " paths=" + std::to_string(e.paths()) +
               " steps=" + std::to_string(e.steps()) + ">";
      });

  m.def("read_ensemble", [](const std::string& path) { return read_binary(std::filesystem::path(path)); },
        py::arg("path"), "Load a binary ensemble written by the runner.");

  m.def(
      "run_q_chain",
      [](double rho0, std::size_t n, std::size_t d, std::size_t paths, std::uint64_t seed, const std::string& mode,
         bool infinite_width, unsigned threads) {
        QChainConfig cfg;
        cfg.rho0 = rho0;
        cfg.n = n;
        cfg.d = d;
        cfg.paths = paths;
        cfg.seed = seed;
        if (mode == "approximate") cfg.mode = QChainMode::Approximate;
        else if (mode == "exact") cfg.mode = QChainMode::Exact;
        else throw py::value_error("mode must be 'approximate' or 'exact'");
        cfg.options.infinite_width = infinite_width;
        cfg.threads = threads;
        py::gil_scoped_release release;
        return run_q_chain(cfg);
      },
      py::arg("rho0") = 0.3, py::arg("n") = 150, py::arg("d") = 150, py::arg("paths") = 1, py::arg("seed") = 0,
      py::arg("mode") = "approximate", py::arg("infinite_width") = false, py::arg("threads") = 0,
      "Rescaled correlation chain; components (q, r = log q) on t = l/n.");

  m.def(
      "integrate_q_sde",
      [](double r0, double t0, double T, double dt, std::size_t paths, std::uint64_t seed, const std::string& scheme,
         unsigned threads) {
        SdeRunConfig cfg;
        cfg.t0 = t0;
        cfg.T = T;
        cfg.dt = dt;
        cfg.paths = paths;
        cfg.seed = seed;
        if (scheme == "log_euler_shifted") cfg.scheme = SdeScheme::LogEulerShifted;
        else if (scheme == "euler_maruyama") cfg.scheme = SdeScheme::EulerMaruyama;
        else throw py::value_error("scheme must be 'log_euler_shifted' or 'euler_maruyama'");
        cfg.threads = threads;
        py::gil_scoped_release release;
        return integrate_q_sde(r0, cfg);
      },
      py::arg("r0"), py::arg("t0") = 0.0, py::arg("T") = 1.0, py::arg("dt") = 1e-2, py::arg("paths") = 1,
      py::arg("seed") = 0, py::arg("scheme") = "log_euler_shifted", py::arg("threads") = 0);

  // --- stats ---
  m.def("ks_distance",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          return ks_distance(samples_of(a), samples_of(b));
        },
        py::arg("a"), py::arg("b"));
  m.def("silverman_bandwidth", [](const std::vector<double>& a) { return silverman_bandwidth(samples_of(a)); },
        py::arg("samples"));
  m.def(
      "kde",
      [](const std::vector<double>& a, std::optional<double> bandwidth, std::size_t grid_points) {
        const auto c = kde(samples_of(a), bandwidth, grid_points);
        return py::make_tuple(to_array(c.grid), to_array(c.density), c.bandwidth);
      },
      py::arg("samples"), py::arg("bandwidth") = py::none(), py::arg("grid_points") = kKdeGridPoints,
      "(grid, density, bandwidth) of a Gaussian KDE.");
  m.def("summarize", [](const std::vector<double>& a) { return summary_dict(summarize(samples_of(a))); },
        py::arg("samples"));
  m.def(
      "compare_samples",
      [](const std::vector<double>& a, const std::vector<double>& b, const std::string& label_a,
         const std::string& label_b) {
        const auto r = compare_samples(samples_of(a, label_a), samples_of(b, label_b));
        py::dict d;
        d["ks"] = r.ks;
        d["summary_a"] = summary_dict(r.summary_a);
        d["summary_b"] = summary_dict(r.summary_b);
        d["grid"] = to_array(r.grid);
        d["density_a"] = to_array(r.density_a);
        d["density_b"] = to_array(r.density_b);
        d["bandwidth_a"] = r.bandwidth_a;
        d["bandwidth_b"] = r.bandwidth_b;
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("label_a") = "a", py::arg("label_b") = "b");

  // --- runner ---
  m.def(
      "default_config",
      [](const std::string& kind) {
        const auto k = parse_experiment_kind(kind);
        if (!k) throw py::value_error("unknown experiment kind: " + kind);
        return config_to_json(default_config(*k)).dump();
      },
      py::arg("kind"), "Default config of an experiment kind as JSON text.");
  m.def(
      "run_experiment_json",
      [](const std::string& text) {
        const auto cfg = config_from_json(Json::parse(text));
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        return py::make_tuple(r.output_dir.string(), r.artifacts, r.summary.dump(), r.wall_seconds);
      },
      py::arg("config"));
}
