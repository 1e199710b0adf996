#include "hughop/diagnostics.hpp"
#include "hughop/harness.hpp"
#include "hughop/hop.hpp"
#include "hughop/hug.hpp"
#include "hughop/metric.hpp"
#include "hughop/targets.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace hughop;
using nlohmann::json;

namespace {

HugMode hug_mode(const std::string& s) {
  if (s == "plain") return HugMode::Plain;
  if (s == "hessian") return HugMode::Hessian;
  throw ConfigError("mode: expected 'plain' or 'hessian' (fixed needs a covariance)");
}

HopGuard guard(const std::string& s) {
  if (s == "raw") return HopGuard::Raw;
  if (s == "plus1") return HopGuard::Plus1;
  throw ConfigError("guard: expected 'raw' or 'plus1'");
}

}  // namespace

PYBIND11_MODULE(_hughop, m) {
  m.doc() = "Hug and Hop MCMC kernels (C++ core)";
  m.attr("__version__") = kVersion;

  // Translators are tried newest first, so the derived type goes last.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Target, std::shared_ptr<Target>>(m, "Target")
      .def_property_readonly("dim", &Target::dim)
      .def_property_readonly("name", &Target::name)
      .def_property_readonly("has_hessian", &Target::has_hessian)
      .def_property_readonly("has_exact_sampler", &Target::has_exact_sampler)
      .def("log_density", &Target::log_density, py::arg("x"))
      .def("gradient", &Target::gradient, py::arg("x"))
      .def("hessian", &Target::hessian, py::arg("x"))
      .def(
          "sample",
          [](const Target& t, int n, std::uint64_t seed) {
            Rng rng(seed);
            return t.sample_exact(rng, n);
          },
          py::arg("n"), py::arg("seed") = 1);

  m.def(
      "_make_target", [](const std::string& spec) { return std::const_pointer_cast<Target>(make_target(json::parse(spec))); },
      py::arg("spec_json"));

  m.def("reflect", &reflect, py::arg("v"), py::arg("g"), py::arg("zero_grad_tol") = 1e-12);
  m.def(
      "reflect_in_metric",
      [](const Vector& v, const Vector& g, const Matrix& cov) { return reflect_in_metric(v, g, cov); }, py::arg("v"),
      py::arg("g"), py::arg("covariance"));

  m.def(
      "local_covariance",
      [](const Matrix& H, double eps) {
        const LocalMetric lm = local_covariance(H, eps);
        py::dict d;
        d["covariance"] = lm.covariance;
        d["factor"] = lm.factor;
        d["log_det"] = lm.log_det;
        d["regularised"] = lm.regularised;
        return d;
      },
      py::arg("hessian"), py::arg("eps") = kDefaultMetricFloor);

  m.def(
      "hug_trajectory",
      [](const Target& t, const Vector& x0, const Vector& v0, double T, int B, const std::string& mode) {
        HugParams p = HugParams::plain(T, B);
        p.mode = hug_mode(mode);
        p.validate();
        const HugTrajectory r = hug_trajectory(t, x0, v0, p);
        return py::make_tuple(r.x, r.v);
      },
      py::arg("target"), py::arg("x0"), py::arg("v0"), py::arg("T"), py::arg("B"), py::arg("mode") = "plain");

  m.def(
      "hop_log_density",
      [](const Vector& x, const Vector& y, const Vector& g, double lambda, double kappa, const std::string& gd) {
        return hop_log_density(x, y, g, HopParams::with_kappa(lambda, kappa, guard(gd))).log_density;
      },
      py::arg("x"), py::arg("y"), py::arg("g"), py::arg("lam"), py::arg("kappa"), py::arg("guard") = "plus1");

  m.def(
      "ess", [](const Vector& s, const std::string& method) {
        if (method == "monotone") return ess(s);
        if (method == "batch") return ess(s, EssMethod::BatchMeans);
        throw ConfigError("method: expected 'monotone' or 'batch'");
      },
      py::arg("series"), py::arg("method") = "monotone");

  m.def("_default_config", [] { return default_config().dump(); });
  m.def(
      "_resolve_config",
      [](const std::string& file, const std::vector<std::string>& sets) {
        return resolve_config(json::parse(file), sets).dump();
      },
      py::arg("config_json"), py::arg("sets"));

  m.def(
      "_run_chain",
      [](const std::string& config) {
        ChainResult r;
        {
          py::gil_scoped_release release;
          r = run_chain(ExperimentConfig::from_json(json::parse(config)));
        }
        return py::make_tuple(r.summary.to_json().dump(), r.trace.positions, r.trace.log_target);
      },
      py::arg("config_json"));

  m.def(
      "theorem2_experiment",
      [](double lo, double hi, int dim, double lambda, double kappa, long proposals, std::uint64_t seed) {
        const Theorem2Result r = theorem2_experiment(lo, hi, dim, lambda, kappa, proposals, seed);
        py::dict d;
        d["mean_acceptance"] = r.mean_acceptance;
        d["std_error"] = r.std_error;
        d["limit"] = r.limit;
        return d;
      },
      py::arg("precision_lo"), py::arg("precision_hi"), py::arg("dim"), py::arg("lam"), py::arg("kappa"),
      py::arg("proposals"), py::arg("seed") = 1);
}
