#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rh/catastrophe.hpp"
#include "rh/detection.hpp"
#include "rh/error.hpp"
#include "rh/hjb.hpp"
#include "rh/policy.hpp"
#include "rh/sequential.hpp"

namespace py = pybind11;
using namespace rh;

namespace {

py::array_t<double> vec(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> grid(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  py::array_t<double> out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Regime-shift harvesting model: policies, detection, catastrophe risk";

  static py::exception<Error> rh_error(m, "RhError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = rh_error;
      PyErr_SetObject(exc.ptr(), py::make_tuple(e.what(), to_string(e.code())).ptr());
    }
  });

  py::class_<MarketParams>(m, "MarketParams")
      .def(py::init([](double a, double b, double c, double fixed_cost, double rho) {
             return MarketParams{a, b, c, fixed_cost, rho};
           }),
           py::arg("a"), py::arg("b"), py::arg("c"), py::arg("fixed_cost"), py::arg("rho"))
      .def_readwrite("a", &MarketParams::a)
      .def_readwrite("b", &MarketParams::b)
      .def_readwrite("c", &MarketParams::c)
      .def_readwrite("fixed_cost", &MarketParams::fixed_cost)
      .def_readwrite("rho", &MarketParams::rho)
      .def("monopoly_quantity", &MarketParams::monopoly_quantity)
      .def("profit", &MarketParams::profit);

  py::class_<ResourceParams>(m, "ResourceParams")
      .def(py::init([](double mu, double sigma, double x0) { return ResourceParams{mu, sigma, x0}; }),
           py::arg("mu"), py::arg("sigma"), py::arg("x0"))
      .def_readwrite("mu", &ResourceParams::mu)
      .def_readwrite("sigma", &ResourceParams::sigma)
      .def_readwrite("x0", &ResourceParams::x0);

  m.def(
      "derive_constants",
      [](const MarketParams& mk, const ResourceParams& r, double offset) {
        const auto d = derive_constants(mk, r, offset);
        py::dict out;
        out["A"] = d.A;
        out["B"] = d.B;
        out["C"] = d.C;
        out["alpha1"] = d.alpha1;
        out["alpha2"] = d.alpha2;
        out["qm"] = d.qm;
        out["discriminant"] = d.discriminant;
        return out;
      },
      py::arg("market"), py::arg("resource"), py::arg("drift_offset") = 0.0);

  py::class_<PolicySpec>(m, "PolicySpec")
      .def_property_readonly("form", [](const PolicySpec& s) { return to_string(s.form()); })
      .def_property_readonly("c1", &PolicySpec::c1)
      .def_property_readonly("c2", &PolicySpec::c2)
      .def_property_readonly("horizon", &PolicySpec::horizon)
      .def_property_readonly("qm", &PolicySpec::qm)
      .def_property_readonly("operating_limit", &PolicySpec::operating_limit)
      .def("psi", &PolicySpec::psi)
      .def("psi_prime", &PolicySpec::psi_prime);

  m.def("build_policy", &build_policy, py::arg("market"), py::arg("resource"),
        py::arg("drift_offset"), py::arg("horizon"));
  m.def(
      "optimal_extraction",
      [](const PolicySpec& s, py::array_t<double> t, py::array_t<double> x) {
        return py::vectorize([&s](double tt, double xx) { return optimal_extraction(s, tt, xx); })(t, x);
      },
      py::arg("spec"), py::arg("t"), py::arg("x"));
  m.def(
      "resource_rent",
      [](const PolicySpec& s, double t, double x) { return resource_rent(s, t, x).vx; },
      py::arg("spec"), py::arg("t"), py::arg("x"));

  m.def("solve_threshold", &solve_threshold, py::arg("lam"), py::arg("tolerance_T"));
  m.def("expected_delay", &expected_delay, py::arg("lam"), py::arg("nu"));
  m.def(
      "expected_detection_horizon",
      [](double lam, double T) { return expected_detection_horizon(lam, DetectionConfig{T}); },
      py::arg("lam"), py::arg("tolerance_T"));
  m.def("calibrated_threshold", &calibrated_threshold, py::arg("lam"), py::arg("tolerance_T"),
        py::arg("dt"));

  py::class_<CusumDetector>(m, "CusumDetector")
      .def(py::init<double, double>(), py::arg("lam"), py::arg("nu"))
      .def("update", &CusumDetector::update, py::arg("residual"), py::arg("dt"))
      .def_property_readonly("cs", &CusumDetector::cs)
      .def_property_readonly("alarm_time", &CusumDetector::alarm_time);

  m.def("lambda_update", &lambda_update, py::arg("x_start"), py::arg("x_end"),
        py::arg("coefficient"));

  m.def("expected_time_to_catastrophe", &expected_time_to_catastrophe, py::arg("x0"),
        py::arg("net_drift"));
  m.def("extinction_probability", &extinction_probability, py::arg("x0"), py::arg("net_drift"),
        py::arg("sigma"));
  py::class_<InverseGaussian>(m, "InverseGaussian")
      .def_property_readonly("mean", &InverseGaussian::mean)
      .def_property_readonly("shape", &InverseGaussian::shape)
      .def("density",
           [](const InverseGaussian& g, py::array_t<double> t) {
             return py::vectorize([&g](double s) { return g.density(s); })(t);
           })
      .def("cdf",
           [](const InverseGaussian& g, py::array_t<double> t) {
             return py::vectorize([&g](double s) { return g.cdf(s); })(t);
           })
      .def("mode", &InverseGaussian::mode);
  m.def("ig_first_passage", &ig_first_passage, py::arg("x0"), py::arg("net_drift"),
        py::arg("sigma"));

  m.def(
      "solve_kfe",
      [](double drift, double sigma, double x0, double horizon, std::optional<double> x_max,
         int nx, int nt, double q) {
        ConstantExtraction rule(q);
        const double xm = x_max ? *x_max : default_kfe_x_max(x0, drift, sigma, horizon);
        const auto s = solve_kfe(q == 0.0 ? nullptr : &rule, drift, sigma, x0, horizon, xm, nx, nt);
        py::dict out;
        out["x"] = vec(s.x_grid);
        out["t"] = vec(s.t_grid);
        out["phi"] = grid(s.phi, s.nt(), s.nx());
        out["cdf"] = vec(s.cdf);
        out["density"] = vec(s.first_passage_density);
        out["hit_probability"] = s.hit_probability;
        out["mean_hit_time"] = s.numeric_mean_hit_time;
        return out;
      },
      py::arg("net_drift"), py::arg("sigma"), py::arg("x0"), py::arg("horizon"),
      py::arg("x_max") = py::none(), py::arg("nx") = 400, py::arg("nt") = 2000,
      py::arg("q") = 0.0);

  m.def(
      "solve_hjb",
      [](const MarketParams& mk, const ResourceParams& r, double offset, double horizon,
         double x_max, int nx, int nt) {
        const auto s = solve_hjb(mk, r, offset, horizon, x_max, nx, nt);
        py::dict out;
        out["x"] = vec(s.x_grid);
        out["t"] = vec(s.t_grid);
        out["V"] = grid(s.V, s.nt(), s.nx());
        out["q"] = grid(s.q, s.nt(), s.nx());
        out["pde_residual"] = s.pde_residual;
        return out;
      },
      py::arg("market"), py::arg("resource"), py::arg("drift_offset"), py::arg("horizon"),
      py::arg("x_max"), py::arg("nx") = 200, py::arg("nt") = 400);

  m.def(
      "run_episode",
      [](const MarketParams& mk, const ResourceParams& r, int n_periods, double lambda0,
         double tolerance_T, std::uint64_t seed, double dt, bool real_time) {
        EpisodeConfig cfg;
        cfg.n_periods = n_periods;
        cfg.lambda0 = lambda0;
        cfg.detection = {tolerance_T};
        cfg.sim.seed = seed;
        cfg.sim.dt = dt;
        cfg.mode = real_time ? SimMode::real_time : SimMode::expected_horizon;
        EpisodeResult res;
        {
          py::gil_scoped_release release;
          res = run_episode(mk, r, cfg);
        }
        py::list periods;
        for (const auto& p : res.periods) {
          py::dict d;
          d["lambda"] = p.lambda;
          d["horizon"] = p.horizon;
          d["duration"] = p.duration;
          d["alarm"] = p.alarm;
          d["start_stock"] = p.start_stock;
          d["end_stock"] = p.end_stock;
          d["next_lambda"] = p.next_lambda;
          d["numeric_policy"] = p.numeric_policy;
          d["classification"] = to_string(p.catastrophe.classification);
          periods.append(d);
        }
        py::dict out;
        out["periods"] = periods;
        out["t"] = vec(res.trajectory.times);
        out["X"] = vec(res.trajectory.stock);
        out["q"] = vec(res.trajectory.extraction);
        out["termination"] = to_string(res.termination);
        out["error"] = res.error;
        return out;
      },
      py::arg("market"), py::arg("resource"), py::arg("n_periods") = 4, py::arg("lambda0") = 0.0,
      py::arg("tolerance_T") = 50.0, py::arg("seed") = 1, py::arg("dt") = 0.01,
      py::arg("real_time") = false);
}
