#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dtnlab/experiments.hpp"

namespace py = pybind11;
using namespace dtnlab;

namespace {

Field field_from_array(const Grid& g, Carrier c, const py::array_t<double>& values) {
  Field f(g, c);
  if (static_cast<std::size_t>(values.size()) != f.size())
    throw InvalidArgument("field size mismatch");
  auto r = values.unchecked<1>();
  for (py::ssize_t i = 0; i < values.size(); ++i) f.values[i] = r(i);
  return f;
}

BoundaryField boundary_from_array(const Grid& g, const py::array_t<double>& values) {
  BoundaryField f(g);
  if (static_cast<std::size_t>(values.size()) != f.size())
    throw InvalidArgument("boundary field size mismatch");
  auto r = values.unchecked<1>();
  for (py::ssize_t i = 0; i < values.size(); ++i) f.values[i] = r(i);
  return f;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(v.size());
  auto w = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < v.size(); ++i) w(i) = v[i];
  return out;
}

}  // namespace

PYBIND11_MODULE(_dtnlab, m) {
  m.doc() = "lattice laboratory for semilinear Dirichlet-to-Neumann inversion";

  py::enum_<Carrier>(m, "Carrier").value("omega", Carrier::omega).value("box", Carrier::box);

  py::class_<Grid>(m, "Grid")
      .def_static("build", &Grid::build, py::arg("n"), py::arg("N"), py::arg("pad"))
      .def_static("default_pad", &Grid::default_pad)
      .def_property_readonly("n", &Grid::dim)
      .def_property_readonly("N", &Grid::axis_points)
      .def_property_readonly("pad", &Grid::pad)
      .def_property_readonly("spacing", &Grid::spacing)
      .def("point_count", &Grid::point_count)
      .def("boundary_count", &Grid::boundary_count)
      .def("first_eigenvalue", &Grid::first_eigenvalue)
      .def("coords", [](const Grid& g, Carrier c, std::size_t flat) { return g.coords(c, flat); })
      .def("boundary_nodes",
           [](const Grid& g) {
             py::array_t<std::size_t> out(g.boundary_count());
             auto w = out.mutable_unchecked<1>();
             for (std::size_t b = 0; b < g.boundary_count(); ++b) w(b) = g.boundary_node(b);
             return out;
           })
      .def_static("dirichlet_lambda1_exact", &Grid::dirichlet_lambda1_exact);

  py::class_<Nonlinearity>(m, "Nonlinearity")
      .def_static("from_registry", &Nonlinearity::from_registry, py::arg("family"), py::arg("p0"),
                  py::arg("p1") = 0.0)
      .def("__call__", [](const Nonlinearity& a, double t) { return a(t); })
      .def("deriv", &Nonlinearity::deriv)
      .def("lipschitz", &Nonlinearity::lipschitz)
      .def_property_readonly("family", &Nonlinearity::family)
      .def("certified", &Nonlinearity::certified);

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("growth_ok", &ValidationReport::growth_ok)
      .def_readonly("derivative_ok", &ValidationReport::derivative_ok)
      .def_readonly("lipschitz_ok", &ValidationReport::lipschitz_ok)
      .def_readonly("growth_margin", &ValidationReport::growth_margin)
      .def_readonly("derivative_margin", &ValidationReport::derivative_margin)
      .def("passed", &ValidationReport::pass);

  m.def(
      "validate_class",
      [](const Nonlinearity& a, double range, int samples) {
        return validate_class(a, SamplingPlan{range, samples});
      },
      py::arg("a"), py::arg("range") = 8.0, py::arg("samples") = 2048);
  m.def("seminorm_p", &seminorm_p, py::arg("a"), py::arg("j"), py::arg("samples") = 4096);
  m.def("distance_d", &distance_d, py::arg("a"), py::arg("b"), py::arg("alpha"),
        py::arg("t_max") = 1e3, py::arg("samples") = 4096);

  m.def(
      "laplacian_apply",
      [](const Grid& g, Carrier c, const py::array_t<double>& u) {
        return to_array(laplacian_apply(field_from_array(g, c, u)).values);
      },
      py::arg("grid"), py::arg("carrier"), py::arg("u"));
  m.def(
      "normal_derivative",
      [](const Grid& g, const py::array_t<double>& u) {
        return to_array(normal_derivative(field_from_array(g, Carrier::omega, u)).values);
      },
      py::arg("grid"), py::arg("u"));

  m.def(
      "harmonic_extension",
      [](const Grid& g, const py::array_t<double>& f) {
        return to_array(harmonic_extension(g, boundary_from_array(g, f)).values);
      },
      py::arg("grid"), py::arg("f"));
  m.def(
      "solve_semilinear",
      [](const Grid& g, const Nonlinearity& a, const py::array_t<double>& f) {
        return to_array(solve_semilinear(g, a, boundary_from_array(g, f)).values);
      },
      py::arg("grid"), py::arg("a"), py::arg("f"));
  m.def(
      "solve_schrodinger",
      [](const Grid& g, const py::array_t<double>& q, const py::array_t<double>& f) {
        return to_array(
            solve_schrodinger(g, field_from_array(g, Carrier::omega, q), boundary_from_array(g, f))
                .values);
      },
      py::arg("grid"), py::arg("q"), py::arg("f"));
  m.def(
      "dtn_semilinear",
      [](const Grid& g, const Nonlinearity& a, const py::array_t<double>& f) {
        return to_array(dtn_semilinear(g, a, boundary_from_array(g, f)).values);
      },
      py::arg("grid"), py::arg("a"), py::arg("f"));
  m.def(
      "dtn_schrodinger",
      [](const Grid& g, const py::array_t<double>& q, const py::array_t<double>& f) {
        return to_array(
            dtn_schrodinger(g, field_from_array(g, Carrier::omega, q), boundary_from_array(g, f))
                .values);
      },
      py::arg("grid"), py::arg("q"), py::arg("f"));

  py::class_<CgoDirections>(m, "CgoDirections")
      .def_readonly("h", &CgoDirections::h)
      .def_readonly("h0", &CgoDirections::h0)
      .def_readonly("rho", &CgoDirections::rho)
      .def_readonly("xi", &CgoDirections::xi)
      .def_readonly("ktilde", &CgoDirections::ktilde)
      .def_readonly("zeta", &CgoDirections::zeta)
      .def_readonly("zeta_tilde", &CgoDirections::zeta_tilde);
  m.def("cgo_directions", &cgo_directions, py::arg("k"), py::arg("rho"), py::arg("M"),
        py::arg("c_omega_est"));

  py::class_<RhoChoice>(m, "RhoChoice")
      .def_readonly("rho", &RhoChoice::rho)
      .def_readonly("saturated", &RhoChoice::saturated)
      .def_readonly("noise_free", &RhoChoice::noise_free);
  m.def("choose_rho", &choose_rho, py::arg("discrepancy"), py::arg("gamma"), py::arg("kappa_est"),
        py::arg("rho0"), py::arg("rho_cap"));
  m.def("stability_modulus", &stability_modulus, py::arg("t"), py::arg("n"), py::arg("s"),
        py::arg("beta"));
  m.def("integrate_aprime", &integrate_aprime, py::arg("samples"), py::arg("lambda_grid"));

  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::string& out_dir) {
        RunOverrides ov;
        if (!out_dir.empty()) ov.out_dir = out_dir;
        const RunResult r = run_experiment_json(config_json, ov);
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["pass"] = r.pass;
        d["summary_json"] = r.summary_json;
        d["out_dir"] = r.out_dir;
        return d;
      },
      py::arg("config_json"), py::arg("out_dir") = "");

  py::register_exception<Error>(m, "DtnLabError");
}
