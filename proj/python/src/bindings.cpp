#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "ultraheat/bounds.hpp"
#include "ultraheat/error.hpp"
#include "ultraheat/fast_isotropic.hpp"
#include "ultraheat/io.hpp"
#include "ultraheat/runner.hpp"
#include "ultraheat/semigroup.hpp"

namespace py = pybind11;
using namespace ultraheat;

namespace {

// dict <-> Json through the json module; configs are small
Json to_cpp(const py::object& obj) {
  const auto dumps = py::module_::import("json").attr("dumps");
  return Json::parse(dumps(obj).cast<std::string>());
}

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

struct PySpace {
  SpacePtr ptr;
};

struct PyKernel {
  std::shared_ptr<const JumpKernel> ptr;
};

PySpace wrap(UltrametricSpace s) { return {std::make_shared<const UltrametricSpace>(std::move(s))}; }

ExponentConfig exponents(double alpha, double beta, double R0) { return ExponentConfig{alpha, beta, R0}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Heat kernels and bound checks on finite ultrametric spaces";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "UltraheatError");

  py::class_<PySpace>(m, "Space")
      .def_static("from_spec", [](const py::object& spec) { return wrap(build_tree(space_spec_from_json(to_cpp(spec)))); },
                  py::arg("spec"))
      .def_static(
          "from_distances",
          [](const Matrix& d, std::vector<double> masses, std::vector<std::string> ids) {
            if (masses.empty()) masses.assign(static_cast<std::size_t>(d.rows()), 1.0);
            return wrap(from_distance_matrix(d, masses, std::move(ids)));
          },
          py::arg("distances"), py::arg("masses") = std::vector<double>{}, py::arg("ids") = std::vector<std::string>{})
      .def_static("load", [](const std::string& path) { return wrap(load_space(path)); })
      .def("__len__", [](const PySpace& s) { return s.ptr->size(); })
      .def_property_readonly("diam", [](const PySpace& s) { return s.ptr->diam(); })
      .def_property_readonly("levels", [](const PySpace& s) { return s.ptr->levels(); })
      .def_property_readonly("masses", [](const PySpace& s) { return Vector(s.ptr->masses()); })
      .def_property_readonly("ids",
                             [](const PySpace& s) {
                               std::vector<std::string> ids;
                               for (std::size_t i = 0; i < s.ptr->size(); ++i) ids.push_back(s.ptr->id(i));
                               return ids;
                             })
      .def("index", [](const PySpace& s, const std::string& id) { return s.ptr->index_of(id); })
      .def("distance", [](const PySpace& s, std::size_t x, std::size_t y) { return s.ptr->distance(x, y); })
      .def("distance_matrix", [](const PySpace& s) { return s.ptr->distance_matrix(); })
      .def("spec", [](const PySpace& s) { return to_py(to_json(to_spec(*s.ptr))); });

  py::class_<PyKernel>(m, "Kernel")
      .def_static(
          "power",
          [](const PySpace& s, double exponent, double scale, const std::string& scaling) {
            if (scaling != "none" && scaling != "mass") {
              throw Error(ErrorCode::InvalidArgument, "scaling must be 'none' or 'mass'");
            }
            return PyKernel{std::make_shared<const JumpKernel>(isotropic_kernel(
                s.ptr, PowerProfile{exponent, scale}, scaling == "mass" ? Scaling::Mass : Scaling::None))};
          },
          py::arg("space"), py::arg("exponent"), py::arg("scale") = 1.0, py::arg("scaling") = "none")
      .def_static(
          "from_matrix",
          [](const PySpace& s, const Matrix& w) { return PyKernel{std::make_shared<const JumpKernel>(from_matrix(s.ptr, w))}; },
          py::arg("space"), py::arg("weights"))
      .def_property_readonly("weights", [](const PyKernel& k) { return Matrix(k.ptr->weights()); })
      .def("tail", [](const PyKernel& k, std::size_t x, double r) { return k.ptr->tail(x, r); })
      .def("tj_constant", [](const PyKernel& k, double beta, double R0) { return tj_constant(*k.ptr, beta, R0); },
           py::arg("beta"), py::arg("R0"));

  m.def(
      "heat_kernel",
      [](const PyKernel& k, double t, std::optional<double> rho) { return generator(*k.ptr, rho).density(t); },
      py::arg("kernel"), py::arg("t"), py::arg("rho") = py::none(),
      "p_t(x, y) as a dense matrix; with rho, the truncated kernel");
  m.def(
      "eigenvalues", [](const PyKernel& k, std::optional<double> rho) { return generator(*k.ptr, rho).eigenvalues(); },
      py::arg("kernel"), py::arg("rho") = py::none());
  m.def(
      "fast_diagonal",
      [](const PySpace& s, double exponent, double t) {
        return FastIsotropicHeatKernel::from_profile(s.ptr, PowerProfile{exponent, 1.0}).diagonal(t);
      },
      py::arg("space"), py::arg("exponent"), py::arg("t"),
      "diagonal of p_t for w(x,y) = d(x,y)^-exponent mu(x) mu(y)");
  m.def(
      "due_constant",
      [](const PyKernel& k, double alpha, double beta, double R0, const std::vector<double>& times) {
        return to_py(to_json(due_constant(*k.ptr, exponents(alpha, beta, R0), times)));
      },
      py::arg("kernel"), py::arg("alpha"), py::arg("beta"), py::arg("R0"), py::arg("times"));
  m.def(
      "wue_constant",
      [](const PyKernel& k, double alpha, double beta, double R0, const std::vector<double>& times) {
        return to_py(to_json(wue_constant(*k.ptr, exponents(alpha, beta, R0), times)));
      },
      py::arg("kernel"), py::arg("alpha"), py::arg("beta"), py::arg("R0"), py::arg("times"));
  m.def(
      "certificate",
      [](const PyKernel& k, double alpha, double beta, double R0) {
        return to_py(theorem1_pipeline(*k.ptr, exponents(alpha, beta, R0)).to_json());
      },
      py::arg("kernel"), py::arg("alpha"), py::arg("beta"), py::arg("R0"));
  m.def(
      "run_checks",
      [](const py::object& config, const std::string& base_dir) {
        const RunConfig cfg = parse_config(to_cpp(config), base_dir);
        py::gil_scoped_release release;
        RunResult r = run_checks(cfg);
        py::gil_scoped_acquire acquire;
        return to_py(r.report);
      },
      py::arg("config"), py::arg("base_dir") = ".", "run the checks of a config dict; returns the report");
  m.def("all_checks", &all_checks);
}
