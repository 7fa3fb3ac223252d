#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "thermotop/driver.hpp"
#include "thermotop/errors.hpp"
#include "thermotop/gradcheck.hpp"
#include "thermotop/io.hpp"
#include "thermotop/rve.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace thermotop;

namespace {

// Fields travel as (ny, nx) arrays; row j holds elements j*nx .. j*nx+nx-1.
py::array_t<double> to_array(const std::vector<double>& v, int nx, int ny) {
  py::array_t<double> a({ny, nx});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a, int& nx,
                               int& ny) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-D density array");
  ny = static_cast<int>(a.shape(0));
  nx = static_cast<int>(a.shape(1));
  return {a.data(), a.data() + a.size()};
}

py::dict props_dict(const HomogenizedProps& p) {
  return py::dict("E"_a = p.E, "kappa"_a = p.kappa, "alpha"_a = p.alpha, "beta"_a = p.beta);
}

py::dict history_dict(const std::vector<IterationRecord>& h) {
  std::vector<int> iter, newton;
  std::vector<double> u, vM, vm, change;
  for (const auto& r : h) {
    iter.push_back(r.iter);
    u.push_back(r.u_out);
    vM.push_back(r.vol_macro);
    vm.push_back(r.vol_micro);
    change.push_back(r.max_change);
    newton.push_back(r.newton_iters);
  }
  return py::dict("iter"_a = iter, "u_out"_a = u, "vol_macro"_a = vM, "vol_micro"_a = vm, "max_change"_a = change,
                  "newton_iters"_a = newton);
}

MicroSeed make_seed(const std::string& shape, const std::string& placement, double size) {
  RunConfig c;
  apply_override(c, "seed.shape", shape);
  apply_override(c, "seed.placement", placement);
  c.seed.size = size;
  return c.seed;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Thermoelastic multiscale topology optimization";

  static py::exception<Error> base_error(m, "ThermotopError");
  py::register_exception<ConfigError>(m, "ConfigError", base_error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgumentError", base_error.ptr());
  py::register_exception<IoError>(m, "IoError", base_error.ptr());
  py::register_exception<NonConvergence>(m, "NonConvergenceError", base_error.ptr());
  py::register_exception<DegenerateCell>(m, "DegenerateCellError", base_error.ptr());
  py::register_exception<OptimizerStall>(m, "OptimizerStallError", base_error.ptr());

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def("set", &apply_override, "key"_a, "value"_a, "Set one key, e.g. set('dissipation.h', '1e-7').")
      .def("validate", &RunConfig::validate)
      .def("dump", [](const RunConfig& c) { return dump_config(c); })
      .def_property_readonly("mode", [](const RunConfig& c) { return mode_name(c.mode); })
      .def_property_readonly("macro_shape", [](const RunConfig& c) { return py::make_tuple(c.macro.ny, c.macro.nx); })
      .def_property_readonly("micro_shape", [](const RunConfig& c) { return py::make_tuple(c.micro.ny, c.micro.nx); })
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def("__repr__", [](const RunConfig& c) { return "<RunConfig mode=" + mode_name(c.mode) + ">"; });

  m.def("load_config", &load_config, "path"_a);
  m.def("parse_config", &parse_config, "text"_a);

  m.def(
      "plane_stress_tensor",
      [](double E0, double nu) {
        BaseMaterial b;
        b.E0 = E0;
        b.nu = nu;
        b.validate();
        return Eigen::Matrix3d(plane_stress_tensor(b));
      },
      "E0"_a = 1.0, "nu"_a = 0.3);

  m.def(
      "homogenize",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> rho, double p, double p_k, double nu) {
        int nx = 0, ny = 0;
        auto v = from_array(rho, nx, ny);
        SimpParams s;
        s.p = p;
        s.p_k = p_k;
        BaseMaterial b;
        b.nu = nu;
        return props_dict(homogenize(MicroCell::unit(nx, ny, std::move(v), s, b)).props);
      },
      "rho"_a, "p"_a = 3.0, "p_k"_a = 3.0, "nu"_a = 0.3, "Effective tensors of a periodic unit cell.");

  m.def(
      "seed_micro",
      [](int nx, int ny, const std::string& shape, const std::string& placement, double size, double rho_min) {
        const Grid g = build_grid(nx, ny, 1.0 / nx, 1.0 / ny);
        return to_array(seed_micro(make_seed(shape, placement, size), g, rho_min), nx, ny);
      },
      "nx"_a, "ny"_a, "shape"_a = "circle", "placement"_a = "central", "size"_a = 0.0, "rho_min"_a = 1e-3);

  m.def(
      "density_filter",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> field, double r_min, bool periodic) {
        int nx = 0, ny = 0;
        const auto v = from_array(field, nx, ny);
        return to_array(density_filter(v, build_grid(nx, ny, 1.0, 1.0), r_min, periodic), nx, ny);
      },
      "field"_a, "r_min"_a, "periodic"_a = false);

  m.def(
      "analyze",
      [](const RunConfig& cfg, py::array_t<double, py::array::c_style | py::array::forcecast> rho) {
        int nx = 0, ny = 0;
        const auto v = from_array(rho, nx, ny);
        if (nx != cfg.macro.nx || ny != cfg.macro.ny) throw InvalidArgument("density shape does not match the config");
        const MacroModel model = macro_model(cfg);
        const ForwardState f = analyze(model, v, base_props(cfg.base));
        std::vector<double> T(f.ts.T.data(), f.ts.T.data() + f.ts.T.size());
        return py::dict("u_out"_a = f.u_out(), "temperature"_a = to_array(T, nx + 1, ny + 1),
                        "newton_iters"_a = f.ts.newton_iters);
      },
      "config"_a, "rho"_a, "Thermal and elastic solve of a macro design with base-material properties.");

  m.def(
      "run",
      [](const RunConfig& cfg, bool write_outputs) {
        RunResult r;
        {
          py::gil_scoped_release release;
          RunOptions o;
          o.write_checkpoints = write_outputs;
          r = run(cfg, o);
          if (write_outputs) write_run_outputs(cfg, r);
        }
        py::dict d("mode"_a = mode_name(r.mode), "u_out"_a = r.u_out(), "iterations"_a = r.iterations,
                   "termination"_a = trigger_name(r.termination), "history"_a = history_dict(r.history),
                   "macro"_a = to_array(r.macro_rho, cfg.macro.nx, cfg.macro.ny), "props"_a = props_dict(r.props),
                   "exposure_sum"_a = r.exposure_sum, "peak_interior_T"_a = r.peak_interior_T);
        d["micro"] = r.micro_rho.empty() ? py::object(py::none())
                                         : py::object(to_array(r.micro_rho, cfg.micro.nx, cfg.micro.ny));
        return d;
      },
      "config"_a, "write_outputs"_a = false);

  m.def(
      "validate_gradients",
      [](const RunConfig& cfg, int n, unsigned seed) {
        const ValidationReport r = validate_gradients(cfg, n, seed);
        py::dict d("macro_error"_a = r.macro.max_relative_error);
        d["micro_error"] = r.micro ? py::object(py::float_(r.micro->max_relative_error)) : py::object(py::none());
        return d;
      },
      "config"_a, "n"_a = 8, "seed"_a = 7u, "Adjoint against central differences on a reduced mesh.");
}
