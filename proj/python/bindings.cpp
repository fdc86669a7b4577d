#include <fstream>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "implreg/builtins.hpp"
#include "implreg/errors.hpp"
#include "implreg/experiment.hpp"
#include "implreg/io.hpp"
#include "implreg/ou_stats.hpp"
#include "implreg/regularizer.hpp"
#include "implreg/relu_geometry.hpp"
#include "implreg/single_point.hpp"
#include "implreg/spectrum.hpp"
#include "implreg/trainer.hpp"

namespace py = pybind11;
using namespace implreg;

namespace {

// Datasets cross the boundary as (xs, ys) with xs a list of lists.
Dataset make_dataset(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), ErrorKind::InvalidInput, "xs and ys differ in length");
  Dataset d;
  for (std::size_t i = 0; i < xs.size(); ++i) d.points.push_back({xs[i], ys[i]});
  return d;
}

py::tuple split_dataset(const Dataset& d) {
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (const DataPoint& p : d.points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  return py::make_tuple(xs, ys);
}

std::string dump(const nlohmann::json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_implreg, m) {
  m.doc() = "Label-noise SGD toolkit (C++ core)";

  auto& base = py::register_exception<Error>(m, "ImplregError");
  py::register_exception<cli::AnalysisError>(m, "AnalysisError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const cli::ConfigError& e) {
      std::string msg;
      for (const auto& d : e.diagnostics()) msg += (msg.empty() ? "" : "\n") + d;
      PyErr_SetString(PyExc_ValueError, msg.c_str());
    }
  });

  py::enum_<Activation>(m, "Activation")
      .value("Relu", Activation::Relu)
      .value("Tanh", Activation::Tanh)
      .value("Logistic", Activation::Logistic)
      .value("Identity", Activation::Identity);

  py::enum_<NoiseKind>(m, "NoiseKind")
      .value("None_", NoiseKind::None)
      .value("Rademacher", NoiseKind::Rademacher)
      .value("Gaussian", NoiseKind::Gaussian)
      .value("Uniform", NoiseKind::Uniform);

  py::class_<Architecture>(m, "Architecture")
      .def(py::init([](std::size_t d, std::size_t width, Activation act, bool skip) {
             Architecture a{d, width, act, skip};
             a.validate();
             return a;
           }),
           py::arg("input_dim"), py::arg("hidden_width"), py::arg("activation"),
           py::arg("skip") = false)
      .def_readonly("input_dim", &Architecture::input_dim)
      .def_readonly("hidden_width", &Architecture::hidden_width)
      .def_readonly("activation", &Architecture::activation)
      .def_readonly("skip", &Architecture::skip_linear_and_bias)
      .def_property_readonly("param_count", &Architecture::param_count);

  m.def("forward", [](const Architecture& a, const Vector& th, const Vector& x) {
    return forward(a, th, x);
  });
  m.def("param_gradient", [](const Architecture& a, const Vector& th, const Vector& x) {
    return param_gradient(a, th, x);
  });
  m.def("param_hessian", [](const Architecture& a, const Vector& th, const Vector& x) {
    const SymMatrix h = param_hessian(a, th, x);
    std::vector<std::vector<double>> out(h.dim(), std::vector<double>(h.dim()));
    for (std::size_t i = 0; i < h.dim(); ++i)
      for (std::size_t j = 0; j < h.dim(); ++j) out[i][j] = h(i, j);
    return out;
  });
  m.def("random_init", &random_init, py::arg("arch"), py::arg("seed"),
        py::arg("init_scale") = 1.0);

  m.def("r_sum", [](const Architecture& a, const Vector& th, const std::vector<Vector>& xs,
                    const Vector& ys) { return reg(a, th, make_dataset(xs, ys)).r_sum; });
  m.def("loss", [](const Architecture& a, const Vector& th, const std::vector<Vector>& xs,
                   const Vector& ys) { return loss(a, th, make_dataset(xs, ys)); });
  m.def("r_o", &r_o);
  m.def("r_o_prime", &r_o_prime);
  m.def("optimal_h", &optimal_h);

  m.def(
      "sgd_label_noise",
      [](const Architecture& a, const Vector& th, const std::vector<Vector>& xs, const Vector& ys,
         double eta, std::int64_t steps, NoiseKind kind, double scale, std::uint64_t seed,
         std::int64_t stride) {
        TrainConfig c;
        c.eta = eta;
        c.steps = steps;
        c.noise = {kind, scale};
        c.seed = seed;
        c.snapshot_stride = stride;
        const Trajectory t = sgd_label_noise(a, th, make_dataset(xs, ys), c);
        std::vector<std::int64_t> steps_out;
        std::vector<Vector> params;
        for (const Snapshot& s : t.snapshots) {
          steps_out.push_back(s.step);
          params.push_back(s.params);
        }
        return py::make_tuple(steps_out, params);
      },
      py::arg("arch"), py::arg("theta0"), py::arg("xs"), py::arg("ys"), py::arg("eta"),
      py::arg("steps"), py::arg("noise") = NoiseKind::Rademacher, py::arg("noise_scale") = 1.0,
      py::arg("seed") = 0, py::arg("stride") = 1);

  m.def(
      "pretrain_to_zero_error",
      [](const Architecture& a, const Vector& th, const std::vector<Vector>& xs, const Vector& ys,
         double tol) { return pretrain_to_zero_error(a, th, make_dataset(xs, ys), tol); },
      py::arg("arch"), py::arg("theta0"), py::arg("xs"), py::arg("ys"), py::arg("tol") = 1e-6);

  m.def("_spectrum", [](const Architecture& a, const Vector& th, const std::vector<Vector>& xs,
                        const Vector& ys) {
    return dump(io::to_json(spectrum(a, th, make_dataset(xs, ys))));
  });
  m.def("_classify_repellence", [](const Architecture& a, const Vector& th,
                                   const std::vector<Vector>& xs, const Vector& ys) {
    return dump(io::to_json(classify_repellence(a, th, make_dataset(xs, ys))));
  });
  m.def("_lyapunov_equivalence", [](const Architecture& a, const Vector& th,
                                    const std::vector<Vector>& xs, const Vector& ys, double eta,
                                    double eps) {
    return dump(io::to_json(lyapunov_equivalence(a, th, make_dataset(xs, ys), eta, eps)));
  });
  m.def("_convexity_certificate", [](const Architecture& a, const Vector& th,
                                     const std::vector<Vector>& xs, const Vector& ys,
                                     double tol_line) {
    CertificateOptions o;
    o.tol_line = tol_line;
    return dump(io::to_json(convexity_certificate(a, th, make_dataset(xs, ys), o)));
  });
  m.def("_characterize", [](const Architecture& a, const Vector& th, const Vector& x,
                            double tol) { return dump(io::to_json(characterize(a, th, x, tol))); });
  m.def("curve_length", [](const Architecture& a, const Vector& th, double lo, double hi) {
    return curve_length(a, th, lo, hi);
  });

  m.def("builtin_dataset", [](const std::string& name, std::uint64_t seed) {
    return split_dataset(builtins::generate(name, seed, {}));
  }, py::arg("name"), py::arg("seed") = 0);

  m.def("_list_experiments", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : cli::list_experiments()) out.emplace_back(e.name, e.description);
    return out;
  });
  m.def("_builtin_experiment", [](const std::string& name) {
    return dump(cli::builtin_experiment(name));
  });
  m.def("_validate_config", [](const std::string& text) {
    return dump(cli::config_to_json(cli::config_from_json(cli::parse_json_text(text, "<config>"))));
  });
  m.def("_run", [](const std::string& text) {
    const cli::ExperimentConfig c = cli::config_from_json(cli::parse_json_text(text, "<config>"));
    py::gil_scoped_release release;
    const cli::RunResult r = cli::run(c);
    return dump(r.manifest);
  });
  m.def("read_trajectory_csv", [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::InvalidInput, "cannot open " + path);
    const Trajectory t = io::read_trajectory_csv(in);
    std::vector<std::int64_t> steps;
    std::vector<Vector> params;
    for (const Snapshot& s : t.snapshots) {
      steps.push_back(s.step);
      params.push_back(s.params);
    }
    return py::make_tuple(steps, params);
  });
}
