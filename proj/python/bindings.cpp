#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "excirec/baseline.hpp"
#include "excirec/checkpoint.hpp"
#include "excirec/dataset.hpp"
#include "excirec/exciton.hpp"
#include "excirec/geometry.hpp"
#include "excirec/localfield.hpp"
#include "excirec/nearfield.hpp"
#include "excirec/nn.hpp"

namespace py = pybind11;
using namespace excirec;

namespace {

GeometryKind kind_from_string(const std::string& s) {
  if (s == "chain1d") return GeometryKind::chain1d;
  if (s == "array2d") return GeometryKind::array2d;
  throw config_error("unknown geometry kind: " + s);
}

DipolePattern pattern_from_string(const std::string& s) {
  if (s == "chain_axis") return DipolePattern::chain_axis;
  if (s == "uniform_angle") return DipolePattern::uniform_angle;
  if (s == "alternating_columns") return DipolePattern::alternating_columns;
  if (s == "custom") return DipolePattern::custom;
  throw config_error("unknown dipole pattern: " + s);
}

}  // namespace

PYBIND11_MODULE(_excirec, m) {
  m.doc() = "Exciton near-field spectroscopy core";

  py::register_exception<config_error>(m, "ConfigError");
  py::register_exception<invalid_input>(m, "InvalidInput");
  py::register_exception<numerical_error>(m, "NumericalError");
  py::register_exception<format_error>(m, "FormatError");
  py::register_exception<convergence_error>(m, "ConvergenceError");

  py::class_<AggregateGeometry>(m, "AggregateGeometry")
      .def_property_readonly("n", &AggregateGeometry::size)
      .def_readonly("mu", &AggregateGeometry::mu)
      .def_property_readonly("positions",
                             [](const AggregateGeometry& g) {
                               Eigen::MatrixXd p(g.size(), 3);
                               for (int i = 0; i < g.size(); ++i)
                                 p.row(i) = g.positions[i];
                               return p;
                             })
      .def_property_readonly("dipoles", [](const AggregateGeometry& g) {
        Eigen::MatrixXd d(g.size(), 3);
        for (int i = 0; i < g.size(); ++i) d.row(i) = g.dipoles[i];
        return d;
      });

  m.def(
      "build_chain",
      [](int n, double spacing, double mu) {
        GeometryConfig cfg;
        cfg.kind = GeometryKind::chain1d;
        cfg.n = n;
        cfg.spacing = spacing;
        cfg.mu = mu;
        return build_geometry(cfg);
      },
      py::arg("n"), py::arg("spacing") = 1.0, py::arg("mu") = 1.0);

  m.def(
      "build_array2d",
      [](int nx, int ny, double spacing_x, double spacing_y, double theta_deg,
         double mu) {
        GeometryConfig cfg;
        cfg.kind = GeometryKind::array2d;
        cfg.nx = nx;
        cfg.ny = ny;
        cfg.spacing_x = spacing_x;
        cfg.spacing_y = spacing_y;
        cfg.pattern = DipolePattern::alternating_columns;
        cfg.theta_deg = theta_deg;
        cfg.mu = mu;
        return build_geometry(cfg);
      },
      py::arg("nx"), py::arg("ny"), py::arg("spacing_x") = 1.0,
      py::arg("spacing_y") = 1.0, py::arg("theta_deg") = 45.0,
      py::arg("mu") = 1.0);

  m.def("coupling", &coupling, py::arg("geometry"), py::arg("m"), py::arg("n"));
  m.def("max_abs_coupling", &max_abs_coupling, py::arg("geometry"));

  py::class_<EigenSystem>(m, "EigenSystem")
      .def_readonly("energies", &EigenSystem::energies)
      .def_readonly("coefficients", &EigenSystem::coefficients)
      .def_readonly("degenerate", &EigenSystem::degenerate);

  m.def(
      "solve_chain",
      [](const AggregateGeometry& g, double sigma_d, double sigma_od,
         std::uint64_t seed) {
        DisorderSpec spec;
        spec.sigma_d = sigma_d;
        spec.sigma_od = sigma_od;
        spec.seed = seed;
        return diagonalize(build_hamiltonian(g, sample_disorder(spec, g)));
      },
      py::arg("geometry"), py::arg("sigma_d") = 0.0, py::arg("sigma_od") = 0.0,
      py::arg("seed") = 0,
      "Sample one disorder realization, build H, diagonalize.");

  m.def(
      "hamiltonian",
      [](const AggregateGeometry& g, double sigma_d, double sigma_od,
         std::uint64_t seed) {
        DisorderSpec spec;
        spec.sigma_d = sigma_d;
        spec.sigma_od = sigma_od;
        spec.seed = seed;
        return build_hamiltonian(g, sample_disorder(spec, g)).matrix;
      },
      py::arg("geometry"), py::arg("sigma_d") = 0.0, py::arg("sigma_od") = 0.0,
      py::arg("seed") = 0);

  m.def("canonicalize_sign", &canonicalize_sign, py::arg("c"));

  m.def("hertz_field", &hertz_field, py::arg("r_obs"), py::arg("r_dip"),
        py::arg("d"));

  m.def(
      "line_spectrum",
      [](const Eigen::VectorXd& c, const AggregateGeometry& g, int n_tip,
         double extent, double z_dip) {
        return scan_spectrum(c, g, make_line_scan(g, n_tip, extent, z_dip))
            .values;
      },
      py::arg("c"), py::arg("geometry"), py::arg("n_tip") = 512,
      py::arg("extent") = 40.0, py::arg("z_dip") = 2.0);

  m.def(
      "field_projection",
      [](const AggregateGeometry& g, int n_tip, double extent, double z_dip) {
        return field_projection(g, *make_line_scan(g, n_tip, extent, z_dip));
      },
      py::arg("geometry"), py::arg("n_tip") = 512, py::arg("extent") = 40.0,
      py::arg("z_dip") = 2.0);

  py::class_<DataSet>(m, "DataSet")
      .def_property_readonly(
          "inputs", [](const DataSet& d) { return Eigen::MatrixXf(d.inputs); })
      .def_property_readonly(
          "targets",
          [](const DataSet& d) { return Eigen::MatrixXf(d.targets); })
      .def_property_readonly("n_samples", &DataSet::n_samples)
      .def_property_readonly("n_tip", &DataSet::n_tip)
      .def_property_readonly("n_sites", &DataSet::n_sites)
      .def_property_readonly("sigma_d",
                             [](const DataSet& d) { return d.meta.sigma_d; })
      .def_property_readonly("sigma_od",
                             [](const DataSet& d) { return d.meta.sigma_od; })
      .def_property_readonly("state",
                             [](const DataSet& d) { return d.meta.state; });

  m.def(
      "generate_ensemble",
      [](const AggregateGeometry& g, const std::vector<double>& sigma_d,
         const std::vector<double>& sigma_od, int realizations, int n_tip,
         double scan_extent, double z_dip, double noise_sigma,
         std::uint64_t master_seed, int n_threads) {
        EnsembleConfig cfg;
        cfg.geometry.kind = g.kind;  // geometry rebuilt from stored fields
        if (g.kind != GeometryKind::chain1d)
          throw invalid_input(
              "generate_ensemble binding covers 1D chains; use the CLI for "
              "2D ensembles");
        cfg.geometry.n = g.size();
        cfg.geometry.mu = g.mu;
        if (g.size() > 1)
          cfg.geometry.spacing = (g.positions[1] - g.positions[0]).norm();
        cfg.sigma_d_list = sigma_d;
        cfg.sigma_od_list = sigma_od;
        cfg.realizations_per_sigma = realizations;
        cfg.n_tip = n_tip;
        cfg.scan_extent = scan_extent;
        cfg.z_dip = z_dip;
        cfg.noise_sigma = noise_sigma;
        cfg.master_seed = master_seed;
        return generate_ensemble(cfg, n_threads);
      },
      py::arg("geometry"), py::arg("sigma_d"),
      py::arg("sigma_od") = std::vector<double>{},
      py::arg("realizations") = 100, py::arg("n_tip") = 512,
      py::arg("scan_extent") = 40.0, py::arg("z_dip") = 2.0,
      py::arg("noise_sigma") = 0.0, py::arg("master_seed") = 0,
      py::arg("n_threads") = 1);

  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("path"));

  m.def("sign_resolved_loss", &nn::sign_resolved_loss<double>, py::arg("c"),
        py::arg("c_hat"),
        "Sign-resolved overlap loss (1 - |<c, c_hat>|) / 2 on unit-normalized "
        "inputs.");

  py::class_<nn::Network<float>>(m, "Network")
      .def(py::init([](int input_len, int n_out, std::uint64_t seed) {
             return nn::Network<float>(nn::reference_config_1d(input_len, n_out),
                                       seed);
           }),
           py::arg("input_len"), py::arg("n_out"), py::arg("seed") = 0,
           "Reference 1D convolutional stack with He initialization.")
      .def_property_readonly("input_size", &nn::Network<float>::input_size)
      .def_property_readonly("output_size", &nn::Network<float>::output_size)
      .def_property_readonly("n_params", &nn::Network<float>::n_params)
      .def("predict",
           [](nn::Network<float>& net, const Eigen::VectorXf& x) {
             return Eigen::VectorXf(net.predict(x));
           },
           py::arg("spectrum"),
           "Normalized, sign-canonical coefficient estimate for one max-"
           "normalized spectrum.")
      .def("evaluate",
           [](nn::Network<float>& net, const DataSet& ds) {
             const auto r = nn::evaluate(net, ds);
             return py::make_tuple(r.mean, Eigen::VectorXd(r.per_sample));
           },
           py::arg("dataset"))
      .def("train",
           [](nn::Network<float>& net, const DataSet& train_set,
              const DataSet& val_set, int epochs, int batch_size,
              double learning_rate, double noise_sigma,
              std::uint64_t shuffle_seed, bool verbose) {
             nn::TrainConfig tc;
             tc.epochs = epochs;
             tc.batch_size = batch_size;
             tc.learning_rate = learning_rate;
             tc.noise_sigma = noise_sigma;
             tc.shuffle_seed = shuffle_seed;
             tc.verbose = verbose;
             const auto h = nn::train(net, train_set, val_set, tc);
             py::dict out;
             out["train_loss"] = h.train_loss;
             out["val_loss"] = h.val_loss;
             out["best_epoch"] = h.best_epoch;
             out["best_val"] = h.best_val;
             return out;
           },
           py::arg("train_set"), py::arg("val_set"), py::arg("epochs") = 100,
           py::arg("batch_size") = 512, py::arg("learning_rate") = 1e-3,
           py::arg("noise_sigma") = 0.0, py::arg("shuffle_seed") = 0,
           py::arg("verbose") = false);

  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("net"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  py::class_<LocalFieldParams>(m, "LocalFieldParams")
      .def(py::init<>())
      .def_readwrite("spacing_nm", &LocalFieldParams::spacing_nm)
      .def_readwrite("mu_debye", &LocalFieldParams::mu_debye)
      .def_readwrite("omega_m", &LocalFieldParams::omega_m)
      .def_readwrite("gamma_m", &LocalFieldParams::gamma_m);

  m.def(
      "localfield_map",
      [](int n, const LocalFieldParams& params, int n_omega, double pad_gammas,
         int n_tip, double extent_nm, double z_nm) {
        GeometryConfig gc;
        gc.kind = GeometryKind::chain1d;
        gc.n = n;
        const auto sys = make_local_field_system(build_geometry(gc), params);
        const Eigen::VectorXd grid = default_freq_grid(sys, n_omega, pad_gammas);
        const auto scan = make_tip_line_scan(sys, n_tip, extent_nm, z_nm);
        const LocalFieldMap map = localfield_map(sys, *scan, grid);
        return py::make_tuple(map.omegas, map.map);
      },
      py::arg("n"), py::arg("params") = LocalFieldParams{},
      py::arg("n_omega") = 2000, py::arg("pad_gammas") = 50.0,
      py::arg("n_tip") = 512, py::arg("extent_nm") = 50.0,
      py::arg("z_nm") = 3.75,
      "Physical-units absorption map; returns (omegas, n_omega x n_tip map).");

  m.def(
      "extract_peak_slices",
      [](const Eigen::VectorXd& omegas, const Eigen::MatrixXd& map_values,
         double prominence_frac, int min_separation) {
        LocalFieldMap map;
        map.omegas = omegas;
        map.map = map_values;
        const auto slices =
            extract_peak_slices(map, prominence_frac, min_separation);
        py::list out;
        for (const auto& s : slices)
          out.append(py::make_tuple(s.omega, s.values));
        return out;
      },
      py::arg("omegas"), py::arg("map"), py::arg("prominence_frac") = 0.05,
      py::arg("min_separation") = 2);

  m.def(
      "baseline_minimize",
      [](const AggregateGeometry& g, const Eigen::VectorXd& target,
         const std::string& method, std::uint64_t seed, int n_tip,
         double extent, double z_dip, int max_iterations, double target_cost) {
        baseline::Method m_enum;
        if (method == "nelder_mead") {
          m_enum = baseline::Method::nelder_mead;
        } else if (method == "differential_evolution") {
          m_enum = baseline::Method::differential_evolution;
        } else if (method == "gp_surrogate") {
          m_enum = baseline::Method::gp_surrogate;
        } else {
          throw config_error("unknown method: " + method);
        }
        baseline::BaselineProblem problem;
        problem.target = target;
        problem.geometry = g;
        problem.scan = *make_line_scan(g, n_tip, extent, z_dip);
        problem.max_iterations = max_iterations;
        problem.target_cost = target_cost;
        const auto r = baseline::minimize(problem, m_enum, seed);
        py::dict out;
        out["candidate"] = r.candidate;
        out["best_cost"] = r.best_cost;
        out["iterations"] = r.iterations;
        out["converged"] = r.converged;
        out["trace"] = r.trace;
        return out;
      },
      py::arg("geometry"), py::arg("target"), py::arg("method"),
      py::arg("seed") = 0, py::arg("n_tip") = 400, py::arg("extent") = 40.0,
      py::arg("z_dip") = 2.0, py::arg("max_iterations") = 1000,
      py::arg("target_cost") = 1e-10,
      "Reconstruct coefficients from a target spectrum with a classical "
      "optimizer; the scan geometry must match the target.");
}
