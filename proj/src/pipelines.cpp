#include "excirec/pipelines.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "excirec/checkpoint.hpp"
#include "excirec/csv.hpp"
#include "excirec/exciton.hpp"
#include "excirec/rng.hpp"
#include "excirec/svg.hpp"

namespace excirec {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Seed stream indices far above the per-realization indices used by
// generate_ensemble, so derived streams never collide.
constexpr std::uint64_t kSplitSeedIndex = 1ull << 40;
constexpr std::uint64_t kInitSeedIndex = (1ull << 40) + 1;
constexpr std::uint64_t kShuffleSeedIndex = (1ull << 40) + 2;
constexpr std::uint64_t kValSplitSeedIndex = (1ull << 40) + 3;
constexpr std::uint64_t kBaselineSeedIndex = 1ull << 41;

std::string out_path(const CommonConfig& common, const std::string& name) {
  fs::create_directories(common.output_dir);
  return (fs::path(common.output_dir) / name).string();
}

double median(std::vector<double> v) {
  if (v.empty()) throw invalid_input("median of an empty list");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string checksum_of(const std::string& path) {
  char hash[19];
  std::snprintf(hash, sizeof(hash), "0x%016llx",
                static_cast<unsigned long long>(fnv1a64_file(path)));
  return hash;
}

nn::Network<float> load_checkpoint_for(const std::string& path, int n_tip) {
  nn::Network<float> net = load_checkpoint(path);
  if (net.input_size() != n_tip) {
    std::ostringstream msg;
    msg << "checkpoint expects " << net.input_size()
        << " tip positions but the data provides " << n_tip;
    throw invalid_input(msg.str());
  }
  return net;
}

}  // namespace

int cmd_generate(const GenerateConfig& cfg, int n_threads) {
  const DataSet full = generate_ensemble(cfg.ensemble, n_threads);
  const auto parts = split(full, cfg.ensemble.split_fraction,
                           derive_seed(cfg.common.master_seed, kSplitSeedIndex));

  const std::string train_path = out_path(cfg.common, cfg.train_file);
  const std::string test_path = out_path(cfg.common, cfg.test_file);
  save_dataset(parts.first, train_path);
  save_dataset(parts.second, test_path);

  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["config"] = ensemble_config_to_json(cfg.ensemble);
  manifest["total_samples"] = full.n_samples();
  manifest["n_tip"] = full.n_tip();
  manifest["n_sites"] = full.n_sites();
  manifest["files"] = {
      {"train",
       {{"path", cfg.train_file},
        {"n_samples", parts.first.n_samples()},
        {"checksum_fnv1a64", checksum_of(train_path)}}},
      {"test",
       {{"path", cfg.test_file},
        {"n_samples", parts.second.n_samples()},
        {"checksum_fnv1a64", checksum_of(test_path)}}}};
  const std::string manifest_path = out_path(cfg.common, cfg.manifest_file);
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw format_error("cannot open " + manifest_path + " for writing");
  out << manifest.dump(2) << '\n';

  std::printf("generated %d samples (%d train, %d test), n_tip=%d, n_sites=%d\n",
              full.n_samples(), parts.first.n_samples(),
              parts.second.n_samples(), full.n_tip(), full.n_sites());
  return 0;
}

int cmd_train(const TrainCommandConfig& cfg) {
  DataSet train_set = load_dataset(cfg.train_file);
  DataSet val_set;
  if (!cfg.val_file.empty()) {
    val_set = load_dataset(cfg.val_file);
    if (val_set.n_tip() != train_set.n_tip() ||
        val_set.n_sites() != train_set.n_sites())
      throw invalid_input("validation set dimensions do not match training");
  } else {
    auto parts =
        split(train_set, 1.0 - cfg.val_fraction,
              derive_seed(cfg.common.master_seed, kValSplitSeedIndex));
    train_set = std::move(parts.first);
    val_set = std::move(parts.second);
  }

  nn::NetworkConfig net_cfg =
      cfg.network ? *cfg.network
                  : nn::reference_config_1d(train_set.n_tip(),
                                            train_set.n_sites());
  if (net_cfg.input.size() != train_set.n_tip())
    throw invalid_input("network input shape does not match the dataset");

  nn::Network<float> net(net_cfg,
                         derive_seed(cfg.common.master_seed, kInitSeedIndex));
  if (net.output_size() != train_set.n_sites())
    throw invalid_input("network output size does not match the dataset");

  std::printf("training on %d samples (%d validation), %ld parameters\n",
              train_set.n_samples(), val_set.n_samples(), net.n_params());

  nn::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.learning_rate = cfg.learning_rate;
  tc.noise_sigma = cfg.noise_sigma;
  tc.shuffle_seed = derive_seed(cfg.common.master_seed, kShuffleSeedIndex);
  tc.verbose = cfg.verbose;
  const auto history = nn::train(net, train_set, val_set, tc);

  save_checkpoint(out_path(cfg.common, cfg.checkpoint_file), net);
  save_history_csv(out_path(cfg.common, cfg.history_file), history);
  std::printf("best validation loss %.6g at epoch %d\n", history.best_val,
              history.best_epoch);
  return 0;
}

int cmd_evaluate(const EvaluateConfig& cfg) {
  const DataSet ds = load_dataset(cfg.dataset_file);
  nn::Network<float> net = load_checkpoint_for(cfg.checkpoint_file, ds.n_tip());
  if (net.output_size() != ds.n_sites()) {
    std::ostringstream msg;
    msg << "checkpoint reconstructs " << net.output_size()
        << " sites but the dataset has " << ds.n_sites();
    throw invalid_input(msg.str());
  }

  const auto eval = nn::evaluate(net, ds);

  {
    std::ofstream out(out_path(cfg.common, cfg.histogram_file),
                      std::ios::trunc);
    if (!out) throw format_error("cannot write the loss histogram file");
    out.precision(10);
    out << "sample,state,sigma_d,sigma_od,loss\n";
    for (int i = 0; i < ds.n_samples(); ++i)
      out << i << ',' << ds.meta.state[i] << ',' << ds.meta.sigma_d[i] << ','
          << ds.meta.sigma_od[i] << ',' << eval.per_sample[i] << '\n';
  }

  Eigen::VectorXd state_sum = Eigen::VectorXd::Zero(ds.n_sites());
  Eigen::VectorXi state_count = Eigen::VectorXi::Zero(ds.n_sites());
  for (int i = 0; i < ds.n_samples(); ++i) {
    const int s = ds.meta.state[i];
    if (s >= 0 && s < ds.n_sites()) {
      state_sum[s] += eval.per_sample[i];
      state_count[s] += 1;
    }
  }
  Eigen::MatrixXd per_state(ds.n_sites(), 3);
  for (int s = 0; s < ds.n_sites(); ++s) {
    per_state(s, 0) = s;
    per_state(s, 1) = state_count[s] ? state_sum[s] / state_count[s] : 0.0;
    per_state(s, 2) = state_count[s];
  }
  write_matrix_csv(out_path(cfg.common, cfg.state_mean_file), per_state,
                   "state,mean_loss,count");

  if (cfg.svg) {
    Eigen::VectorXd x(ds.n_sites());
    for (int s = 0; s < ds.n_sites(); ++s) x[s] = s;
    write_line_svg(out_path(cfg.common, "state_mean_loss.svg"), x,
                   {per_state.col(1)}, "mean loss per eigenstate index");
  }

  std::vector<double> losses(eval.per_sample.data(),
                             eval.per_sample.data() + eval.per_sample.size());
  std::printf("evaluated %d samples: mean loss %.6g, median %.6g\n",
              ds.n_samples(), eval.mean, median(losses));
  return 0;
}

int cmd_predict(const PredictConfig& cfg) {
  const Eigen::VectorXd spectrum = read_vector_csv(cfg.spectrum_file);
  nn::Network<float> net = load_checkpoint_for(
      cfg.checkpoint_file, static_cast<int>(spectrum.size()));

  const double peak = spectrum.maxCoeff();
  if (!(peak > 0.0))
    throw invalid_input("spectrum has no positive peak to normalize by");
  const nn::Vec<float> input = (spectrum / peak).cast<float>();
  const nn::Vec<float> c = net.predict(input);

  Eigen::MatrixXd table(c.size(), 2);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    table(i, 0) = static_cast<double>(i);
    table(i, 1) = c[i];
  }
  write_matrix_csv(out_path(cfg.common, cfg.coefficients_file), table,
                   "site,coefficient");
  if (cfg.svg) {
    Eigen::VectorXd x(c.size()), y(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      x[i] = static_cast<double>(i);
      y[i] = c[i];
    }
    write_line_svg(out_path(cfg.common, "coefficients.svg"), x, {y},
                   "reconstructed coefficients");
  }
  std::printf("wrote %d coefficients\n", static_cast<int>(c.size()));
  return 0;
}

int cmd_localfield(const LocalFieldCommandConfig& cfg) {
  GeometryConfig gc;
  gc.kind = GeometryKind::chain1d;
  gc.n = cfg.n;
  const AggregateGeometry geometry = build_geometry(gc);
  const LocalFieldSystem sys = make_local_field_system(geometry, cfg.params);

  const Eigen::VectorXd grid = default_freq_grid(sys, cfg.n_omega,
                                                 cfg.pad_gammas);
  const auto scan = make_tip_line_scan(sys, cfg.n_tip, cfg.extent_nm,
                                       cfg.z_nm);
  const LocalFieldMap map = localfield_map(sys, *scan, grid);

  write_matrix_csv(out_path(cfg.common, cfg.map_file), map.map);
  write_vector_csv(out_path(cfg.common, cfg.omegas_file), map.omegas, "omega");

  const auto slices =
      extract_peak_slices(map, cfg.prominence_frac, cfg.min_separation);
  Eigen::MatrixXd slice_table(slices.size(), cfg.n_tip + 1);
  for (size_t k = 0; k < slices.size(); ++k) {
    slice_table(k, 0) = slices[k].omega;
    slice_table.row(k).tail(cfg.n_tip) = slices[k].values.transpose();
  }
  write_matrix_csv(out_path(cfg.common, cfg.slices_file), slice_table);
  std::printf("map %d x %d, %d peak slices\n",
              static_cast<int>(map.map.rows()),
              static_cast<int>(map.map.cols()),
              static_cast<int>(slices.size()));

  if (cfg.predict) {
    nn::Network<float> net =
        load_checkpoint_for(cfg.checkpoint_file, cfg.n_tip);
    Eigen::MatrixXd predictions(slices.size(), net.output_size() + 1);
    for (size_t k = 0; k < slices.size(); ++k) {
      const double peak = slices[k].values.maxCoeff();
      if (!(peak > 0.0))
        throw numerical_error("peak slice without a positive maximum");
      const nn::Vec<float> input =
          (slices[k].values / peak).cast<float>();
      const nn::Vec<float> c = net.predict(input);
      predictions(k, 0) = slices[k].omega;
      predictions.row(k).tail(net.output_size()) =
          c.cast<double>().transpose();
    }
    write_matrix_csv(out_path(cfg.common, cfg.predictions_file), predictions);
    std::printf("wrote %d slice reconstructions\n",
                static_cast<int>(slices.size()));
  }

  if (cfg.svg) {
    write_heatmap_svg(out_path(cfg.common, "localfield_map.svg"), map.map,
                      "near-field absorption map");
    if (!slices.empty()) {
      Eigen::VectorXd x(cfg.n_tip);
      for (int i = 0; i < cfg.n_tip; ++i) x[i] = scan->positions[i].x();
      std::vector<Eigen::VectorXd> series;
      for (const auto& s : slices) series.push_back(s.values);
      write_line_svg(out_path(cfg.common, "peak_slices.svg"), x, series,
                     "peak slices");
    }
  }
  return 0;
}

int cmd_baseline(const BaselineCommandConfig& cfg) {
  json records = json::array();
  std::uint64_t record_index = 0;
  bool all_converged = true;

  const auto method_name = [](baseline::Method m) {
    switch (m) {
      case baseline::Method::nelder_mead: return "nelder_mead";
      case baseline::Method::differential_evolution:
        return "differential_evolution";
      case baseline::Method::gp_surrogate: return "gp_surrogate";
    }
    return "?";
  };

  if (cfg.problem == "toy_quadratic") {
    const int dim = static_cast<int>(cfg.toy_minimum.size());
    const Eigen::VectorXd x_star = Eigen::Map<const Eigen::VectorXd>(
        cfg.toy_minimum.data(), dim);
    if ((x_star.array().abs() > 1.0).any())
      throw config_error("'/toy_minimum' must lie inside the [-1, 1] bounds");
    const auto f = [&](const Eigen::VectorXd& x) {
      return (x - x_star).squaredNorm();
    };
    baseline::Options opt;
    opt.dim = dim;
    opt.max_evaluations = cfg.max_iterations;
    opt.target_cost = cfg.target_cost;
    for (const auto method : cfg.methods) {
      opt.seed = derive_seed(cfg.common.master_seed,
                             kBaselineSeedIndex + record_index++);
      const auto r = baseline::minimize_function(f, method, opt);
      all_converged = all_converged && r.converged;
      json rec;
      rec["problem"] = "toy_quadratic";
      rec["method"] = method_name(method);
      rec["seed"] = opt.seed;
      rec["iterations"] = r.iterations;
      rec["best_cost"] = r.best_cost;
      rec["converged"] = r.converged;
      rec["candidate"] = std::vector<double>(
          r.candidate.data(), r.candidate.data() + r.candidate.size());
      rec["distance_to_minimum"] = (r.candidate - x_star).norm();
      records.push_back(rec);
      std::printf("toy %-24s cost %.3e after %d evals%s\n",
                  method_name(method), r.best_cost, r.iterations,
                  r.converged ? "" : " (not converged)");
    }
  } else {
    GeometryConfig gc;
    gc.kind = GeometryKind::chain1d;
    gc.n = cfg.n;
    gc.spacing = cfg.spacing;
    const AggregateGeometry geometry = build_geometry(gc);
    const auto scan =
        make_line_scan(geometry, cfg.n_tip, cfg.scan_extent, cfg.z_dip);
    const EigenSystem es = diagonalize(build_hamiltonian(geometry));

    std::vector<int> states = cfg.states;
    if (states.empty())
      for (int s = 0; s < cfg.n; ++s) states.push_back(s);

    for (const int state : states) {
      if (state < 0 || state >= cfg.n)
        throw config_error("'/states' entry out of range");
      const Eigen::VectorXd c_true =
          es.coefficients.row(state).transpose();
      baseline::BaselineProblem problem;
      problem.target = scan_spectrum(c_true, geometry, scan).values;
      problem.geometry = geometry;
      problem.scan = *scan;
      problem.max_iterations = cfg.max_iterations;
      problem.target_cost = cfg.target_cost;

      for (const auto method : cfg.methods) {
        const std::uint64_t seed = derive_seed(
            cfg.common.master_seed, kBaselineSeedIndex + record_index++);
        const auto r = baseline::minimize(problem, method, seed);
        all_converged = all_converged && r.converged;
        const double loss = (1.0 - std::abs(c_true.dot(r.candidate))) / 2.0;
        json rec;
        rec["problem"] = "spectrum";
        rec["state"] = state;
        rec["method"] = method_name(method);
        rec["seed"] = seed;
        rec["iterations"] = r.iterations;
        rec["best_cost"] = r.best_cost;
        rec["converged"] = r.converged;
        rec["candidate"] = std::vector<double>(
            r.candidate.data(), r.candidate.data() + r.candidate.size());
        rec["loss_vs_truth"] = loss;
        records.push_back(rec);
        std::printf("state %2d %-24s cost %.3e loss %.3e after %4d evals%s\n",
                    state, method_name(method), r.best_cost, loss,
                    r.iterations, r.converged ? "" : " (not converged)");
      }
    }
  }

  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["records"] = records;
  const std::string path = out_path(cfg.common, cfg.results_file);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw format_error("cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';

  if (cfg.require_convergence && !all_converged)
    throw convergence_error("at least one record failed to reach target_cost");
  return 0;
}

}  // namespace excirec
