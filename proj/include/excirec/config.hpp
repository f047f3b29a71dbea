#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "excirec/baseline.hpp"
#include "excirec/dataset.hpp"
#include "excirec/localfield.hpp"
#include "excirec/nn.hpp"
#include "json.hpp"

namespace excirec {

// Every config document carries schema_version (pinned to 1), master_seed,
// and an optional output_dir. Unknown keys are rejected with their JSON
// pointer path. EXCIREC_SEED in the environment overrides master_seed.
inline constexpr int kSchemaVersion = 1;

struct CommonConfig {
  std::uint64_t master_seed = 0;
  std::string output_dir = ".";
};

struct GenerateConfig {
  CommonConfig common;
  EnsembleConfig ensemble;
  std::string train_file = "train.exds";
  std::string test_file = "test.exds";
  std::string manifest_file = "manifest.json";
};

struct TrainCommandConfig {
  CommonConfig common;
  std::string train_file;
  std::string val_file;        // empty: split val_fraction off train_file
  double val_fraction = 0.1;
  std::optional<nn::NetworkConfig> network;  // default: reference 1D stack
  int epochs = 100;
  int batch_size = 512;
  double learning_rate = 1e-3;
  double noise_sigma = 0.0;
  bool verbose = true;
  std::string checkpoint_file = "model.exnn";
  std::string history_file = "history.csv";
};

struct EvaluateConfig {
  CommonConfig common;
  std::string checkpoint_file;
  std::string dataset_file;
  std::string histogram_file = "loss_histogram.csv";
  std::string state_mean_file = "state_mean_loss.csv";
  bool svg = false;
};

struct PredictConfig {
  CommonConfig common;
  std::string checkpoint_file;
  std::string spectrum_file;
  std::string coefficients_file = "coefficients.csv";
  bool svg = false;
};

struct LocalFieldCommandConfig {
  CommonConfig common;
  int n = 20;
  LocalFieldParams params;
  int n_omega = 2000;
  double pad_gammas = 50.0;
  int n_tip = 512;
  double extent_nm = 50.0;
  double z_nm = 3.75;
  double prominence_frac = 0.05;
  int min_separation = 2;
  bool predict = true;
  std::string checkpoint_file;  // required when predict
  std::string map_file = "localfield_map.csv";
  std::string omegas_file = "localfield_omegas.csv";
  std::string slices_file = "peak_slices.csv";
  std::string predictions_file = "slice_predictions.csv";
  bool svg = false;
};

struct BaselineCommandConfig {
  CommonConfig common;
  std::string problem = "spectrum";  // or "toy_quadratic"
  int n = 5;
  double spacing = 1.0;
  std::vector<int> states;
  std::vector<baseline::Method> methods;
  int n_tip = 400;
  double scan_extent = 40.0;
  double z_dip = 2.0;
  int max_iterations = 1000;
  double target_cost = 1e-8;
  bool require_convergence = false;
  std::vector<double> toy_minimum;
  std::string results_file = "baseline_results.json";
};

nlohmann::json load_config_file(const std::string& path);

GenerateConfig parse_generate_config(const nlohmann::json& j);
TrainCommandConfig parse_train_config(const nlohmann::json& j);
EvaluateConfig parse_evaluate_config(const nlohmann::json& j);
PredictConfig parse_predict_config(const nlohmann::json& j);
LocalFieldCommandConfig parse_localfield_config(const nlohmann::json& j);
BaselineCommandConfig parse_baseline_config(const nlohmann::json& j);

// Applies the EXCIREC_SEED override when the variable is set; a value that
// does not parse as an unsigned integer is a config error.
void apply_seed_override(CommonConfig& common);

}  // namespace excirec
