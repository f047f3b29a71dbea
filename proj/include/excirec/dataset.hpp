#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "excirec/common.hpp"
#include "excirec/geometry.hpp"
#include "json.hpp"

namespace excirec {

// Columnar per-sample metadata; every vector has n_samples entries.
struct SampleMeta {
  std::vector<float> sigma_d;
  std::vector<float> sigma_od;
  std::vector<std::uint32_t> realization;  // global realization index
  std::vector<std::uint16_t> state;        // eigenstate index l
  std::vector<std::uint64_t> seed;         // disorder seed of the realization
  std::vector<std::uint8_t> degenerate;    // eigensystem flagged degenerate
};

struct DataSet {
  MatrixXfRM inputs;   // n_samples x n_tip, max-normalized spectra
  MatrixXfRM targets;  // n_samples x n_sites, canonical coefficients
  SampleMeta meta;
  double noise_sigma = 0.0;
  std::uint32_t flags = 0;  // bit 0: noise was applied

  int n_samples() const { return static_cast<int>(inputs.rows()); }
  int n_tip() const { return static_cast<int>(inputs.cols()); }
  int n_sites() const { return static_cast<int>(targets.cols()); }
};

// Tranches are the sigma_d list (with sigma_od = 0) followed by the sigma_od
// list (with sigma_d = 0); every tranche contributes realizations * N samples.
struct EnsembleConfig {
  GeometryConfig geometry;
  std::vector<double> sigma_d_list;
  std::vector<double> sigma_od_list;
  int realizations_per_sigma = 100;
  int n_tip = 512;          // line-scan points (1D geometries)
  double scan_extent = 40.0;
  double z_dip = 2.0;
  int grid_nx = 256;        // grid scan (2D geometries)
  int grid_ny = 256;
  double grid_margin = 5.0;
  double noise_sigma = 0.0;
  std::uint64_t master_seed = 0;
  double split_fraction = 0.8;
};

// Deterministic given master_seed, independent of n_threads: realization g
// draws from seed derive_seed(master, 2g) and its noise (when enabled) from
// derive_seed(master, 2g+1), so execution order cannot matter.
DataSet generate_ensemble(const EnsembleConfig& cfg, int n_threads = 1);

// Disjoint random partition with sizes (floor(fraction*n), rest).
std::pair<DataSet, DataSet> split(const DataSet& ds, double fraction,
                                  std::uint64_t seed);

void save_dataset(const DataSet& ds, const std::string& path);
DataSet load_dataset(const std::string& path);

std::uint64_t fnv1a64_file(const std::string& path);

// JSON manifest (config echo + file checksum) next to the dataset.
void write_manifest(const EnsembleConfig& cfg, const DataSet& ds,
                    const std::string& dataset_path);

nlohmann::json ensemble_config_to_json(const EnsembleConfig& cfg);

}  // namespace excirec
