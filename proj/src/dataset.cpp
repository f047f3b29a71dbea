#include "excirec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "excirec/exciton.hpp"
#include "excirec/nearfield.hpp"
#include "excirec/rng.hpp"
#include "json.hpp"

namespace excirec {

namespace {

using nlohmann::json;

void validate(const EnsembleConfig& cfg) {
  if (cfg.realizations_per_sigma < 1)
    throw config_error("realizations_per_sigma must be >= 1");
  if (cfg.sigma_d_list.empty() && cfg.sigma_od_list.empty())
    throw config_error("at least one disorder tranche is required");
  for (const double s : cfg.sigma_d_list)
    if (!std::isfinite(s) || s < 0.0)
      throw config_error("sigma_d values must be finite and non-negative");
  for (const double s : cfg.sigma_od_list)
    if (!std::isfinite(s) || s < 0.0)
      throw config_error("sigma_od values must be finite and non-negative");
  if (!std::isfinite(cfg.noise_sigma) || cfg.noise_sigma < 0.0)
    throw config_error("noise_sigma must be finite and non-negative");
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0))
    throw config_error("split_fraction must lie in (0,1)");
}

// Canonicalize in f32 space so that re-running the rule on the stored row is
// a no-op even when rounding moves the argmax between tied entries.
void canonicalize_f32_row(Eigen::Ref<Eigen::RowVectorXf> row) {
  int arg = 0;
  float best = 0.0f;
  for (int i = 0; i < row.size(); ++i) {
    const float a = std::abs(row[i]);
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (row[arg] < 0.0f) row = -row;
}

struct Tranche {
  double sigma_d;
  double sigma_od;
};

}  // namespace

DataSet generate_ensemble(const EnsembleConfig& cfg, int n_threads) {
  validate(cfg);
  const AggregateGeometry geometry = build_geometry(cfg.geometry);
  const auto scan =
      cfg.geometry.kind == GeometryKind::chain1d
          ? make_line_scan(geometry, cfg.n_tip, cfg.scan_extent, cfg.z_dip)
          : make_grid_scan(geometry, cfg.grid_nx, cfg.grid_ny, cfg.grid_margin,
                           cfg.z_dip);
  const Eigen::MatrixXd projection = field_projection(geometry, *scan);

  std::vector<Tranche> tranches;
  for (const double s : cfg.sigma_d_list) tranches.push_back({s, 0.0});
  for (const double s : cfg.sigma_od_list) tranches.push_back({0.0, s});

  const int n = geometry.size();
  const int n_tip = scan->n_tip();
  const int r_per = cfg.realizations_per_sigma;
  const int n_realizations = static_cast<int>(tranches.size()) * r_per;
  const int n_samples = n_realizations * n;

  DataSet ds;
  ds.inputs.resize(n_samples, n_tip);
  ds.targets.resize(n_samples, n);
  ds.noise_sigma = cfg.noise_sigma;
  ds.flags = cfg.noise_sigma > 0.0 ? 1u : 0u;
  ds.meta.sigma_d.resize(n_samples);
  ds.meta.sigma_od.resize(n_samples);
  ds.meta.realization.resize(n_samples);
  ds.meta.state.resize(n_samples);
  ds.meta.seed.resize(n_samples);
  ds.meta.degenerate.resize(n_samples);

  const auto worker = [&](int g_begin, int g_end) {
    for (int g = g_begin; g < g_end; ++g) {
      const Tranche& tranche = tranches[g / r_per];
      DisorderSpec spec;
      spec.sigma_d = tranche.sigma_d;
      spec.sigma_od = tranche.sigma_od;
      spec.seed = derive_seed(cfg.master_seed, 2ull * g);
      const std::uint64_t noise_base =
          derive_seed(cfg.master_seed, 2ull * g + 1);

      const EigenSystem es =
          diagonalize(build_hamiltonian(geometry, sample_disorder(spec, geometry)));
      // amplitudes(i, l): field projection of eigenstate l at tip i
      const Eigen::MatrixXd amplitudes = projection * es.coefficients.transpose();

      for (int l = 0; l < n; ++l) {
        const int row = g * n + l;
        Eigen::VectorXd values = amplitudes.col(l).array().square();
        if (cfg.noise_sigma > 0.0) {
          const double std = cfg.noise_sigma * values.maxCoeff();
          Rng rng(derive_seed(noise_base, l));
          for (int i = 0; i < n_tip; ++i) values[i] += std * rng.gaussian();
        }
        const double peak = values.maxCoeff();
        if (!(peak > 0.0))
          throw numerical_error("spectrum with non-positive maximum");
        ds.inputs.row(row) = (values / peak).cast<float>();
        ds.targets.row(row) = es.coefficients.row(l).cast<float>();
        canonicalize_f32_row(ds.targets.row(row));

        ds.meta.sigma_d[row] = static_cast<float>(tranche.sigma_d);
        ds.meta.sigma_od[row] = static_cast<float>(tranche.sigma_od);
        ds.meta.realization[row] = static_cast<std::uint32_t>(g);
        ds.meta.state[row] = static_cast<std::uint16_t>(l);
        ds.meta.seed[row] = spec.seed;
        ds.meta.degenerate[row] = es.degenerate ? 1 : 0;
      }
    }
  };

  if (n_threads <= 1) {
    worker(0, n_realizations);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_realizations + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(n_realizations, lo + chunk);
      if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return ds;
}

namespace {

DataSet take_rows(const DataSet& ds, const std::vector<int>& rows) {
  DataSet out;
  out.inputs.resize(rows.size(), ds.inputs.cols());
  out.targets.resize(rows.size(), ds.targets.cols());
  out.noise_sigma = ds.noise_sigma;
  out.flags = ds.flags;
  const auto& m = ds.meta;
  for (size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    out.inputs.row(i) = ds.inputs.row(r);
    out.targets.row(i) = ds.targets.row(r);
    out.meta.sigma_d.push_back(m.sigma_d[r]);
    out.meta.sigma_od.push_back(m.sigma_od[r]);
    out.meta.realization.push_back(m.realization[r]);
    out.meta.state.push_back(m.state[r]);
    out.meta.seed.push_back(m.seed[r]);
    out.meta.degenerate.push_back(m.degenerate[r]);
  }
  return out;
}

}  // namespace

std::pair<DataSet, DataSet> split(const DataSet& ds, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw config_error("split fraction must lie in (0,1)");
  const int n = ds.n_samples();
  const int n_train = static_cast<int>(fraction * n);
  if (n_train == 0 || n_train == n)
    throw config_error("split would leave an empty partition");

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);

  return {take_rows(ds, {order.begin(), order.begin() + n_train}),
          take_rows(ds, {order.begin() + n_train, order.end()})};
}

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'E', 'X', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}

void read_exact(std::istream& in, char* dst, std::streamsize count,
                std::uint64_t offset, const char* what) {
  in.read(dst, count);
  if (in.gcount() != count) {
    std::ostringstream msg;
    msg << "truncated dataset file while reading " << what << " at offset "
        << (offset + static_cast<std::uint64_t>(std::max<std::streamsize>(
                         in.gcount(), 0)));
    throw format_error(msg.str());
  }
}

json meta_to_json(const DataSet& ds) {
  json j;
  j["noise_sigma"] = ds.noise_sigma;
  j["sigma_d"] = ds.meta.sigma_d;
  j["sigma_od"] = ds.meta.sigma_od;
  j["realization"] = ds.meta.realization;
  j["state"] = ds.meta.state;
  j["seed"] = ds.meta.seed;
  j["degenerate"] = ds.meta.degenerate;
  return j;
}

void meta_from_json(const json& j, DataSet& ds) {
  ds.noise_sigma = j.value("noise_sigma", 0.0);
  const auto get = [&](const char* key, auto& vec) {
    if (j.contains(key)) j.at(key).get_to(vec);
  };
  get("sigma_d", ds.meta.sigma_d);
  get("sigma_od", ds.meta.sigma_od);
  get("realization", ds.meta.realization);
  get("state", ds.meta.state);
  get("seed", ds.meta.seed);
  get("degenerate", ds.meta.degenerate);
}

}  // namespace

void save_dataset(const DataSet& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw format_error("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(ds.n_samples()));
  write_u32(out, static_cast<std::uint32_t>(ds.n_tip()));
  write_u32(out, static_cast<std::uint32_t>(ds.n_sites()));
  write_u32(out, ds.flags);
  out.write(reinterpret_cast<const char*>(ds.inputs.data()),
            static_cast<std::streamsize>(sizeof(float)) * ds.inputs.size());
  out.write(reinterpret_cast<const char*>(ds.targets.data()),
            static_cast<std::streamsize>(sizeof(float)) * ds.targets.size());
  const std::string meta = meta_to_json(ds).dump();
  write_u64(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  if (!out) throw format_error("short write to " + path);
}

DataSet load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open " + path);

  char magic[4];
  read_exact(in, magic, 4, 0, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw format_error("bad magic at offset 0 in " + path);

  std::uint32_t header[5];
  read_exact(in, reinterpret_cast<char*>(header), 20, 4, "header");
  if (header[0] != kVersion) {
    std::ostringstream msg;
    msg << "unsupported dataset version " << header[0] << " at offset 4";
    throw format_error(msg.str());
  }
  const std::uint32_t n_samples = header[1];
  const std::uint32_t n_tip = header[2];
  const std::uint32_t n_sites = header[3];
  if (n_tip == 0 || n_sites == 0)
    throw format_error("zero-sized dimensions in header at offset 12");

  DataSet ds;
  ds.flags = header[4];
  ds.inputs.resize(n_samples, n_tip);
  ds.targets.resize(n_samples, n_sites);
  std::uint64_t offset = 24;
  read_exact(in, reinterpret_cast<char*>(ds.inputs.data()),
             static_cast<std::streamsize>(sizeof(float)) * ds.inputs.size(),
             offset, "inputs");
  offset += sizeof(float) * static_cast<std::uint64_t>(ds.inputs.size());
  read_exact(in, reinterpret_cast<char*>(ds.targets.data()),
             static_cast<std::streamsize>(sizeof(float)) * ds.targets.size(),
             offset, "targets");
  offset += sizeof(float) * static_cast<std::uint64_t>(ds.targets.size());

  std::uint64_t meta_len = 0;
  read_exact(in, reinterpret_cast<char*>(&meta_len), 8, offset, "meta length");
  offset += 8;
  std::string meta(meta_len, '\0');
  read_exact(in, meta.data(), static_cast<std::streamsize>(meta_len), offset,
             "meta block");
  try {
    meta_from_json(nlohmann::json::parse(meta), ds);
  } catch (const nlohmann::json::exception& e) {
    std::ostringstream msg;
    msg << "invalid meta JSON at offset " << offset << ": " << e.what();
    throw format_error(msg.str());
  }
  return ds;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open " + path);
  std::uint64_t hash = 14695981039346656037ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  return hash;
}

namespace {

json geometry_to_json(const GeometryConfig& g) {
  json j;
  j["kind"] = g.kind == GeometryKind::chain1d ? "chain1d" : "array2d";
  if (g.kind == GeometryKind::chain1d) {
    j["n"] = g.n;
    j["spacing"] = g.spacing;
  } else {
    j["nx"] = g.nx;
    j["ny"] = g.ny;
    j["spacing_x"] = g.spacing_x;
    j["spacing_y"] = g.spacing_y;
  }
  switch (g.pattern) {
    case DipolePattern::chain_axis: j["pattern"] = "chain_axis"; break;
    case DipolePattern::uniform_angle: j["pattern"] = "uniform_angle"; break;
    case DipolePattern::alternating_columns:
      j["pattern"] = "alternating_columns";
      break;
    case DipolePattern::custom: j["pattern"] = "custom"; break;
  }
  j["theta_deg"] = g.theta_deg;
  j["phi_deg"] = g.phi_deg;
  j["mu"] = g.mu;
  return j;
}

}  // namespace

nlohmann::json ensemble_config_to_json(const EnsembleConfig& cfg) {
  json c;
  c["geometry"] = geometry_to_json(cfg.geometry);
  c["sigma_d_list"] = cfg.sigma_d_list;
  c["sigma_od_list"] = cfg.sigma_od_list;
  c["realizations_per_sigma"] = cfg.realizations_per_sigma;
  c["n_tip"] = cfg.n_tip;
  c["scan_extent"] = cfg.scan_extent;
  c["z_dip"] = cfg.z_dip;
  c["grid_nx"] = cfg.grid_nx;
  c["grid_ny"] = cfg.grid_ny;
  c["grid_margin"] = cfg.grid_margin;
  c["noise_sigma"] = cfg.noise_sigma;
  c["master_seed"] = cfg.master_seed;
  c["split_fraction"] = cfg.split_fraction;
  return c;
}

void write_manifest(const EnsembleConfig& cfg, const DataSet& ds,
                    const std::string& dataset_path) {
  json j;
  j["format"] = "EXDS";
  j["version"] = kVersion;
  j["n_samples"] = ds.n_samples();
  j["n_tip"] = ds.n_tip();
  j["n_sites"] = ds.n_sites();
  j["flags"] = ds.flags;
  char hash[19];
  std::snprintf(hash, sizeof(hash), "0x%016llx",
                static_cast<unsigned long long>(fnv1a64_file(dataset_path)));
  j["checksum_fnv1a64"] = hash;
  j["config"] = ensemble_config_to_json(cfg);

  std::ofstream out(dataset_path + ".manifest.json", std::ios::trunc);
  if (!out) throw format_error("cannot write manifest for " + dataset_path);
  out << j.dump(2) << "\n";
}

}  // namespace excirec
