#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "excirec/common.hpp"
#include "excirec/exciton.hpp"
#include "excirec/geometry.hpp"

namespace excirec {

struct TipScan {
  std::vector<Vec3> positions;  // all at z = z_dip
  double z_dip = 2.0;
  Vec3 dip_moment = Vec3(0.0, 0.0, 1.0);
  // Grid scans are stored row-major with y as the row index:
  // index = iy * nx + ix, x varying fastest. Line scans set ny = 1.
  int nx = 0;
  int ny = 1;
  int n_tip() const { return static_cast<int>(positions.size()); }
};

struct Spectrum {
  Eigen::VectorXd values;
  std::shared_ptr<const TipScan> scan;
  std::optional<int> state_index;
  double noise_sigma = 0.0;
};

// Near-zone field of a point dipole d at r_dip, evaluated at r_obs:
// E = 3R(R.d)/|R|^5 - d/|R|^3, R = r_obs - r_dip (units 1/(4 pi eps0) = 1).
Vec3 hertz_field(const Vec3& r_obs, const Vec3& r_dip, const Vec3& d);

// A = |sum_m c_m mu_m . E(R_m; r_dip)|^2
double absorption_strength(const Eigen::VectorXd& c,
                           const AggregateGeometry& geometry, const Vec3& r_dip,
                           const Vec3& d = Vec3(0.0, 0.0, 1.0));

// F(i, m) = mu_m . E(R_m; tip i), so a spectrum is (F c)^2 elementwise.
// Factoring this out lets one scan matrix serve a whole disorder ensemble.
Eigen::MatrixXd field_projection(const AggregateGeometry& geometry,
                                 const TipScan& scan);

// n points spanning `extent` symmetrically about the aggregate center,
// endpoints inclusive. The symmetric construction keeps clean-chain spectra
// mirror-symmetric to rounding.
std::shared_ptr<const TipScan> make_line_scan(const AggregateGeometry& geometry,
                                              int n = 512,
                                              double extent = 40.0,
                                              double z_dip = 2.0);

// nx x ny grid over the aggregate footprint extended by `margin` per side.
std::shared_ptr<const TipScan> make_grid_scan(const AggregateGeometry& geometry,
                                              int nx = 256, int ny = 256,
                                              double margin = 5.0,
                                              double z_dip = 2.0);

Spectrum scan_spectrum(const Eigen::VectorXd& c,
                       const AggregateGeometry& geometry,
                       const std::shared_ptr<const TipScan>& scan);

// Adds i.i.d. N(0, (sigma_n * max values)^2) to every entry.
Spectrum add_noise(const Spectrum& s, double sigma_n, std::uint64_t seed);

struct FrequencyMap {
  Eigen::VectorXd omegas;
  Eigen::MatrixXd map;  // n_omega x n_tip
};

// map(w, i) = sum_l A^(l)(R_i) * (gamma/pi) / ((w - E_l)^2 + gamma^2),
// on a grid covering [min E - pad*gamma, max E + pad*gamma].
FrequencyMap frequency_map(const EigenSystem& es,
                           const AggregateGeometry& geometry,
                           const std::shared_ptr<const TipScan>& scan,
                           double gamma, int n_omega = 512,
                           double pad_gammas = 5.0);

}  // namespace excirec
