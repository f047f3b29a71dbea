#include "excirec/nearfield.hpp"

#include <cmath>

#include "excirec/rng.hpp"

namespace excirec {

Vec3 hertz_field(const Vec3& r_obs, const Vec3& r_dip, const Vec3& d) {
  const Vec3 r = r_obs - r_dip;
  const double dist2 = r.squaredNorm();
  if (dist2 == 0.0)
    throw singularity_error("field evaluated at the dipole position");
  const double dist = std::sqrt(dist2);
  const double inv3 = 1.0 / (dist2 * dist);
  const double inv5 = inv3 / dist2;
  return 3.0 * r * r.dot(d) * inv5 - d * inv3;
}

Eigen::MatrixXd field_projection(const AggregateGeometry& geometry,
                                 const TipScan& scan) {
  const int n = geometry.size();
  const int n_tip = scan.n_tip();
  Eigen::MatrixXd f(n_tip, n);
  for (int i = 0; i < n_tip; ++i)
    for (int m = 0; m < n; ++m)
      f(i, m) = geometry.mu *
                geometry.dipoles[m].dot(hertz_field(
                    geometry.positions[m], scan.positions[i], scan.dip_moment));
  return f;
}

double absorption_strength(const Eigen::VectorXd& c,
                           const AggregateGeometry& geometry, const Vec3& r_dip,
                           const Vec3& d) {
  if (static_cast<int>(c.size()) != geometry.size())
    throw invalid_input("coefficient vector does not match geometry size");
  double amp = 0.0;
  for (int m = 0; m < geometry.size(); ++m)
    amp += c[m] * geometry.mu *
           geometry.dipoles[m].dot(
               hertz_field(geometry.positions[m], r_dip, d));
  return amp * amp;
}

std::shared_ptr<const TipScan> make_line_scan(const AggregateGeometry& geometry,
                                              int n, double extent,
                                              double z_dip) {
  if (n < 1) throw config_error("line scan needs at least one position");
  if (extent <= 0.0) throw config_error("line scan extent must be positive");
  if (z_dip <= 0.0) throw config_error("z_dip must be positive");
  auto scan = std::make_shared<TipScan>();
  scan->z_dip = z_dip;
  scan->nx = n;
  scan->ny = 1;
  const Vec3 center = geometry.center();
  const double dx = n > 1 ? extent / (n - 1) : 0.0;
  scan->positions.reserve(n);
  for (int i = 0; i < n; ++i)
    scan->positions.emplace_back(center.x() + (i - 0.5 * (n - 1)) * dx,
                                 center.y(), z_dip);
  return scan;
}

std::shared_ptr<const TipScan> make_grid_scan(const AggregateGeometry& geometry,
                                              int nx, int ny, double margin,
                                              double z_dip) {
  if (nx < 1 || ny < 1) throw config_error("grid scan needs nx, ny >= 1");
  if (margin < 0.0) throw config_error("grid margin must be non-negative");
  if (z_dip <= 0.0) throw config_error("z_dip must be positive");
  double x_lo = geometry.positions[0].x(), x_hi = x_lo;
  double y_lo = geometry.positions[0].y(), y_hi = y_lo;
  for (const auto& p : geometry.positions) {
    x_lo = std::min(x_lo, p.x());
    x_hi = std::max(x_hi, p.x());
    y_lo = std::min(y_lo, p.y());
    y_hi = std::max(y_hi, p.y());
  }
  x_lo -= margin;
  x_hi += margin;
  y_lo -= margin;
  y_hi += margin;
  auto scan = std::make_shared<TipScan>();
  scan->z_dip = z_dip;
  scan->nx = nx;
  scan->ny = ny;
  scan->positions.reserve(static_cast<size_t>(nx) * ny);
  const double dx = nx > 1 ? (x_hi - x_lo) / (nx - 1) : 0.0;
  const double dy = ny > 1 ? (y_hi - y_lo) / (ny - 1) : 0.0;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      scan->positions.emplace_back(x_lo + ix * dx, y_lo + iy * dy, z_dip);
  return scan;
}

Spectrum scan_spectrum(const Eigen::VectorXd& c,
                       const AggregateGeometry& geometry,
                       const std::shared_ptr<const TipScan>& scan) {
  if (!scan) throw invalid_input("null tip scan");
  if (static_cast<int>(c.size()) != geometry.size())
    throw invalid_input("coefficient vector does not match geometry size");
  Spectrum s;
  s.scan = scan;
  s.values = (field_projection(geometry, *scan) * c).array().square();
  return s;
}

Spectrum add_noise(const Spectrum& s, double sigma_n, std::uint64_t seed) {
  if (!std::isfinite(sigma_n) || sigma_n < 0.0)
    throw config_error("sigma_n must be finite and non-negative");
  Spectrum out = s;
  out.noise_sigma = sigma_n;
  if (sigma_n == 0.0 || s.values.size() == 0) return out;
  const double std = sigma_n * s.values.maxCoeff();
  Rng rng(seed);
  for (Eigen::Index i = 0; i < out.values.size(); ++i)
    out.values[i] += std * rng.gaussian();
  return out;
}

FrequencyMap frequency_map(const EigenSystem& es,
                           const AggregateGeometry& geometry,
                           const std::shared_ptr<const TipScan>& scan,
                           double gamma, int n_omega, double pad_gammas) {
  if (gamma <= 0.0) throw config_error("gamma must be positive");
  if (n_omega < 2) throw config_error("frequency map needs n_omega >= 2");
  if (!scan) throw invalid_input("null tip scan");
  const int n = es.n();
  const int n_tip = scan->n_tip();

  const Eigen::MatrixXd f = field_projection(geometry, *scan);
  // amp(i, l) = A^(l)(R_i)
  Eigen::MatrixXd amp(n_tip, n);
  for (int l = 0; l < n; ++l)
    amp.col(l) =
        (f * es.coefficients.row(l).transpose()).array().square();

  FrequencyMap fm;
  fm.omegas.resize(n_omega);
  fm.map.setZero(n_omega, n_tip);
  const double w_lo = es.energies.minCoeff() - pad_gammas * gamma;
  const double w_hi = es.energies.maxCoeff() + pad_gammas * gamma;
  const double dw = (w_hi - w_lo) / (n_omega - 1);
  for (int k = 0; k < n_omega; ++k) {
    const double w = w_lo + k * dw;
    fm.omegas[k] = w;
    for (int l = 0; l < n; ++l) {
      const double dwl = w - es.energies[l];
      const double lorentz = gamma / M_PI / (dwl * dwl + gamma * gamma);
      fm.map.row(k) += lorentz * amp.col(l).transpose();
    }
  }
  return fm;
}

}  // namespace excirec
