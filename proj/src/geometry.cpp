#include "excirec/geometry.hpp"

#include <cmath>

namespace excirec {

Vec3 AggregateGeometry::center() const {
  Vec3 c = Vec3::Zero();
  for (const auto& p : positions) c += p;
  return c / static_cast<double>(positions.size());
}

namespace {

Vec3 in_plane(double angle_rad) {
  return Vec3(std::cos(angle_rad), std::sin(angle_rad), 0.0);
}

void assign_dipoles(const GeometryConfig& cfg, AggregateGeometry& g) {
  const int n = g.size();
  if (cfg.pattern == DipolePattern::custom) {
    if (static_cast<int>(cfg.custom_dipoles.size()) != n)
      throw config_error("custom dipole list size does not match site count");
    g.dipoles.reserve(n);
    for (const auto& d : cfg.custom_dipoles) {
      const double norm = d.norm();
      if (norm <= 0.0) throw config_error("custom dipole with zero norm");
      g.dipoles.push_back(d / norm);
    }
    return;
  }
  g.dipoles.resize(n);
  switch (cfg.pattern) {
    case DipolePattern::chain_axis:
      for (auto& d : g.dipoles) d = Vec3(1.0, 0.0, 0.0);
      break;
    case DipolePattern::uniform_angle:
      for (auto& d : g.dipoles) d = in_plane(cfg.phi_deg * M_PI / 180.0);
      break;
    case DipolePattern::alternating_columns: {
      const double theta = cfg.theta_deg * M_PI / 180.0;
      if (cfg.kind == GeometryKind::chain1d) {
        for (int i = 0; i < n; ++i)
          g.dipoles[i] = in_plane(i % 2 == 0 ? theta : -theta);
      } else {
        for (int ix = 0; ix < cfg.nx; ++ix)
          for (int iy = 0; iy < cfg.ny; ++iy)
            g.dipoles[ix * cfg.ny + iy] =
                in_plane(ix % 2 == 0 ? theta : -theta);
      }
      break;
    }
    case DipolePattern::custom:
      break;  // handled above
  }
}

}  // namespace

AggregateGeometry build_geometry(const GeometryConfig& cfg) {
  AggregateGeometry g;
  g.kind = cfg.kind;
  g.mu = cfg.mu;
  if (cfg.mu <= 0.0) throw config_error("dipole magnitude must be positive");

  if (cfg.kind == GeometryKind::chain1d) {
    if (cfg.n < 1) throw config_error("chain needs at least one site");
    if (cfg.spacing <= 0.0) throw config_error("chain spacing must be positive");
    g.positions.reserve(cfg.n);
    for (int i = 0; i < cfg.n; ++i)
      g.positions.emplace_back(i * cfg.spacing, 0.0, 0.0);
  } else {
    if (cfg.nx < 1 || cfg.ny < 1)
      throw config_error("2D array needs nx, ny >= 1");
    if (cfg.spacing_x <= 0.0 || cfg.spacing_y <= 0.0)
      throw config_error("2D spacings must be positive");
    g.positions.reserve(cfg.nx * cfg.ny);
    for (int ix = 0; ix < cfg.nx; ++ix)
      for (int iy = 0; iy < cfg.ny; ++iy)
        g.positions.emplace_back(ix * cfg.spacing_x, iy * cfg.spacing_y, 0.0);
  }

  GeometryConfig effective = cfg;
  if (cfg.pattern == DipolePattern::chain_axis &&
      cfg.kind == GeometryKind::array2d)
    effective.pattern = DipolePattern::alternating_columns;
  assign_dipoles(effective, g);
  return g;
}

double coupling(const AggregateGeometry& g, int m, int n) {
  if (m == n) throw invalid_input("coupling requires two distinct sites");
  const int size = g.size();
  if (m < 0 || n < 0 || m >= size || n >= size)
    throw invalid_input("coupling site index out of range");
  const Vec3 r = g.positions[n] - g.positions[m];
  const double dist = r.norm();
  const Vec3 u = r / dist;
  const double mu2 = g.mu * g.mu;
  return mu2 *
         (g.dipoles[m].dot(g.dipoles[n]) -
          3.0 * g.dipoles[m].dot(u) * g.dipoles[n].dot(u)) /
         (dist * dist * dist);
}

double max_abs_coupling(const AggregateGeometry& g) {
  const int n = g.size();
  double best = 0.0;
  for (int m = 0; m < n; ++m)
    for (int k = m + 1; k < n; ++k)
      best = std::max(best, std::abs(coupling(g, m, k)));
  return best;
}

}  // namespace excirec
