#ifndef EXCIREC_GEOMETRY_HPP
#define EXCIREC_GEOMETRY_HPP

#include <vector>

#include "excirec/common.hpp"

namespace excirec {

// Reduced units throughout the ideal model: lattice spacing a = 1,
// transition dipole magnitude mu = 1, 1/(4 pi eps0) = 1. Energies are then
// in units of mu^2 / (4 pi eps0 a^3).

enum class GeometryKind { chain1d, array2d };

enum class DipolePattern {
  chain_axis,           // all dipoles along +x (1D default)
  uniform_angle,        // all dipoles in-plane at angle phi from +x
  alternating_columns,  // in-plane, +theta / -theta alternating per column
  custom,               // explicit per-site vectors
};

struct GeometryConfig {
  GeometryKind kind = GeometryKind::chain1d;
  int n = 20;            // chain length
  double spacing = 1.0;  // chain lattice constant (units of a)
  int nx = 10, ny = 5;   // 2D grid
  double spacing_x = 1.0, spacing_y = 1.0;
  DipolePattern pattern = DipolePattern::chain_axis;
  double theta_deg = 45.0;  // alternating_columns
  double phi_deg = 0.0;     // uniform_angle
  std::vector<Vec3> custom_dipoles;
  double mu = 1.0;
};

// Monomer positions (x-y plane, z = 0) and unit transition-dipole
// orientations. 2D sites are ordered x-major: index = ix * ny + iy.
struct AggregateGeometry {
  std::vector<Vec3> positions;
  std::vector<Vec3> dipoles;  // unit norm
  double mu = 1.0;
  GeometryKind kind = GeometryKind::chain1d;

  int size() const { return static_cast<int>(positions.size()); }
  // Geometric center of the site positions.
  Vec3 center() const;
};

AggregateGeometry build_geometry(const GeometryConfig& config);

// Point-dipole interaction between sites m and n:
//   V = mu^2 [ u_m.u_n - 3 (u_m.r)(u_n.r) ] / R^3,  r = unit separation.
double coupling(const AggregateGeometry& geometry, int m, int n);

// max_{m != n} |V_mn|; sets the scale of the disorder distributions.
double max_abs_coupling(const AggregateGeometry& geometry);

}  // namespace excirec

#endif
