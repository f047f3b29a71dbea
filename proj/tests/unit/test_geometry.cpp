#include <cmath>

#include "doctest.h"
#include "excirec/geometry.hpp"

using namespace excirec;

namespace {

AggregateGeometry two_sites(const Vec3& d0, const Vec3& d1, double separation) {
  GeometryConfig cfg;
  cfg.kind = GeometryKind::chain1d;
  cfg.n = 2;
  cfg.spacing = separation;
  cfg.pattern = DipolePattern::custom;
  cfg.custom_dipoles = {d0, d1};
  return build_geometry(cfg);
}

}  // namespace

TEST_CASE("chain positions sit on the x axis") {
  GeometryConfig cfg;
  cfg.kind = GeometryKind::chain1d;
  cfg.n = 3;
  const auto g = build_geometry(cfg);
  REQUIRE(g.size() == 3);
  CHECK(g.positions[0] == Vec3(0, 0, 0));
  CHECK(g.positions[1] == Vec3(1, 0, 0));
  CHECK(g.positions[2] == Vec3(2, 0, 0));
  for (const auto& d : g.dipoles) CHECK(d == Vec3(1, 0, 0));
}

TEST_CASE("default chain of 20 spans 19 spacings") {
  GeometryConfig cfg;
  cfg.kind = GeometryKind::chain1d;
  cfg.n = 20;
  const auto g = build_geometry(cfg);
  REQUIRE(g.size() == 20);
  CHECK((g.positions.back() - g.positions.front()).norm() ==
        doctest::Approx(19.0));
  for (const auto& p : g.positions) {
    CHECK(p.y() == 0.0);
    CHECK(p.z() == 0.0);
  }
}

TEST_CASE("10x5 array places 50 sites with alternating column dipoles") {
  GeometryConfig cfg;
  cfg.kind = GeometryKind::array2d;
  cfg.nx = 10;
  cfg.ny = 5;
  const auto g = build_geometry(cfg);
  REQUIRE(g.size() == 50);
  // x-major ordering: index = ix * ny + iy
  CHECK(g.positions[0] == Vec3(0, 0, 0));
  CHECK(g.positions[4] == Vec3(0, 4, 0));
  CHECK(g.positions[5] == Vec3(1, 0, 0));
  CHECK(g.positions[49] == Vec3(9, 4, 0));
  const double c = std::cos(M_PI / 4.0), s = std::sin(M_PI / 4.0);
  CHECK((g.dipoles[0] - Vec3(c, s, 0)).norm() < 1e-12);
  CHECK((g.dipoles[5] - Vec3(c, -s, 0)).norm() < 1e-12);
  CHECK((g.dipoles[10] - Vec3(c, s, 0)).norm() < 1e-12);
  for (const auto& d : g.dipoles) CHECK(std::abs(d.norm() - 1.0) < 1e-12);
}

TEST_CASE("invalid geometry configs are rejected") {
  GeometryConfig cfg;
  cfg.kind = GeometryKind::chain1d;
  cfg.n = 0;
  CHECK_THROWS_AS(build_geometry(cfg), config_error);
  cfg.n = 3;
  cfg.spacing = 0.0;
  CHECK_THROWS_AS(build_geometry(cfg), config_error);
  cfg.spacing = -1.0;
  CHECK_THROWS_AS(build_geometry(cfg), config_error);
  GeometryConfig cfg2;
  cfg2.kind = GeometryKind::array2d;
  cfg2.nx = 0;
  CHECK_THROWS_AS(build_geometry(cfg2), config_error);
}

TEST_CASE("coupling reproduces the canonical dipole-dipole values") {
  // Parallel dipoles perpendicular to the separation axis, R = 1.
  const auto side = two_sites(Vec3(0, 1, 0), Vec3(0, 1, 0), 1.0);
  CHECK(coupling(side, 0, 1) == doctest::Approx(1.0));
  // Head-to-tail along the separation axis, R = 1.
  const auto head = two_sites(Vec3(1, 0, 0), Vec3(1, 0, 0), 1.0);
  CHECK(coupling(head, 0, 1) == doctest::Approx(-2.0));
  // Perpendicular parallel pair at R = 2: 1/R^3 scaling.
  const auto far = two_sites(Vec3(0, 1, 0), Vec3(0, 1, 0), 2.0);
  CHECK(coupling(far, 0, 1) == doctest::Approx(1.0 / 8.0));
}

TEST_CASE("coupling is symmetric and rejects m == n") {
  GeometryConfig cfg;
  cfg.kind = GeometryKind::chain1d;
  cfg.n = 5;
  const auto g = build_geometry(cfg);
  for (int m = 0; m < 5; ++m)
    for (int n = m + 1; n < 5; ++n) CHECK(coupling(g, m, n) == coupling(g, n, m));
  CHECK_THROWS_AS(coupling(g, 2, 2), invalid_input);
  CHECK_THROWS_AS(coupling(g, 0, 7), invalid_input);
}

TEST_CASE("dipole magnitude enters quadratically") {
  auto g = two_sites(Vec3(0, 1, 0), Vec3(0, 1, 0), 1.0);
  g.mu = 3.0;
  CHECK(coupling(g, 0, 1) == doctest::Approx(9.0));
}

TEST_CASE("max_abs_coupling picks the nearest-neighbor pair on a chain") {
  GeometryConfig cfg;
  cfg.kind = GeometryKind::chain1d;
  cfg.n = 20;
  const auto g = build_geometry(cfg);
  CHECK(max_abs_coupling(g) == doctest::Approx(2.0));
}
