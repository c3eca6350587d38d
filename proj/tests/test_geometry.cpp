#include <cmath>

#include <doctest.h>

#include "borsem/geometry.hpp"

using namespace borsem;

TEST_CASE("line edges have exact length, midpoint, and rotated normal") {
  const Eigen::Vector2d p0(0.0, -1.0);
  const Eigen::Vector2d p1(3.0, 3.0);
  const GeneratrixEdge e = GeneratrixEdge::line(p0, p1);
  CHECK(e.length() == doctest::Approx(5.0).epsilon(1e-14));
  CHECK((e.point(0.5) - Eigen::Vector2d(1.5, 1.0)).norm() < 1e-14);
  const Eigen::Vector2d t = e.tangent(0.3);
  CHECK(t.norm() == doctest::Approx(1.0).epsilon(1e-14));
  const Eigen::Vector2d n = e.normal(0.3);
  CHECK(n.dot(t) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(n.x() == doctest::Approx(t.y()).epsilon(1e-14));
  CHECK(n.y() == doctest::Approx(-t.x()).epsilon(1e-14));
}

TEST_CASE("arc edges stay on their circle and parametrize by arc length") {
  const Eigen::Vector2d c(1.0, 2.0);
  const Real r = 0.75;
  const GeneratrixEdge e = GeneratrixEdge::arc(c, r, -kPi / 3.0, kPi / 2.0);
  CHECK(e.length() == doctest::Approx(r * kPi / 2.0).epsilon(1e-14));
  for (Real u : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    CHECK((e.point(u) - c).norm() == doctest::Approx(r).epsilon(1e-13));
    // uniform-in-arc-length: angle advances linearly with u
    const Eigen::Vector2d d = e.point(u) - c;
    const Real angle = std::atan2(d.y(), d.x());
    CHECK(angle == doctest::Approx(-kPi / 3.0 + u * kPi / 2.0).epsilon(1e-12));
    CHECK(e.tangent(u).norm() == doctest::Approx(1.0).epsilon(1e-13));
  }
  CHECK_THROWS_AS(GeneratrixEdge::arc(c, 0.0, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(GeneratrixEdge::arc(c, 1.0, 0.0, 0.0), ValidationError);
}

TEST_CASE("geometry construction rejects malformed generatrices") {
  const Eigen::Vector2d p0(0.0, 0.0);
  const Eigen::Vector2d p1(1.0, 0.0);
  const Eigen::Vector2d p2(1.0, 1.0);
  CHECK_THROWS_AS(BorGeometry::from_edges({}), ValidationError);
  // gap between consecutive edges
  CHECK_THROWS_AS(BorGeometry::from_edges({GeneratrixEdge::line(p0, p1),
                                           GeneratrixEdge::line(Eigen::Vector2d(1.0, 0.5), p2)}),
                  ValidationError);
  // negative rho
  CHECK_THROWS_AS(
      BorGeometry::from_edges({GeneratrixEdge::line(Eigen::Vector2d(-0.2, 0.0), p1)}),
      ValidationError);
  // wrong traversal direction (interior on the right)
  CHECK_THROWS_AS(
      BorGeometry::from_edges({GeneratrixEdge::line(Eigen::Vector2d(0.0, 1.0), p2),
                               GeneratrixEdge::line(p2, p1),
                               GeneratrixEdge::line(p1, p0)}),
      ValidationError);
}

TEST_CASE("cone dimensions follow the diameter-to-length ratio") {
  const BorGeometry g = make_cone_from_ratio(1.0, 0.505);
  CHECK(g.a == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.L == doctest::Approx(1.0 / 0.505).epsilon(1e-13));
  CHECK(g.axis_start);
  CHECK(g.axis_end);
  const Real slant = std::sqrt(g.L * g.L + 0.25);
  CHECK(g.length() == doctest::Approx(slant + 0.5).epsilon(1e-13));

  const BorGeometry same = make_cone(1.0, std::atan2(0.5, g.L));
  CHECK(same.L == doctest::Approx(g.L).epsilon(1e-12));
}

TEST_CASE("cylinder closes with both caps") {
  const BorGeometry g = make_cylinder(1.0, 0.5);
  CHECK(g.a == doctest::Approx(1.0));
  CHECK(g.L == doctest::Approx(2.0));
  CHECK(g.axis_start);
  CHECK(g.axis_end);
  CHECK(g.length() == doctest::Approx(0.5 + 2.0 + 0.5).epsilon(1e-14));
}

TEST_CASE("truncated cone respects the fixed flare angle") {
  const BorGeometry g = make_truncated_cone(1.0, 0.749);
  const Real L = 1.0 / 0.749;
  CHECK(g.a == doctest::Approx(1.0));
  CHECK(g.L == doctest::Approx(L).epsilon(1e-13));
  REQUIRE(g.edges.size() == 3);
  const Eigen::Vector2d t = g.edges[1].tangent(0.5);
  // side tilts inward by half the 23 degree full flare
  const Real half_flare = 23.0 * kPi / 360.0;
  CHECK(std::abs(t.x()) == doctest::Approx(std::sin(half_flare)).epsilon(1e-12));
  CHECK(t.y() == doctest::Approx(std::cos(half_flare)).epsilon(1e-12));
  // small end shrinks accordingly
  CHECK(g.edges[2].p0.x() == doctest::Approx(0.5 - L * std::tan(half_flare)).epsilon(1e-12));
  // too slender a frustum pinches off
  CHECK_THROWS_AS(make_truncated_cone(1.0, 0.2), ValidationError);
}

TEST_CASE("sphere generatrix is the semicircle of the stated diameter") {
  const BorGeometry g = make_sphere(2.0);
  CHECK(g.a == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(g.L == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(g.length() == doctest::Approx(kPi).epsilon(1e-13));
  for (const auto& e : g.edges) {
    for (Real u : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      CHECK(e.point(u).norm() == doctest::Approx(1.0).epsilon(1e-13));
      // outward normal points away from the center
      CHECK(e.normal(u).dot(e.point(u)) > 0.9);
    }
  }
}

TEST_CASE("discretization tiles the generatrix without length drift") {
  for (int density : {8, 16, 32}) {
    const BorGeometry g = make_sphere(1.0);
    const BorMesh mesh = discretize(g, density);
    CHECK(mesh.total_length() == doctest::Approx(g.length()).epsilon(1e-12));
    CHECK(mesh.h_max <= g.a / density + 1e-12);
    CHECK(mesh.node_count() == mesh.segment_count() + 1);
    for (const auto& s : mesh.segments) {
      CHECK(s.arc_length >= s.chord_length - 1e-12); // arc at least as long as chord
      CHECK(s.normal.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::hypot(s.cos_alpha, s.sin_alpha) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(discretize(make_sphere(1.0), kMinDensity - 1), ValidationError);
}

TEST_CASE("corners always land on mesh nodes") {
  const BorGeometry g = make_cylinder(1.0, 0.5);
  const BorMesh mesh = discretize(g, 12);
  // the two rim corners of the cylinder
  for (const Eigen::Vector2d corner :
       {Eigen::Vector2d(0.5, -1.0), Eigen::Vector2d(0.5, 1.0)}) {
    bool found = false;
    for (Eigen::Index i = 0; i < mesh.node_count(); ++i) {
      if ((mesh.node(i) - corner).norm() < 1e-12) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("doubling the density never coarsens the mesh") {
  const BorGeometry g = make_truncated_cone(1.0, 0.749);
  const BorMesh coarse = discretize(g, 16);
  const BorMesh fine = discretize(g, 32);
  CHECK(fine.h_max <= coarse.h_max);
  CHECK(fine.segment_count() >= 2 * coarse.segment_count() - 3);
  CHECK(fine.total_length() == doctest::Approx(coarse.total_length()).epsilon(1e-12));
}

TEST_CASE("cylinder side normals point radially outward") {
  const BorMesh mesh = discretize(make_cylinder(1.0, 0.5), 16);
  for (const auto& s : mesh.segments) {
    if (std::abs(s.midpoint.x() - 0.5) < 1e-9) { // on the side wall
      CHECK(s.normal.x() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(s.normal.y() == doctest::Approx(0.0).epsilon(1e-12));
    } else if (s.midpoint.y() > 0.0) { // top cap
      CHECK(s.normal.y() == doctest::Approx(1.0).epsilon(1e-12));
    } else { // bottom cap
      CHECK(s.normal.y() == doctest::Approx(-1.0).epsilon(1e-12));
    }
  }
}
