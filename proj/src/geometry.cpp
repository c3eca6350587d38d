#include "borsem/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace borsem {

namespace {

constexpr Real kGeomTol = 1e-12;

// z extreme of an arc: endpoint values plus interior stationary points at
// theta = +-pi/2 if swept through.
bool arc_covers(Real angle0, Real sweep, Real theta) {
  const Real lo = std::min(angle0, angle0 + sweep);
  const Real hi = std::max(angle0, angle0 + sweep);
  for (int k = -2; k <= 2; ++k) {
    const Real t = theta + 2.0 * kPi * k;
    if (t >= lo - kGeomTol && t <= hi + kGeomTol) return true;
  }
  return false;
}

bool segments_intersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
  const auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
    return u.x() * v.y() - u.y() * v.x();
  };
  const Real d1 = cross(b - a, c - a);
  const Real d2 = cross(b - a, d - a);
  const Real d3 = cross(d - c, a - c);
  const Real d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

} // namespace

GeneratrixEdge GeneratrixEdge::line(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1) {
  GeneratrixEdge e;
  e.kind = Kind::line;
  e.p0 = p0;
  e.p1 = p1;
  return e;
}

GeneratrixEdge GeneratrixEdge::arc(const Eigen::Vector2d& center, Real radius, Real angle0, Real sweep) {
  require(radius > 0.0, "GeneratrixEdge: arc radius must be positive");
  require(sweep != 0.0, "GeneratrixEdge: arc sweep must be nonzero");
  GeneratrixEdge e;
  e.kind = Kind::arc;
  e.center = center;
  e.radius = radius;
  e.angle0 = angle0;
  e.sweep = sweep;
  e.p0 = e.point(0.0);
  e.p1 = e.point(1.0);
  return e;
}

Real GeneratrixEdge::length() const {
  if (kind == Kind::line) return (p1 - p0).norm();
  return radius * std::abs(sweep);
}

Eigen::Vector2d GeneratrixEdge::point(Real u) const {
  if (kind == Kind::line) return p0 + u * (p1 - p0);
  const Real th = angle0 + u * sweep;
  return center + radius * Eigen::Vector2d(std::cos(th), std::sin(th));
}

Eigen::Vector2d GeneratrixEdge::tangent(Real u) const {
  if (kind == Kind::line) return (p1 - p0).normalized();
  const Real th = angle0 + u * sweep;
  const Real sgn = sweep > 0.0 ? 1.0 : -1.0;
  return sgn * Eigen::Vector2d(-std::sin(th), std::cos(th));
}

Eigen::Vector2d GeneratrixEdge::normal(Real u) const {
  const Eigen::Vector2d t = tangent(u);
  return {t.y(), -t.x()};
}

Real GeneratrixEdge::max_rho() const {
  if (kind == Kind::line) return std::max(p0.x(), p1.x());
  Real m = std::max(p0.x(), p1.x());
  if (arc_covers(angle0, sweep, 0.0)) m = std::max(m, center.x() + radius);
  return m;
}

Real GeneratrixEdge::min_z() const {
  if (kind == Kind::line) return std::min(p0.y(), p1.y());
  Real m = std::min(p0.y(), p1.y());
  if (arc_covers(angle0, sweep, -kPi / 2.0)) m = std::min(m, center.y() - radius);
  return m;
}

Real GeneratrixEdge::max_z() const {
  if (kind == Kind::line) return std::max(p0.y(), p1.y());
  Real m = std::max(p0.y(), p1.y());
  if (arc_covers(angle0, sweep, kPi / 2.0)) m = std::max(m, center.y() + radius);
  return m;
}

BorGeometry BorGeometry::from_edges(std::vector<GeneratrixEdge> edges) {
  require(!edges.empty(), "BorGeometry: need at least one edge");

  Real max_rho = 0.0;
  Real z_min = edges.front().min_z();
  Real z_max = edges.front().max_z();
  for (size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    require(e.length() > kGeomTol, "BorGeometry: degenerate edge");
    require(e.p0.x() >= -kGeomTol && e.p1.x() >= -kGeomTol, "BorGeometry: rho must be non-negative");
    if (i + 1 < edges.size()) {
      require((e.p1 - edges[i + 1].p0).norm() <= kGeomTol, "BorGeometry: edges must be contiguous");
    }
    max_rho = std::max(max_rho, e.max_rho());
    z_min = std::min(z_min, e.min_z());
    z_max = std::max(z_max, e.max_z());
  }
  require(max_rho > 0.0, "BorGeometry: generatrix collapsed onto the axis");
  require(z_max - z_min > kGeomTol, "BorGeometry: longitudinal extent must be positive");

  // Sample every edge into a polyline for the simplicity and orientation
  // checks (exact for lines, tight for our shallow arcs).
  std::vector<Eigen::Vector2d> poly;
  for (const auto& e : edges) {
    const int n = e.kind == GeneratrixEdge::Kind::line ? 1 : 32;
    for (int j = 0; j < n; ++j) poly.push_back(e.point(static_cast<Real>(j) / n));
  }
  poly.push_back(edges.back().p1);
  for (size_t i = 0; i + 1 < poly.size(); ++i) {
    require((poly[i + 1] - poly[i]).norm() > kGeomTol, "BorGeometry: consecutive points must be distinct");
    for (size_t j = i + 2; j + 1 < poly.size(); ++j) {
      if (i == 0 && j + 2 == poly.size()) continue;
      require(!segments_intersect(poly[i], poly[i + 1], poly[j], poly[j + 1]),
              "BorGeometry: generatrix must not self-intersect");
    }
  }

  // Closing the loop along the axis must leave the interior on the left
  // (positive signed area), which makes the (t_z, -t_rho) normals outward.
  Real area2 = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    area2 += p.x() * q.y() - q.x() * p.y();
  }
  require(area2 > 0.0, "BorGeometry: traverse the generatrix from low z to high z, interior on the left");

  BorGeometry g;
  g.edges = std::move(edges);
  for (const auto& e : g.edges) g.generatrix.push_back(e.p0);
  g.generatrix.push_back(g.edges.back().p1);
  g.a = 2.0 * max_rho;
  g.L = z_max - z_min;
  g.axis_start = std::abs(g.edges.front().p0.x()) <= kGeomTol;
  g.axis_end = std::abs(g.edges.back().p1.x()) <= kGeomTol;
  return g;
}

Real BorGeometry::length() const {
  Real s = 0.0;
  for (const auto& e : edges) s += e.length();
  return s;
}

BorGeometry make_cone(Real a, Real half_flare) {
  require(a > 0.0, "make_cone: a must be positive");
  require(half_flare > 0.0 && half_flare < kPi / 2.0, "make_cone: half_flare must lie in (0, pi/2)");
  const Real r = a / 2.0;
  const Real L = r / std::tan(half_flare);
  const Eigen::Vector2d base_center(0.0, -L / 2.0);
  const Eigen::Vector2d rim(r, -L / 2.0);
  const Eigen::Vector2d apex(0.0, L / 2.0);
  return BorGeometry::from_edges({GeneratrixEdge::line(base_center, rim), GeneratrixEdge::line(rim, apex)});
}

BorGeometry make_cone_from_ratio(Real a, Real ratio_aL) {
  require(a > 0.0, "make_cone: a must be positive");
  require(ratio_aL > 0.0, "make_cone: ratio a/L must be positive");
  const Real L = a / ratio_aL;
  return make_cone(a, std::atan2(a / 2.0, L));
}

BorGeometry make_truncated_cone(Real a, Real ratio_aL) {
  require(a > 0.0, "make_truncated_cone: a must be positive");
  require(ratio_aL > 0.0, "make_truncated_cone: ratio a/L must be positive");
  const Real full_flare = 23.0 * kPi / 180.0;
  const Real L = a / ratio_aL;
  const Real r_small = a / 2.0 - L * std::tan(full_flare / 2.0);
  require(r_small > 0.0, "make_truncated_cone: flare and ratio give a non-positive small-end radius");
  const Eigen::Vector2d p0(0.0, -L / 2.0);
  const Eigen::Vector2d p1(a / 2.0, -L / 2.0);
  const Eigen::Vector2d p2(r_small, L / 2.0);
  const Eigen::Vector2d p3(0.0, L / 2.0);
  return BorGeometry::from_edges(
      {GeneratrixEdge::line(p0, p1), GeneratrixEdge::line(p1, p2), GeneratrixEdge::line(p2, p3)});
}

BorGeometry make_cylinder(Real a, Real ratio_aL) {
  require(a > 0.0, "make_cylinder: a must be positive");
  require(ratio_aL > 0.0, "make_cylinder: ratio a/L must be positive");
  const Real L = a / ratio_aL;
  const Real r = a / 2.0;
  const Eigen::Vector2d p0(0.0, -L / 2.0);
  const Eigen::Vector2d p1(r, -L / 2.0);
  const Eigen::Vector2d p2(r, L / 2.0);
  const Eigen::Vector2d p3(0.0, L / 2.0);
  return BorGeometry::from_edges(
      {GeneratrixEdge::line(p0, p1), GeneratrixEdge::line(p1, p2), GeneratrixEdge::line(p2, p3)});
}

BorGeometry make_sphere(Real a) {
  require(a > 0.0, "make_sphere: a must be positive");
  const Real r = a / 2.0;
  const Eigen::Vector2d c(0.0, 0.0);
  return BorGeometry::from_edges({GeneratrixEdge::arc(c, r, -kPi / 2.0, kPi / 2.0),
                                  GeneratrixEdge::arc(c, r, 0.0, kPi / 2.0)});
}

Eigen::Vector2d BorMesh::node(Eigen::Index i) const {
  if (i < segment_count()) return segments[static_cast<size_t>(i)].p0;
  return segments.back().p1;
}

Real BorMesh::total_length() const {
  Real s = 0.0;
  for (const auto& seg : segments) s += seg.arc_length;
  return s;
}

Real BorMesh::min_segment_length() const {
  Real s = segments.front().arc_length;
  for (const auto& seg : segments) s = std::min(s, seg.arc_length);
  return s;
}

BorMesh discretize(const BorGeometry& g, int segments_per_a) {
  require(segments_per_a >= kMinDensity, "discretize: density below minimum of 8 segments per a");
  require(!g.edges.empty(), "discretize: empty geometry");

  const Real h_target = g.a / static_cast<Real>(segments_per_a);
  BorMesh mesh;
  mesh.a = g.a;
  mesh.L = g.L;
  mesh.axis_start = g.axis_start;
  mesh.axis_end = g.axis_end;

  for (const auto& e : g.edges) {
    const int n = std::max(1, static_cast<int>(std::ceil(e.length() / h_target - kGeomTol)));
    for (int j = 0; j < n; ++j) {
      const Real u0 = static_cast<Real>(j) / n;
      const Real u1 = static_cast<Real>(j + 1) / n;
      MeshSegment s;
      s.p0 = e.point(u0);
      s.p1 = e.point(u1);
      s.arc_length = e.length() / n;
      s.midpoint = e.point(0.5 * (u0 + u1));
      s.normal = e.normal(0.5 * (u0 + u1));
      const Eigen::Vector2d chord = s.p1 - s.p0;
      s.chord_length = chord.norm();
      s.cos_alpha = chord.x() / s.chord_length;
      s.sin_alpha = chord.y() / s.chord_length;
      mesh.segments.push_back(s);
      mesh.h_max = std::max(mesh.h_max, s.arc_length);
    }
  }
  return mesh;
}

} // namespace borsem
