#pragma once

#include <vector>

#include <Eigen/Dense>

#include "borsem/core.hpp"

namespace borsem {

/// One piece of a generatrix in the (rho, z) half-plane: a straight segment
/// or a circular arc. Arcs keep exact lengths and normals for curved bodies.
struct GeneratrixEdge {
  enum class Kind { line, arc };

  Kind kind = Kind::line;
  Eigen::Vector2d p0{0.0, 0.0};
  Eigen::Vector2d p1{0.0, 0.0};
  Eigen::Vector2d center{0.0, 0.0};
  Real radius = 0.0;
  Real angle0 = 0.0;
  Real sweep = 0.0;

  static GeneratrixEdge line(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1);
  static GeneratrixEdge arc(const Eigen::Vector2d& center, Real radius, Real angle0, Real sweep);

  [[nodiscard]] Real length() const;
  /// Point at normalized parameter u in [0, 1], uniform in arc length.
  [[nodiscard]] Eigen::Vector2d point(Real u) const;
  /// Unit tangent along increasing u.
  [[nodiscard]] Eigen::Vector2d tangent(Real u) const;
  /// Outward unit normal, (t_z, -t_rho) for the canonical traversal.
  [[nodiscard]] Eigen::Vector2d normal(Real u) const;
  [[nodiscard]] Real max_rho() const;
  [[nodiscard]] Real min_z() const;
  [[nodiscard]] Real max_z() const;
};

/// Body of revolution described by its generatrix, traversed from the axis
/// point with smallest z to the axis point with largest z, interior on the
/// left (outward normals point away from the body).
struct BorGeometry {
  std::vector<GeneratrixEdge> edges;
  std::vector<Eigen::Vector2d> generatrix;
  Real a = 0.0;
  Real L = 0.0;
  bool axis_start = false;
  bool axis_end = false;

  static BorGeometry from_edges(std::vector<GeneratrixEdge> edges);

  [[nodiscard]] Real length() const;
};

/// Cone with apex on the axis, flat base cap, base radius a/2,
/// L = (a/2)/tan(half_flare).
[[nodiscard]] BorGeometry make_cone(Real a, Real half_flare);

/// Cone constructed from the diameter-to-length ratio a/L.
[[nodiscard]] BorGeometry make_cone_from_ratio(Real a, Real ratio_aL);

/// Frustum with large-end diameter a, length L = a/ratio_aL, side slope set
/// by a fixed 23 degree full flare angle, both ends capped.
[[nodiscard]] BorGeometry make_truncated_cone(Real a, Real ratio_aL);

/// Closed right circular cylinder, diameter a, length L = a/ratio_aL.
[[nodiscard]] BorGeometry make_cylinder(Real a, Real ratio_aL);

/// Sphere of diameter a (semicircular generatrix), analytic oracle body.
[[nodiscard]] BorGeometry make_sphere(Real a);

/// Generatrix ring segment. Endpoints lie on the true curve; arc_length is
/// exact, so segment lengths tile the generatrix without drift.
struct MeshSegment {
  Eigen::Vector2d p0{0.0, 0.0};
  Eigen::Vector2d p1{0.0, 0.0};
  Real arc_length = 0.0;
  Eigen::Vector2d midpoint{0.0, 0.0};
  Eigen::Vector2d normal{0.0, 0.0};
  Real cos_alpha = 0.0;
  Real sin_alpha = 0.0;
  Real chord_length = 0.0;
};

struct BorMesh {
  std::vector<MeshSegment> segments;
  Real h_max = 0.0;
  Real a = 0.0;
  Real L = 0.0;
  bool axis_start = false;
  bool axis_end = false;

  [[nodiscard]] Eigen::Index segment_count() const { return static_cast<Eigen::Index>(segments.size()); }
  [[nodiscard]] Eigen::Index node_count() const { return segment_count() + 1; }
  [[nodiscard]] Eigen::Vector2d node(Eigen::Index i) const;
  [[nodiscard]] Real total_length() const;
  [[nodiscard]] Real min_segment_length() const;
};

inline constexpr int kMinDensity = 8;

/// Splits every generatrix edge into segments no longer than a/segments_per_a.
/// Corners (edge junctions) always land on segment endpoints.
[[nodiscard]] BorMesh discretize(const BorGeometry& g, int segments_per_a);

} // namespace borsem
