#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>
#include <vector>

namespace covctrl {

using Vec3 = Eigen::Vector3d;

/// Oriented plane { x : normal . x = offset } with unit normal.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

struct Aabb {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  static Aabb of_point(const Vec3& p) { return {p, p}; }
  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Aabb inflated(double pad) const {
    return {lo.array() - pad, hi.array() + pad};
  }
  bool overlaps(const Aabb& o) const {
    return (lo.array() <= o.hi.array()).all() && (hi.array() >= o.lo.array()).all();
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return (hi - lo).norm(); }
};

/// One triangle of a surface mesh. Index is 1-based and assigned by the mesh.
struct Facet {
  std::array<Vec3, 3> vertices;
  Vec3 centroid = Vec3::Zero();
  Plane plane;
  int index = 0;
  Aabb bounds;
};

class Mesh {
 public:
  Mesh() = default;

  /// Builds a mesh from raw triangles. Facet planes are oriented by the
  /// right-hand rule over the given winding; indices are assigned 1..|T|.
  /// Throws DegenerateFacet on near-zero-area triangles and MeshError when
  /// two facets share all three vertices.
  static Mesh from_triangles(const std::vector<std::array<Vec3, 3>>& triangles);

  int facet_count() const { return static_cast<int>(facets_.size()); }
  const std::vector<Facet>& facets() const { return facets_; }
  const Facet& facet(int index_1based) const { return facets_.at(index_1based - 1); }
  bool empty() const { return facets_.empty(); }
  const Aabb& bounds() const { return bounds_; }

 private:
  std::vector<Facet> facets_;
  Aabb bounds_;
};

/// Directed line segment from a point on the FOV base to the optical center,
/// parameterized as origin + d * (endpoint - origin), d in [0, 1].
struct Ray {
  Vec3 origin;
  Vec3 endpoint;

  Vec3 point_at(double d) const { return origin + d * (endpoint - origin); }
};

/// Convex polytope in halfspace form: { x : normal_i . x <= offset_i }.
struct ConvexHullH {
  std::vector<Plane> faces;

  int face_count() const { return static_cast<int>(faces.size()); }
};

enum class RayPlaneOutcome { kHit, kParallel, kOutOfSegment };

struct RayPlaneResult {
  RayPlaneOutcome outcome;
  double d = 0.0;  // valid only for kHit / kOutOfSegment
};

/// Plane through three vertices, unit normal oriented toward the reference
/// point (normal . reference > offset). Throws DegenerateFacet when the
/// triangle area falls below 1e-9.
Plane plane_from_triangle(const std::array<Vec3, 3>& vertices,
                          const Vec3& reference_outside_point);

/// Intersection parameter of a ray with a plane. The denominator is treated
/// as zero below 1e-9 * |endpoint - origin| (grazing rays count as parallel).
RayPlaneResult ray_plane_param(const Ray& ray, const Plane& plane);

/// Barycentric membership test for a point already lying on the facet plane.
/// Throws OffPlane when the point is farther than tol from the plane.
bool point_in_triangle(const Vec3& p, const Facet& facet, double tol = 1e-7);

/// Index of the facet the ray crosses last (largest d with the intersection
/// point inside the triangle), or nullopt when the ray misses the mesh.
/// Ties on d within 1e-9 resolve to the lower facet index.
std::optional<int> ray_mesh_last_hit(const Ray& ray, const Mesh& mesh);

/// Halfspace form of a camera FOV pyramid. Vertex layout: four base corners
/// in cyclic order then the apex. Returns exactly 5 outward-oriented faces.
ConvexHullH hull_from_fov(const std::array<Vec3, 5>& vertices);

bool point_in_hull(const Vec3& p, const ConvexHullH& hull, double tol = 0.0);

/// 6-face axis-aligned box in halfspace form.
ConvexHullH box_hull(const Aabb& box);

/// Regular dodecahedron inscribed in the sphere (center, radius), canonical
/// orientation with two horizontal faces. 12 outward halfspaces.
ConvexHullH dodecahedron_hull(const Vec3& center, double radius);

/// Face-plane distance over vertex distance for a regular dodecahedron.
double dodecahedron_inradius_ratio();

/// Triangulated heightfield z = A exp(-((x-xo)^2/2sx2 + (y-yo)^2/2sy2)) over
/// [extent.lo, extent.hi] in x-y, sampled on a grid_nx x grid_ny vertex grid,
/// quads split along a fixed diagonal, planes oriented upward.
Mesh gaussian_heightfield_mesh(double amplitude, double x0, double y0,
                               double sigma2_x, double sigma2_y,
                               int grid_nx, int grid_ny,
                               const Eigen::AlignedBox2d& extent);

}  // namespace covctrl
