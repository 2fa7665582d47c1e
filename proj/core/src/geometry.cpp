#include "covctrl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "covctrl/errors.hpp"

namespace covctrl {

namespace {

constexpr double kMinTriangleArea = 1e-9;
constexpr double kLastHitTieTol = 1e-9;

std::array<double, 3> sorted_key(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

Plane plane_from_triangle(const std::array<Vec3, 3>& vertices,
                          const Vec3& reference_outside_point) {
  const Vec3 e0 = vertices[1] - vertices[0];
  const Vec3 e1 = vertices[2] - vertices[0];
  const Vec3 cross = e0.cross(e1);
  const double area = 0.5 * cross.norm();
  if (!(area > kMinTriangleArea)) {
    throw DegenerateFacet("collinear triangle vertices (area " +
                          std::to_string(area) + " m^2)");
  }
  Plane plane;
  plane.normal = cross.normalized();
  plane.offset = plane.normal.dot(vertices[0]);
  if (plane.signed_distance(reference_outside_point) < 0.0) {
    plane.normal = -plane.normal;
    plane.offset = -plane.offset;
  }
  return plane;
}

RayPlaneResult ray_plane_param(const Ray& ray, const Plane& plane) {
  const Vec3 dir = ray.endpoint - ray.origin;
  const double denom = plane.normal.dot(dir);
  const double eps_par = 1e-9 * dir.norm();
  if (std::abs(denom) <= eps_par) {
    // Includes the degenerate in-plane ray (numerator also zero).
    return {RayPlaneOutcome::kParallel, 0.0};
  }
  const double d = (plane.offset - plane.normal.dot(ray.origin)) / denom;
  if (d >= 0.0 && d <= 1.0) return {RayPlaneOutcome::kHit, d};
  return {RayPlaneOutcome::kOutOfSegment, d};
}

bool point_in_triangle(const Vec3& p, const Facet& facet, double tol) {
  const double dist = facet.plane.signed_distance(p);
  if (std::abs(dist) > tol) {
    throw OffPlane("point is " + std::to_string(dist) + " m off the facet plane");
  }
  const Vec3 v0 = facet.vertices[1] - facet.vertices[0];
  const Vec3 v1 = facet.vertices[2] - facet.vertices[0];
  const Vec3 v2 = p - facet.vertices[0];
  const double d00 = v0.dot(v0);
  const double d01 = v0.dot(v1);
  const double d11 = v1.dot(v1);
  const double d20 = v2.dot(v0);
  const double d21 = v2.dot(v1);
  const double denom = d00 * d11 - d01 * d01;
  const double v = (d11 * d20 - d01 * d21) / denom;
  const double w = (d00 * d21 - d01 * d20) / denom;
  const double u = 1.0 - v - w;
  return u >= -tol && v >= -tol && w >= -tol;
}

std::optional<int> ray_mesh_last_hit(const Ray& ray, const Mesh& mesh) {
  Aabb ray_box = Aabb::of_point(ray.origin);
  ray_box.expand(ray.endpoint);
  const Aabb padded = ray_box.inflated(1e-6);

  std::optional<int> best;
  double best_d = -1.0;
  for (const Facet& facet : mesh.facets()) {
    if (!padded.overlaps(facet.bounds)) continue;
    const RayPlaneResult r = ray_plane_param(ray, facet.plane);
    if (r.outcome != RayPlaneOutcome::kHit) continue;
    if (!point_in_triangle(ray.point_at(r.d), facet)) continue;
    if (!best || r.d > best_d + kLastHitTieTol) {
      best = facet.index;
      best_d = r.d;
    }
    // Ties within tolerance keep the lower index, which is the one already
    // stored (facets are scanned in index order).
  }
  return best;
}

Mesh Mesh::from_triangles(const std::vector<std::array<Vec3, 3>>& triangles) {
  Mesh mesh;
  std::map<std::array<std::array<double, 3>, 3>, int> seen;
  mesh.facets_.reserve(triangles.size());
  for (const auto& tri : triangles) {
    Facet facet;
    facet.vertices = tri;
    facet.centroid = (tri[0] + tri[1] + tri[2]) / 3.0;
    // Orient by winding: reference point just off the front side.
    const Vec3 winding_normal =
        (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized();
    facet.plane = plane_from_triangle(tri, facet.centroid + winding_normal);
    facet.index = static_cast<int>(mesh.facets_.size()) + 1;
    facet.bounds = Aabb::of_point(tri[0]);
    facet.bounds.expand(tri[1]);
    facet.bounds.expand(tri[2]);

    std::array<std::array<double, 3>, 3> key = {sorted_key(tri[0]), sorted_key(tri[1]),
                                                sorted_key(tri[2])};
    std::sort(key.begin(), key.end());
    if (!seen.emplace(key, facet.index).second) {
      throw MeshError("duplicate facet (all three vertices shared) at index " +
                      std::to_string(facet.index));
    }

    if (mesh.facets_.empty()) {
      mesh.bounds_ = facet.bounds;
    } else {
      mesh.bounds_.expand(tri[0]);
      mesh.bounds_.expand(tri[1]);
      mesh.bounds_.expand(tri[2]);
    }
    mesh.facets_.push_back(std::move(facet));
  }
  return mesh;
}

namespace {

// Builds the outward face plane of a hull given three face points and a
// strictly interior reference point.
Plane hull_face(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& interior) {
  const Vec3 cross = (b - a).cross(c - a);
  if (cross.norm() < 1e-12) throw DegenerateHull("collinear hull face points");
  Plane face;
  face.normal = cross.normalized();
  face.offset = face.normal.dot(a);
  const double side = face.signed_distance(interior);
  if (std::abs(side) < 1e-9) throw DegenerateHull("interior point on face plane");
  if (side > 0.0) {
    face.normal = -face.normal;
    face.offset = -face.offset;
  }
  return face;
}

}  // namespace

ConvexHullH hull_from_fov(const std::array<Vec3, 5>& vertices) {
  const Vec3& apex = vertices[4];
  const Vec3 base_centroid =
      0.25 * (vertices[0] + vertices[1] + vertices[2] + vertices[3]);
  const Vec3 axis = apex - base_centroid;
  if (axis.norm() < 1e-9) throw DegenerateHull("apex coincides with base centroid");

  // Height of the pyramid: apex distance from the base plane.
  const Vec3 base_normal =
      (vertices[1] - vertices[0]).cross(vertices[3] - vertices[0]);
  if (base_normal.norm() < 1e-12) throw DegenerateHull("degenerate FOV base");
  const double height =
      std::abs(base_normal.normalized().dot(apex - vertices[0]));
  if (height < 1e-9) throw DegenerateHull("apex lies on the base plane");

  const Vec3 interior = 0.5 * (apex + base_centroid);
  ConvexHullH hull;
  hull.faces.reserve(5);
  for (int i = 0; i < 4; ++i) {
    hull.faces.push_back(
        hull_face(apex, vertices[i], vertices[(i + 1) % 4], interior));
  }
  hull.faces.push_back(hull_face(vertices[0], vertices[1], vertices[2], interior));
  return hull;
}

bool point_in_hull(const Vec3& p, const ConvexHullH& hull, double tol) {
  for (const Plane& face : hull.faces) {
    if (face.signed_distance(p) > tol) return false;
  }
  return true;
}

ConvexHullH box_hull(const Aabb& box) {
  ConvexHullH hull;
  hull.faces.reserve(6);
  for (int axis = 0; axis < 3; ++axis) {
    Plane hi;
    hi.normal = Vec3::Zero();
    hi.normal[axis] = 1.0;
    hi.offset = box.hi[axis];
    hull.faces.push_back(hi);
    Plane lo;
    lo.normal = Vec3::Zero();
    lo.normal[axis] = -1.0;
    lo.offset = -box.lo[axis];
    hull.faces.push_back(lo);
  }
  return hull;
}

double dodecahedron_inradius_ratio() {
  static const double ratio = [] {
    const double sqrt5 = std::sqrt(5.0);
    const double inradius = 0.5 * std::sqrt((25.0 + 11.0 * sqrt5) / 10.0);
    const double circumradius = 0.25 * std::sqrt(3.0) * (1.0 + sqrt5);
    return inradius / circumradius;
  }();
  return ratio;
}

ConvexHullH dodecahedron_hull(const Vec3& center, double radius) {
  if (!(radius > 0.0)) throw InvalidRadius("dodecahedron radius must be positive");
  // Face normals of a regular dodecahedron with two horizontal faces are the
  // vertex directions of an icosahedron with poles on the z axis.
  ConvexHullH hull;
  hull.faces.reserve(12);
  const double face_dist = radius * dodecahedron_inradius_ratio();
  auto add = [&](const Vec3& n) {
    Plane face;
    face.normal = n.normalized();
    face.offset = face.normal.dot(center) + face_dist;
    hull.faces.push_back(face);
  };
  add(Vec3(0, 0, 1));
  add(Vec3(0, 0, -1));
  const double rxy = 2.0 / std::sqrt(5.0);
  const double z = 1.0 / std::sqrt(5.0);
  for (int k = 0; k < 5; ++k) {
    const double a_up = 2.0 * M_PI * k / 5.0;
    add(Vec3(rxy * std::cos(a_up), rxy * std::sin(a_up), z));
    const double a_dn = a_up + M_PI / 5.0;
    add(Vec3(rxy * std::cos(a_dn), rxy * std::sin(a_dn), -z));
  }
  return hull;
}

Mesh gaussian_heightfield_mesh(double amplitude, double x0, double y0,
                               double sigma2_x, double sigma2_y,
                               int grid_nx, int grid_ny,
                               const Eigen::AlignedBox2d& extent) {
  if (grid_nx < 2 || grid_ny < 2) throw MeshError("heightfield grid dims must be >= 2");
  if (!(sigma2_x > 0.0) || !(sigma2_y > 0.0)) throw MeshError("variances must be positive");

  auto height = [&](double x, double y) {
    const double dx = x - x0;
    const double dy = y - y0;
    return amplitude * std::exp(-(dx * dx / (2.0 * sigma2_x) + dy * dy / (2.0 * sigma2_y)));
  };

  std::vector<Vec3> grid(static_cast<size_t>(grid_nx) * grid_ny);
  for (int iy = 0; iy < grid_ny; ++iy) {
    for (int ix = 0; ix < grid_nx; ++ix) {
      const double x = extent.min().x() +
                       (extent.max().x() - extent.min().x()) * ix / (grid_nx - 1);
      const double y = extent.min().y() +
                       (extent.max().y() - extent.min().y()) * iy / (grid_ny - 1);
      grid[iy * grid_nx + ix] = Vec3(x, y, height(x, y));
    }
  }

  std::vector<std::array<Vec3, 3>> triangles;
  triangles.reserve(2 * (grid_nx - 1) * (grid_ny - 1));
  for (int iy = 0; iy + 1 < grid_ny; ++iy) {
    for (int ix = 0; ix + 1 < grid_nx; ++ix) {
      const Vec3& p00 = grid[iy * grid_nx + ix];
      const Vec3& p10 = grid[iy * grid_nx + ix + 1];
      const Vec3& p01 = grid[(iy + 1) * grid_nx + ix];
      const Vec3& p11 = grid[(iy + 1) * grid_nx + ix + 1];
      // Fixed diagonal p00-p11; counter-clockwise seen from above so the
      // winding normal points upward (outward for a heightfield).
      triangles.push_back({p00, p10, p11});
      triangles.push_back({p00, p11, p01});
    }
  }
  return Mesh::from_triangles(triangles);
}

}  // namespace covctrl
