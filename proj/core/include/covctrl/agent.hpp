#pragma once

#include <cstdint>
#include <vector>

#include "covctrl/geometry.hpp"

namespace covctrl {

/// Parameters of the double-integrator-with-drag agent model
///   p' = p + dt v,  v' = (1 - gamma) v + (dt / m) u
/// with symmetric per-axis velocity and input bounds.
struct KinematicParams {
  double dt = 1.0;        // s
  double gamma = 0.2;     // drag coefficient, dimensionless
  double mass = 1.05;     // kg
  double v_bound = 12.0;  // m/s
  double u_bound = 10.0;  // N

  void validate() const;
};

struct AgentState {
  Vec3 p = Vec3::Zero();  // m
  Vec3 v = Vec3::Zero();  // m/s
};

/// One discrete kinematic step. Throws InputOutOfRange when any input
/// component exceeds u_bound; velocity bounds are the planner's job.
AgentState step(const AgentState& state, const Vec3& u, const KinematicParams& params);

struct CameraIntrinsics {
  double length = 10.0;  // FOV base length l, m
  double width = 10.0;   // FOV base width w, m
  double range = 16.0;   // pyramid height r, m
};

using FovVertices = std::array<Vec3, 5>;

/// Vertices of the downward-facing FOV pyramid centered at the origin:
/// four base corners (-l/2,w/2,-r), (l/2,w/2,-r), (l/2,-w/2,-r),
/// (-l/2,-w/2,-r) followed by the apex at the origin.
FovVertices base_fov_vertices(const CameraIntrinsics& cam);

/// Applies Rz(phi) * Ry(theta) to every vertex; the apex stays at the origin.
FovVertices rotate_fov(const FovVertices& base, double theta, double phi);

/// One admissible gimbal rotation pair, radians.
struct GimbalConfig {
  double theta = 0.0;  // about y, [0, pi)
  double phi = 0.0;    // about z, [0, 2 pi)
};

/// Finite set of admissible gimbal configurations, the cross product of the
/// theta and phi sets in row-major order (theta outer, phi inner). Indices
/// are 1-based and stable.
class GimbalSet {
 public:
  GimbalSet() = default;
  GimbalSet(std::vector<double> thetas_rad, std::vector<double> phis_rad);

  int size() const { return static_cast<int>(configs_.size()); }
  const GimbalConfig& config(int xi_1based) const { return configs_.at(xi_1based - 1); }
  const std::vector<double>& thetas() const { return thetas_; }
  const std::vector<double>& phis() const { return phis_; }

 private:
  std::vector<double> thetas_;
  std::vector<double> phis_;
  std::vector<GimbalConfig> configs_;
};

/// A rotated FOV anchored at an agent position: translated vertices plus the
/// 5-face halfspace hull. The apex equals the anchor position.
struct AnchoredFov {
  int xi_index = 0;
  FovVertices vertices;
  Vec3 apex = Vec3::Zero();
  ConvexHullH hull;
};

AnchoredFov anchor_fov(const FovVertices& rotated, const Vec3& p, int xi_index = 0);

enum class RaySampling { kUniformGrid, kSeededRandom };

/// Light-ray bundle of an anchored FOV: n rays from points on the rectangular
/// base to the optical center (the apex). The uniform grid places origins on
/// the ceil(sqrt(n))^2 centered lattice truncated to n in row-major order;
/// seeded-random draws i.i.d. uniform points, bit-reproducible per seed.
std::vector<Ray> sample_light_rays(const AnchoredFov& fov, int n,
                                   RaySampling scheme = RaySampling::kUniformGrid,
                                   std::uint64_t seed = 0);

}  // namespace covctrl
