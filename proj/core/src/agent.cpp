#include "covctrl/agent.hpp"

#include <cmath>
#include <random>

#include "covctrl/errors.hpp"

namespace covctrl {

void KinematicParams::validate() const {
  if (!(dt > 0.0)) throw Error("dt must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("gamma must be in [0, 1)");
  if (!(mass > 0.0)) throw Error("mass must be positive");
  if (!(v_bound > 0.0) || !(u_bound > 0.0)) throw Error("bounds must be positive");
}

AgentState step(const AgentState& state, const Vec3& u, const KinematicParams& params) {
  const double limit = params.u_bound * (1.0 + 1e-12);
  if (u.cwiseAbs().maxCoeff() > limit) {
    throw InputOutOfRange("control input exceeds u_bound");
  }
  AgentState next;
  next.p = state.p + params.dt * state.v;
  next.v = (1.0 - params.gamma) * state.v + (params.dt / params.mass) * u;
  return next;
}

FovVertices base_fov_vertices(const CameraIntrinsics& cam) {
  const double hl = 0.5 * cam.length;
  const double hw = 0.5 * cam.width;
  const double r = cam.range;
  return {Vec3(-hl, hw, -r), Vec3(hl, hw, -r), Vec3(hl, -hw, -r), Vec3(-hl, -hw, -r),
          Vec3(0.0, 0.0, 0.0)};
}

FovVertices rotate_fov(const FovVertices& base, double theta, double phi) {
  Eigen::Matrix3d ry;
  ry << std::cos(theta), 0.0, std::sin(theta),
        0.0, 1.0, 0.0,
        -std::sin(theta), 0.0, std::cos(theta);
  Eigen::Matrix3d rz;
  rz << std::cos(phi), -std::sin(phi), 0.0,
        std::sin(phi), std::cos(phi), 0.0,
        0.0, 0.0, 1.0;
  const Eigen::Matrix3d rot = rz * ry;
  FovVertices out;
  for (size_t i = 0; i < base.size(); ++i) out[i] = rot * base[i];
  return out;
}

GimbalSet::GimbalSet(std::vector<double> thetas_rad, std::vector<double> phis_rad)
    : thetas_(std::move(thetas_rad)), phis_(std::move(phis_rad)) {
  for (double t : thetas_) {
    if (!(t >= 0.0 && t < M_PI)) throw Error("theta must be in [0, pi)");
  }
  for (double p : phis_) {
    if (!(p >= 0.0 && p < 2.0 * M_PI)) throw Error("phi must be in [0, 2 pi)");
  }
  configs_.reserve(thetas_.size() * phis_.size());
  for (double t : thetas_) {
    for (double p : phis_) configs_.push_back({t, p});
  }
}

AnchoredFov anchor_fov(const FovVertices& rotated, const Vec3& p, int xi_index) {
  AnchoredFov fov;
  fov.xi_index = xi_index;
  for (size_t i = 0; i < rotated.size(); ++i) fov.vertices[i] = rotated[i] + p;
  fov.apex = fov.vertices[4];
  fov.hull = hull_from_fov(fov.vertices);
  return fov;
}

namespace {

// Canonical uniform double in [0, 1) from the top 53 bits, identical across
// standard library implementations.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<Ray> sample_light_rays(const AnchoredFov& fov, int n, RaySampling scheme,
                                   std::uint64_t seed) {
  if (n < 1) throw Error("ray count must be >= 1");
  const Vec3& b0 = fov.vertices[0];
  const Vec3 du = fov.vertices[1] - b0;  // along the base length
  const Vec3 dv = fov.vertices[3] - b0;  // along the base width

  std::vector<Ray> rays;
  rays.reserve(n);
  if (scheme == RaySampling::kUniformGrid) {
    const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    for (int row = 0; row < g && static_cast<int>(rays.size()) < n; ++row) {
      for (int col = 0; col < g && static_cast<int>(rays.size()) < n; ++col) {
        const double a = (col + 0.5) / g;
        const double b = (row + 0.5) / g;
        rays.push_back({b0 + a * du + b * dv, fov.apex});
      }
    }
  } else {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i) {
      const double a = next_unit(rng);
      const double b = next_unit(rng);
      rays.push_back({b0 + a * du + b * dv, fov.apex});
    }
  }
  return rays;
}

}  // namespace covctrl
