#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "covctrl/agent.hpp"
#include "covctrl/geometry.hpp"

namespace covctrl {

/// Axis-aligned decomposition of the environment into nx * ny * nz cells,
/// indexed 1-based, row-major with x fastest. Points on internal boundaries
/// belong to the lower-index cell; the max corner belongs to the last cell.
struct GridDecomposition {
  Aabb bounds;
  int nx = 1, ny = 1, nz = 1;

  int cell_count() const { return nx * ny * nz; }
  int cell_index(const Vec3& p) const;  // throws OutOfEnvironment
  Aabb cell_box(int cell_1based) const;
};

struct VisibilityLearningConfig {
  int samples_per_cell = 100;  // random poses drawn per cell
  int rays_per_pose = 50;      // light rays cast per pose
  std::uint32_t seed = 1;

  void validate() const;
};

/// One recorded witness for a positive table entry: re-casting ray
/// `ray_index` of the pose's bundle must last-hit `facet`.
struct VisibilityWitness {
  int cell = 0;
  int facet = 0;
  Vec3 position = Vec3::Zero();
  double theta = 0.0;
  double phi = 0.0;
  int ray_index = 0;  // 0-based within the pose's uniform-grid bundle
};

/// Learned binary visibility relation over (cell, facet), with provenance.
/// Witnesses are kept in memory for audit and are not serialized.
class VisibilityTable {
 public:
  VisibilityTable() = default;
  VisibilityTable(int cell_count, int facet_count);

  bool visible(int cell_1based, int facet_1based) const;
  void set_visible(int cell_1based, int facet_1based);

  int cell_count() const { return cell_count_; }
  int facet_count() const { return facet_count_; }
  const std::vector<std::uint8_t>& packed_bits() const { return bits_; }
  std::vector<std::uint8_t>& packed_bits() { return bits_; }

  /// True when some facet is visible from the cell.
  bool any_visible(int cell_1based) const;

  // provenance
  std::array<std::uint8_t, 32> mesh_hash{};
  int nx = 0, ny = 0, nz = 0;
  VisibilityLearningConfig config;

  std::vector<VisibilityWitness> witnesses;

 private:
  int cell_count_ = 0;
  int facet_count_ = 0;
  std::vector<std::uint8_t> bits_;  // row-major by cell, LSB-first per byte
};

/// Learns the visibility relation by randomized ray casting: per cell,
/// samples_per_cell poses with position uniform in the cell and gimbal
/// configuration uniform over the set, each casting the pose's uniform-grid
/// ray bundle. Deterministic: the per-cell generator is seeded with
/// seed XOR cell-index, so cells can be learned in parallel.
VisibilityTable learn_visibility(const GridDecomposition& grid, const Mesh& mesh,
                                 const GimbalSet& gimbal, const CameraIntrinsics& cam,
                                 const VisibilityLearningConfig& cfg);

/// `VIS1` binary format: magic, little-endian u32 nx, ny, nz, facet count,
/// samples_per_cell, rays_per_pose, seed, 32-byte mesh hash, packed bits.
void save_table(const VisibilityTable& table, const std::filesystem::path& path);
VisibilityTable load_table(const std::filesystem::path& path);

/// Throws StaleTable when the table provenance does not match the given
/// mesh, grid, and learning configuration.
void verify_table_provenance(const VisibilityTable& table, const Mesh& mesh,
                             const GridDecomposition& grid,
                             const VisibilityLearningConfig& cfg);

}  // namespace covctrl
