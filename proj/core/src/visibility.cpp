#include "covctrl/visibility.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <thread>

#include "covctrl/errors.hpp"
#include "covctrl/mesh_io.hpp"

namespace covctrl {

namespace {

int axis_slot(double value, double lo, double hi, int n) {
  // ceil((v - lo) / w) - 1 assigns internal boundaries to the lower cell
  // and the min corner to the first cell.
  const double w = (hi - lo) / n;
  int slot = static_cast<int>(std::ceil((value - lo) / w)) - 1;
  if (slot < 0) slot = 0;
  if (slot > n - 1) slot = n - 1;
  return slot;
}

double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

int GridDecomposition::cell_index(const Vec3& p) const {
  if (!bounds.contains(p)) {
    throw OutOfEnvironment("point outside the environment bounds");
  }
  const int ix = axis_slot(p.x(), bounds.lo.x(), bounds.hi.x(), nx);
  const int iy = axis_slot(p.y(), bounds.lo.y(), bounds.hi.y(), ny);
  const int iz = axis_slot(p.z(), bounds.lo.z(), bounds.hi.z(), nz);
  return 1 + ix + nx * (iy + ny * iz);
}

Aabb GridDecomposition::cell_box(int cell_1based) const {
  const int c = cell_1based - 1;
  const int ix = c % nx;
  const int iy = (c / nx) % ny;
  const int iz = c / (nx * ny);
  const Vec3 w((bounds.hi.x() - bounds.lo.x()) / nx,
               (bounds.hi.y() - bounds.lo.y()) / ny,
               (bounds.hi.z() - bounds.lo.z()) / nz);
  Aabb box;
  box.lo = bounds.lo + Vec3(ix * w.x(), iy * w.y(), iz * w.z());
  box.hi = box.lo + w;
  return box;
}

void VisibilityLearningConfig::validate() const {
  if (samples_per_cell < 1) throw Error("samples_per_cell must be positive");
  if (rays_per_pose < 1) throw Error("rays_per_pose must be positive");
}

VisibilityTable::VisibilityTable(int cell_count, int facet_count)
    : cell_count_(cell_count), facet_count_(facet_count) {
  const std::size_t nbits = static_cast<std::size_t>(cell_count) * facet_count;
  bits_.assign((nbits + 7) / 8, 0);
}

bool VisibilityTable::visible(int cell_1based, int facet_1based) const {
  const std::size_t bit = static_cast<std::size_t>(cell_1based - 1) * facet_count_ +
                          (facet_1based - 1);
  return (bits_[bit / 8] >> (bit % 8)) & 1u;
}

void VisibilityTable::set_visible(int cell_1based, int facet_1based) {
  const std::size_t bit = static_cast<std::size_t>(cell_1based - 1) * facet_count_ +
                          (facet_1based - 1);
  bits_[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
}

bool VisibilityTable::any_visible(int cell_1based) const {
  for (int t = 1; t <= facet_count_; ++t) {
    if (visible(cell_1based, t)) return true;
  }
  return false;
}

namespace {

struct CellResult {
  std::vector<int> facets;  // visible facet indices, ascending
  std::vector<VisibilityWitness> witnesses;
};

CellResult learn_cell(int cell, const GridDecomposition& grid, const Mesh& mesh,
                      const GimbalSet& gimbal, const CameraIntrinsics& cam,
                      const VisibilityLearningConfig& cfg,
                      const std::vector<FovVertices>& rotated) {
  CellResult result;
  std::vector<char> seen(mesh.facet_count() + 1, 0);
  const Aabb box = grid.cell_box(cell);
  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.seed) ^
                      static_cast<std::uint64_t>(cell));

  for (int sample = 0; sample < cfg.samples_per_cell; ++sample) {
    Vec3 pos;
    for (int a = 0; a < 3; ++a) {
      pos[a] = box.lo[a] + next_unit(rng) * (box.hi[a] - box.lo[a]);
    }
    const int xi = static_cast<int>(rng() % static_cast<std::uint64_t>(gimbal.size())) + 1;

    const AnchoredFov fov = anchor_fov(rotated[xi - 1], pos, xi);
    // FOV pyramid cannot reach the mesh: no ray can produce a hit.
    Aabb fov_box = Aabb::of_point(fov.vertices[0]);
    for (int i = 1; i < 5; ++i) fov_box.expand(fov.vertices[i]);
    if (!fov_box.inflated(1e-6).overlaps(mesh.bounds())) continue;

    const std::vector<Ray> rays =
        sample_light_rays(fov, cfg.rays_per_pose, RaySampling::kUniformGrid);
    for (int ri = 0; ri < static_cast<int>(rays.size()); ++ri) {
      const auto hit = ray_mesh_last_hit(rays[ri], mesh);
      if (!hit || seen[*hit]) continue;
      seen[*hit] = 1;
      const GimbalConfig& gc = gimbal.config(xi);
      result.witnesses.push_back({cell, *hit, pos, gc.theta, gc.phi, ri});
    }
  }
  for (int t = 1; t <= mesh.facet_count(); ++t) {
    if (seen[t]) result.facets.push_back(t);
  }
  return result;
}

}  // namespace

VisibilityTable learn_visibility(const GridDecomposition& grid, const Mesh& mesh,
                                 const GimbalSet& gimbal, const CameraIntrinsics& cam,
                                 const VisibilityLearningConfig& cfg) {
  cfg.validate();
  if (gimbal.size() < 1) throw Error("gimbal set is empty");

  VisibilityTable table(grid.cell_count(), mesh.facet_count());
  table.nx = grid.nx;
  table.ny = grid.ny;
  table.nz = grid.nz;
  table.config = cfg;
  table.mesh_hash = mesh_sha256(mesh);
  if (mesh.empty()) return table;

  const FovVertices base = base_fov_vertices(cam);
  std::vector<FovVertices> rotated;
  rotated.reserve(gimbal.size());
  for (int xi = 1; xi <= gimbal.size(); ++xi) {
    const GimbalConfig& gc = gimbal.config(xi);
    rotated.push_back(rotate_fov(base, gc.theta, gc.phi));
  }

  const int cells = grid.cell_count();
  std::vector<CellResult> results(cells);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, 16));
  std::vector<std::thread> pool;
  std::atomic<int> next_cell{1};
  auto work = [&] {
    for (int c = next_cell.fetch_add(1); c <= cells; c = next_cell.fetch_add(1)) {
      results[c - 1] = learn_cell(c, grid, mesh, gimbal, cam, cfg, rotated);
    }
  };
  if (workers > 1 && cells > 1) {
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  } else {
    work();
  }

  for (int c = 1; c <= cells; ++c) {
    for (int t : results[c - 1].facets) table.set_visible(c, t);
    table.witnesses.insert(table.witnesses.end(), results[c - 1].witnesses.begin(),
                           results[c - 1].witnesses.end());
  }
  return table;
}

namespace {

constexpr char kMagic[4] = {'V', 'I', 'S', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t off) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(in[off])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + 1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + 2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + 3])) << 24);
}

}  // namespace

void save_table(const VisibilityTable& table, const std::filesystem::path& path) {
  std::string blob;
  blob.append(kMagic, 4);
  put_u32(blob, static_cast<std::uint32_t>(table.nx));
  put_u32(blob, static_cast<std::uint32_t>(table.ny));
  put_u32(blob, static_cast<std::uint32_t>(table.nz));
  put_u32(blob, static_cast<std::uint32_t>(table.facet_count()));
  put_u32(blob, static_cast<std::uint32_t>(table.config.samples_per_cell));
  put_u32(blob, static_cast<std::uint32_t>(table.config.rays_per_pose));
  put_u32(blob, table.config.seed);
  blob.append(reinterpret_cast<const char*>(table.mesh_hash.data()), 32);
  blob.append(reinterpret_cast<const char*>(table.packed_bits().data()),
              table.packed_bits().size());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

VisibilityTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  constexpr std::size_t header = 4 + 7 * 4 + 32;
  if (blob.size() < header || std::memcmp(blob.data(), kMagic, 4) != 0) {
    throw FormatError("not a VIS1 file: " + path.string());
  }
  const int nx = static_cast<int>(get_u32(blob, 4));
  const int ny = static_cast<int>(get_u32(blob, 8));
  const int nz = static_cast<int>(get_u32(blob, 12));
  const int facets = static_cast<int>(get_u32(blob, 16));
  if (nx < 1 || ny < 1 || nz < 1 || facets < 0) {
    throw FormatError("VIS1 header out of range");
  }

  VisibilityTable table(nx * ny * nz, facets);
  table.nx = nx;
  table.ny = ny;
  table.nz = nz;
  table.config.samples_per_cell = static_cast<int>(get_u32(blob, 20));
  table.config.rays_per_pose = static_cast<int>(get_u32(blob, 24));
  table.config.seed = get_u32(blob, 28);
  std::memcpy(table.mesh_hash.data(), blob.data() + 32, 32);

  const std::size_t expected = table.packed_bits().size();
  if (blob.size() != header + expected) {
    throw FormatError("VIS1 payload truncated or oversized");
  }
  std::memcpy(table.packed_bits().data(), blob.data() + header, expected);
  return table;
}

void verify_table_provenance(const VisibilityTable& table, const Mesh& mesh,
                             const GridDecomposition& grid,
                             const VisibilityLearningConfig& cfg) {
  if (table.mesh_hash != mesh_sha256(mesh)) {
    throw StaleTable("visibility table was learned for a different mesh");
  }
  if (table.nx != grid.nx || table.ny != grid.ny || table.nz != grid.nz) {
    throw StaleTable("visibility table grid dimensions do not match");
  }
  if (table.facet_count() != mesh.facet_count()) {
    throw StaleTable("visibility table facet count does not match the mesh");
  }
  if (table.config.samples_per_cell != cfg.samples_per_cell ||
      table.config.rays_per_pose != cfg.rays_per_pose ||
      table.config.seed != cfg.seed) {
    throw StaleTable("visibility table learning configuration does not match");
  }
}

}  // namespace covctrl
