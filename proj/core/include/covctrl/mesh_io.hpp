#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "covctrl/geometry.hpp"

namespace covctrl {

/// ASCII STL writer/reader. Facet normals come from the stored planes; on
/// import the stored normal fixes the plane orientation when it is nonzero.
std::string write_stl_ascii(const Mesh& mesh, const std::string& solid_name = "mesh");
Mesh read_stl_ascii(const std::string& text);

/// Line-oriented internal format: `v x y z` vertex lines followed by
/// `f i j k` facet lines with 1-based vertex indices. Values are printed
/// with 17 significant digits so doubles round-trip exactly.
std::string write_mesh_text(const Mesh& mesh);
Mesh read_mesh_text(const std::string& text);

void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path);

/// SHA-256 of the canonical internal-format serialization.
std::array<std::uint8_t, 32> mesh_sha256(const Mesh& mesh);

}  // namespace covctrl
