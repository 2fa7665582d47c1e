#include "covctrl/mesh_io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "covctrl/errors.hpp"

namespace covctrl {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_vec(const Vec3& v) {
  return fmt_double(v.x()) + " " + fmt_double(v.y()) + " " + fmt_double(v.z());
}

}  // namespace

std::string write_stl_ascii(const Mesh& mesh, const std::string& solid_name) {
  std::ostringstream out;
  out << "solid " << solid_name << "\n";
  for (const Facet& f : mesh.facets()) {
    out << "  facet normal " << fmt_vec(f.plane.normal) << "\n";
    out << "    outer loop\n";
    for (const Vec3& v : f.vertices) out << "      vertex " << fmt_vec(v) << "\n";
    out << "    endloop\n";
    out << "  endfacet\n";
  }
  out << "endsolid " << solid_name << "\n";
  return out.str();
}

Mesh read_stl_ascii(const std::string& text) {
  std::istringstream in(text);
  std::string token;
  std::vector<std::array<Vec3, 3>> triangles;
  std::vector<Vec3> stored_normals;

  if (!(in >> token) || token != "solid") throw FormatError("STL: missing 'solid' header");
  std::string line;
  std::getline(in, line);  // solid name

  while (in >> token) {
    if (token == "endsolid") break;
    if (token != "facet") throw FormatError("STL: expected 'facet', got '" + token + "'");
    Vec3 normal;
    if (!(in >> token) || token != "normal" ||
        !(in >> normal.x() >> normal.y() >> normal.z())) {
      throw FormatError("STL: malformed facet normal");
    }
    if (!(in >> token) || token != "outer" || !(in >> token) || token != "loop") {
      throw FormatError("STL: expected 'outer loop'");
    }
    std::array<Vec3, 3> tri;
    for (Vec3& v : tri) {
      if (!(in >> token) || token != "vertex" || !(in >> v.x() >> v.y() >> v.z())) {
        throw FormatError("STL: malformed vertex line");
      }
    }
    if (!(in >> token) || token != "endloop" || !(in >> token) || token != "endfacet") {
      throw FormatError("STL: expected 'endloop'/'endfacet'");
    }
    triangles.push_back(tri);
    stored_normals.push_back(normal);
  }
  if (token != "endsolid") throw FormatError("STL: missing 'endsolid'");

  // Honor stored normals: flip the winding when it disagrees, so the
  // winding-derived plane matches the file orientation.
  for (size_t i = 0; i < triangles.size(); ++i) {
    if (stored_normals[i].norm() < 1e-12) continue;
    auto& tri = triangles[i];
    const Vec3 winding = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    if (winding.dot(stored_normals[i]) < 0.0) std::swap(tri[1], tri[2]);
  }
  return Mesh::from_triangles(triangles);
}

std::string write_mesh_text(const Mesh& mesh) {
  std::ostringstream out;
  std::map<std::array<double, 3>, int> pool;
  std::vector<std::array<int, 3>> faces;
  faces.reserve(mesh.facet_count());
  std::vector<Vec3> vertices;

  for (const Facet& f : mesh.facets()) {
    std::array<int, 3> idx{};
    for (int i = 0; i < 3; ++i) {
      const Vec3& v = f.vertices[i];
      std::array<double, 3> key = {v.x(), v.y(), v.z()};
      auto [it, inserted] = pool.emplace(key, static_cast<int>(vertices.size()) + 1);
      if (inserted) vertices.push_back(v);
      idx[i] = it->second;
    }
    faces.push_back(idx);
  }

  for (const Vec3& v : vertices) out << "v " << fmt_vec(v) << "\n";
  for (const auto& f : faces) out << "f " << f[0] << " " << f[1] << " " << f[2] << "\n";
  return out.str();
}

Mesh read_mesh_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Vec3> vertices;
  std::vector<std::array<Vec3, 3>> triangles;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) {
        throw FormatError("mesh text line " + std::to_string(line_no) + ": bad vertex");
      }
      vertices.push_back(v);
    } else if (kind == "f") {
      std::array<int, 3> idx{};
      if (!(ls >> idx[0] >> idx[1] >> idx[2])) {
        throw FormatError("mesh text line " + std::to_string(line_no) + ": bad facet");
      }
      std::array<Vec3, 3> tri;
      for (int i = 0; i < 3; ++i) {
        if (idx[i] < 1 || idx[i] > static_cast<int>(vertices.size())) {
          throw FormatError("mesh text line " + std::to_string(line_no) +
                            ": vertex index out of range");
        }
        tri[i] = vertices[idx[i] - 1];
      }
      triangles.push_back(tri);
    } else if (!kind.empty()) {
      throw FormatError("mesh text line " + std::to_string(line_no) +
                        ": unknown record '" + kind + "'");
    }
  }
  return Mesh::from_triangles(triangles);
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  if (path.extension() == ".stl") {
    out << write_stl_ascii(mesh, path.stem().string());
  } else {
    out << write_mesh_text(mesh);
  }
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".stl") return read_stl_ascii(buf.str());
  return read_mesh_text(buf.str());
}

std::array<std::uint8_t, 32> mesh_sha256(const Mesh& mesh) {
  const std::string canonical = write_mesh_text(mesh);
  std::array<std::uint8_t, 32> digest{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, canonical.data(), canonical.size());
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  return digest;
}

}  // namespace covctrl
