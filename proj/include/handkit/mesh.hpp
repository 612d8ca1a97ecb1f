#pragma once

// Indexed triangle meshes in millimeters and the basic measurements on them.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "handkit/error.hpp"

namespace handkit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

/// Counterclockwise winding (seen from outside) means an outward normal.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string name;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }
  bool empty() const { return faces.empty(); }

  std::array<Vec3, 3> corners(std::size_t f) const {
    const Face& t = faces[f];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }
};

struct BoundingBox {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
  Vec3 extent() const { return max - min; }
};

struct MeshReport {
  bool watertight = false;
  std::size_t boundary_edge_count = 0;
  std::size_t non_manifold_edge_count = 0;
  double signed_volume_mm3 = 0.0;
  BoundingBox bbox;
};

/// Throws unless every face index is in range, no face repeats a vertex and
/// every coordinate is finite.
inline void validate(const TriangleMesh& mesh) {
  const auto n = mesh.vertices.size();
  for (std::size_t v = 0; v < n; ++v) {
    if (!mesh.vertices[v].allFinite()) {
      throw Error(ErrorKind::InvalidArgument, "vertex " + std::to_string(v) + " is not finite");
    }
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    for (auto idx : t) {
      if (idx >= n) {
        throw Error(ErrorKind::InvalidArgument, "face " + std::to_string(f) + " references vertex " +
                                                    std::to_string(idx) + " of " + std::to_string(n));
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw Error(ErrorKind::InvalidArgument, "face " + std::to_string(f) + " repeats a vertex");
    }
  }
}

inline BoundingBox bounding_box(const TriangleMesh& mesh) {
  BoundingBox box;
  for (const auto& p : mesh.vertices) box.extend(p);
  return box;
}

/// Sum of signed tetrahedron volumes against the origin.
inline double signed_volume(const TriangleMesh& mesh) {
  double six_v = 0.0;
  for (const auto& t : mesh.faces) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    six_v += a.dot(b.cross(c));
  }
  return six_v / 6.0;
}

inline double surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto [a, b, c] = mesh.corners(f);
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

namespace detail {
inline std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}
}  // namespace detail

inline MeshReport analyze_mesh(const TriangleMesh& mesh) {
  std::map<std::uint64_t, std::uint32_t> incidence;
  for (const auto& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) ++incidence[detail::edge_key(t[k], t[(k + 1) % 3])];
  }
  MeshReport report;
  for (const auto& [key, count] : incidence) {
    if (count == 1) ++report.boundary_edge_count;
    if (count > 2) ++report.non_manifold_edge_count;
  }
  report.watertight = report.boundary_edge_count == 0 && report.non_manifold_edge_count == 0;
  report.signed_volume_mm3 = signed_volume(mesh);
  report.bbox = bounding_box(mesh);
  return report;
}

/// Unit vertex normals from Max's weights: each incident corner adds
/// (e1 x e2) / (|e1|^2 |e2|^2). This is exact for vertices lying on a
/// sphere, so a sphere offsets exactly radially.
inline std::vector<Vec3> vertex_normals(const TriangleMesh& mesh) {
  std::vector<Vec3> sums(mesh.vertices.size(), Vec3::Zero());
  std::vector<double> mags(mesh.vertices.size(), 0.0);
  for (const auto& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const Vec3& p = mesh.vertices[t[k]];
      const Vec3 e1 = mesh.vertices[t[(k + 1) % 3]] - p;
      const Vec3 e2 = mesh.vertices[t[(k + 2) % 3]] - p;
      const double w = e1.squaredNorm() * e2.squaredNorm();
      if (!(w > 0.0)) continue;
      const Vec3 n = e1.cross(e2) / w;
      sums[t[k]] += n;
      mags[t[k]] += n.norm();
    }
  }
  for (std::size_t v = 0; v < sums.size(); ++v) {
    const double len = sums[v].norm();
    if (!(len > 1e-12 * mags[v])) throw DegenerateVertexError(v);
    sums[v] /= len;
  }
  return sums;
}

inline TriangleMesh flipped(TriangleMesh mesh) {
  for (auto& t : mesh.faces) std::swap(t[1], t[2]);
  return mesh;
}

/// Appends `part` to `into`, reindexing its faces.
inline void append(TriangleMesh& into, const TriangleMesh& part) {
  const auto base = static_cast<std::uint32_t>(into.vertices.size());
  into.vertices.insert(into.vertices.end(), part.vertices.begin(), part.vertices.end());
  into.faces.reserve(into.faces.size() + part.faces.size());
  for (const auto& t : part.faces) into.faces.push_back({t[0] + base, t[1] + base, t[2] + base});
}

template <typename F>
TriangleMesh transformed(TriangleMesh mesh, F&& map_point) {
  for (auto& p : mesh.vertices) p = map_point(p);
  return mesh;
}

/// Splits a mesh into edge-connected components, in order of their lowest
/// face index. Unreferenced vertices are dropped.
inline std::vector<TriangleMesh> split_components(const TriangleMesh& mesh) {
  const std::size_t nv = mesh.vertices.size();
  std::vector<std::uint32_t> parent(nv);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& t : mesh.faces) {
    for (int k = 1; k < 3; ++k) {
      auto a = find(t[0]);
      auto b = find(t[k]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }

  std::map<std::uint32_t, std::size_t> root_to_part;
  std::vector<TriangleMesh> parts;
  std::vector<std::map<std::uint32_t, std::uint32_t>> remap;
  for (const auto& t : mesh.faces) {
    const auto root = find(t[0]);
    auto [it, inserted] = root_to_part.try_emplace(root, parts.size());
    if (inserted) {
      parts.emplace_back();
      parts.back().name = mesh.name;
      remap.emplace_back();
    }
    auto& part = parts[it->second];
    auto& ids = remap[it->second];
    Face out{};
    for (int k = 0; k < 3; ++k) {
      auto [slot, fresh] = ids.try_emplace(t[k], static_cast<std::uint32_t>(part.vertices.size()));
      if (fresh) part.vertices.push_back(mesh.vertices[t[k]]);
      out[k] = slot->second;
    }
    part.faces.push_back(out);
  }
  return parts;
}

inline double min_edge_length(const TriangleMesh& mesh) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto c = mesh.corners(f);
    for (int k = 0; k < 3; ++k) best = std::min(best, (c[k] - c[(k + 1) % 3]).norm());
  }
  return best;
}

inline Vec3 vertex_centroid(const TriangleMesh& mesh) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : mesh.vertices) sum += p;
  return mesh.vertices.empty() ? sum : Vec3(sum / static_cast<double>(mesh.vertices.size()));
}

}  // namespace handkit
