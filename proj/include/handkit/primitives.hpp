#pragma once

// Closed, outward-wound primitive meshes used for templates, struts, hole
// cutters and test fixtures.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "handkit/mesh.hpp"

namespace handkit {

inline TriangleMesh icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero()) {
  if (!(radius > 0.0) || subdivisions < 0) {
    throw Error(ErrorKind::InvalidArgument, "icosphere needs radius > 0 and subdivisions >= 0");
  }
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(v.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const auto ab = mid(tri[0], tri[1]);
      const auto bc = mid(tri[1], tri[2]);
      const auto ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  TriangleMesh mesh;
  mesh.vertices.reserve(v.size());
  for (const auto& p : v) mesh.vertices.push_back(center + radius * p);
  mesh.faces = std::move(f);
  mesh.name = "icosphere";
  return mesh;
}

/// Axis-aligned box with the given corners, 12 triangles.
inline TriangleMesh box(const Vec3& lo, const Vec3& hi) {
  TriangleMesh mesh;
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                               (i & 4) ? hi.z() : lo.z());
  }
  mesh.faces = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  mesh.name = "box";
  return mesh;
}

inline TriangleMesh unit_cube() { return box(Vec3::Zero(), Vec3::Ones()); }

/// Surface of revolution about the +z axis. `profile` lists (radius, z)
/// pairs from bottom to top; a zero radius at either end becomes a pole,
/// otherwise that end is closed with a flat fan.
inline TriangleMesh lathe(const std::vector<std::pair<double, double>>& profile, int segments) {
  if (profile.size() < 2 || segments < 3) {
    throw Error(ErrorKind::InvalidArgument, "lathe needs >= 2 profile points and >= 3 segments");
  }
  TriangleMesh mesh;
  std::vector<std::vector<std::uint32_t>> rings;
  for (const auto& [r, z] : profile) {
    std::vector<std::uint32_t> ring;
    if (r <= 0.0) {
      ring.push_back(static_cast<std::uint32_t>(mesh.vertices.size()));
      mesh.vertices.emplace_back(0.0, 0.0, z);
    } else {
      for (int s = 0; s < segments; ++s) {
        const double a = 2.0 * std::numbers::pi * s / segments;
        ring.push_back(static_cast<std::uint32_t>(mesh.vertices.size()));
        mesh.vertices.emplace_back(r * std::cos(a), r * std::sin(a), z);
      }
    }
    rings.push_back(std::move(ring));
  }
  auto at = [&](const std::vector<std::uint32_t>& ring, int s) {
    return ring.size() == 1 ? ring[0] : ring[static_cast<std::size_t>(s % segments)];
  };
  for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
    const auto& lo = rings[k];
    const auto& hi = rings[k + 1];
    for (int s = 0; s < segments; ++s) {
      const auto a = at(lo, s), b = at(lo, s + 1), c = at(hi, s + 1), d = at(hi, s);
      if (lo.size() > 1) mesh.faces.push_back({a, b, c});
      if (hi.size() > 1) mesh.faces.push_back({a, c, d});
      if (lo.size() == 1 && hi.size() == 1) {
        throw Error(ErrorKind::InvalidArgument, "lathe profile has two consecutive poles");
      }
    }
  }
  auto cap = [&](const std::vector<std::uint32_t>& ring, double z, bool bottom) {
    if (ring.size() == 1) return;
    const auto c = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.emplace_back(0.0, 0.0, z);
    for (int s = 0; s < segments; ++s) {
      if (bottom) {
        mesh.faces.push_back({c, at(ring, s + 1), at(ring, s)});
      } else {
        mesh.faces.push_back({c, at(ring, s), at(ring, s + 1)});
      }
    }
  };
  cap(rings.front(), profile.front().second, true);
  cap(rings.back(), profile.back().second, false);
  mesh.name = "lathe";
  return mesh;
}

/// Rigid map taking the +z axis onto the direction `axis`, origin onto `base`.
inline TriangleMesh place_along(TriangleMesh mesh, const Vec3& base, const Vec3& axis) {
  const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), axis.normalized());
  const Eigen::Matrix3d rot = q.toRotationMatrix();
  for (auto& p : mesh.vertices) p = base + rot * p;
  return mesh;
}

/// Closed cylinder from p0 to p1.
inline TriangleMesh cylinder(const Vec3& p0, const Vec3& p1, double radius, int segments = 24) {
  const double length = (p1 - p0).norm();
  if (!(length > 0.0) || !(radius > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "cylinder needs positive length and radius");
  }
  auto mesh = place_along(lathe({{radius, 0.0}, {radius, length}}, segments), p0, p1 - p0);
  mesh.name = "cylinder";
  return mesh;
}

/// Capsule whose spherical end caps are centered at p0 and p1.
inline TriangleMesh capsule(const Vec3& p0, const Vec3& p1, double radius, int segments = 24,
                            int cap_rings = 6, int body_rings = 8) {
  const double length = (p1 - p0).norm();
  if (!(length > 0.0) || !(radius > 0.0) || cap_rings < 1 || body_rings < 1) {
    throw Error(ErrorKind::InvalidArgument, "capsule needs positive length and radius");
  }
  std::vector<std::pair<double, double>> profile;
  const double half_pi = std::numbers::pi / 2.0;
  for (int k = 0; k <= cap_rings; ++k) {
    const double a = -half_pi + half_pi * k / cap_rings;
    profile.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  profile.front().first = 0.0;
  for (int k = 1; k < body_rings; ++k) profile.emplace_back(radius, length * k / body_rings);
  for (int k = 0; k <= cap_rings; ++k) {
    const double a = half_pi * k / cap_rings;
    profile.emplace_back(radius * std::cos(a), length + radius * std::sin(a));
  }
  profile.back().first = 0.0;
  auto mesh = place_along(lathe(profile, segments), p0, p1 - p0);
  mesh.name = "capsule";
  return mesh;
}

}  // namespace handkit
