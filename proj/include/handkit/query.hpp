#pragma once

// Point, ray and triangle queries against meshes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "handkit/mesh.hpp"

namespace handkit {

/// Closest point to p on triangle abc (Ericson, Real-Time Collision Detection 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

inline double distance_to_mesh(const TriangleMesh& mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto [a, b, c] = mesh.corners(f);
    best = std::min(best, (closest_point_on_triangle(p, a, b, c) - p).squaredNorm());
  }
  return std::sqrt(best);
}

/// Generalized winding number: ~1 inside a closed outward-wound surface,
/// ~0 outside, ~-1 inside an inward-wound one.
inline double winding_number(const TriangleMesh& mesh, const Vec3& p) {
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto [a0, b0, c0] = mesh.corners(f);
    const Vec3 a = a0 - p, b = b0 - p, c = c0 - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

inline bool is_inside(const TriangleMesh& closed_mesh, const Vec3& p) {
  return std::abs(winding_number(closed_mesh, p)) > 0.5;
}

/// Moller-Trumbore; returns the ray parameter of the hit, if any.
inline std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b,
                                          const Vec3& c, double edge_tol = 0.0) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pv = dir.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tv = origin - a;
  const double u = tv.dot(pv) * inv;
  if (u < -edge_tol || u > 1.0 + edge_tol) return std::nullopt;
  const Vec3 qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  if (v < -edge_tol || u + v > 1.0 + edge_tol) return std::nullopt;
  return e2.dot(qv) * inv;
}

/// All forward hits of a ray, sorted by distance. Hits closer than
/// `merge_tol` are collapsed. Edges are slightly widened so a ray through a
/// shared edge of float-rounded input still registers.
inline std::vector<double> ray_hits(const TriangleMesh& mesh, const Vec3& origin, const Vec3& dir,
                                    double merge_tol = 1e-9) {
  std::vector<double> hits;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto [a, b, c] = mesh.corners(f);
    if (auto t = ray_triangle(origin, dir, a, b, c, 1e-9); t && *t > 0.0) hits.push_back(*t);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<double> merged;
  for (double t : hits) {
    if (merged.empty() || t - merged.back() > merge_tol) merged.push_back(t);
  }
  return merged;
}

namespace detail {

inline bool segment_hits_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 dir = q - p;
  auto t = ray_triangle(p, dir, a, b, c);
  return t && *t >= 0.0 && *t <= 1.0;
}

}  // namespace detail

/// True if two non-coplanar triangles cross. Coplanar overlaps are not
/// reported.
inline bool triangles_intersect(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2) {
  for (int k = 0; k < 3; ++k) {
    if (detail::segment_hits_triangle(t1[k], t1[(k + 1) % 3], t2[0], t2[1], t2[2])) return true;
    if (detail::segment_hits_triangle(t2[k], t2[(k + 1) % 3], t1[0], t1[1], t1[2])) return true;
  }
  return false;
}

/// Pairs of faces (i < j) that share no vertex and intersect. Candidate
/// pairs come from a uniform grid over face bounding boxes.
inline std::vector<std::pair<std::size_t, std::size_t>> self_intersections(const TriangleMesh& mesh) {
  std::vector<std::pair<std::size_t, std::size_t>> result;
  const std::size_t nf = mesh.faces.size();
  if (nf < 2) return result;

  double mean_edge = 0.0;
  std::vector<BoundingBox> boxes(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto c = mesh.corners(f);
    for (const auto& p : c) boxes[f].extend(p);
    mean_edge += (c[0] - c[1]).norm() + (c[1] - c[2]).norm() + (c[2] - c[0]).norm();
  }
  mean_edge /= 3.0 * static_cast<double>(nf);
  const BoundingBox all = bounding_box(mesh);
  const double cell = std::max(mean_edge * 2.0, 1e-9);

  auto cell_index = [&](double v, double lo) { return static_cast<std::int64_t>(std::floor((v - lo) / cell)); };
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const noexcept {
      return static_cast<std::size_t>(k[0] * 73856093 ^ k[1] * 19349663 ^ k[2] * 83492791);
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::uint32_t>, KeyHash> grid;
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& bb = boxes[f];
    for (auto x = cell_index(bb.min.x(), all.min.x()); x <= cell_index(bb.max.x(), all.min.x()); ++x)
      for (auto y = cell_index(bb.min.y(), all.min.y()); y <= cell_index(bb.max.y(), all.min.y()); ++y)
        for (auto z = cell_index(bb.min.z(), all.min.z()); z <= cell_index(bb.max.z(), all.min.z()); ++z)
          grid[{x, y, z}].push_back(static_cast<std::uint32_t>(f));
  }

  auto overlaps = [](const BoundingBox& a, const BoundingBox& b) {
    return (a.min.array() <= b.max.array()).all() && (b.min.array() <= a.max.array()).all();
  };
  auto share_vertex = [&](std::size_t i, std::size_t j) {
    for (auto a : mesh.faces[i])
      for (auto b : mesh.faces[j])
        if (a == b) return true;
    return false;
  };

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (const auto& [key, members] : grid) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        auto i = members[a], j = members[b];
        if (i > j) std::swap(i, j);
        if (overlaps(boxes[i], boxes[j])) candidates.emplace_back(i, j);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  for (const auto& [i, j] : candidates) {
    if (share_vertex(i, j)) continue;
    if (triangles_intersect(mesh.corners(i), mesh.corners(j))) result.emplace_back(i, j);
  }
  return result;
}

}  // namespace handkit
