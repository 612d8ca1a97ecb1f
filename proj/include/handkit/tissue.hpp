#pragma once

// Tissue layer generation: the region between the skin surface shrunk by
// sigma and the bone surface grown by sigma, with radial struts joining the
// two walls.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "handkit/landmarks.hpp"
#include "handkit/mesh.hpp"
#include "handkit/mesh_io.hpp"
#include "handkit/primitives.hpp"
#include "handkit/query.hpp"

namespace handkit {

struct TubeSpec {
  double sigma = 0.4;
  int support_count = 4;
  double support_radius = 0.5;
  std::string region;
};

inline void validate(const TubeSpec& spec) {
  if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) {
    throw Error(ErrorKind::InvalidArgument, "sigma must be a positive number of millimeters");
  }
  if (spec.support_count < 0) throw Error(ErrorKind::InvalidArgument, "support_count must be >= 0");
  if (spec.support_count > 0 && !(spec.support_radius > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "support_radius must be positive");
  }
}

struct OffsetResult {
  TriangleMesh mesh;
  std::vector<std::pair<std::size_t, std::size_t>> self_intersections;
  std::vector<std::string> warnings;
};

/// Moves each vertex by `delta` along its vertex normal (positive is
/// outward). Connectivity is untouched; self-intersections introduced by
/// the move are listed, not repaired.
inline OffsetResult offset_surface(const TriangleMesh& mesh, double delta, bool check_self_intersections = true) {
  OffsetResult result;
  result.mesh = mesh;
  if (delta == 0.0) return result;

  const MeshReport report = analyze_mesh(mesh);
  if (!report.watertight) result.warnings.push_back("offset input is not watertight");
  // Feature size is taken as half the middle bounding-box extent.
  Vec3 extent = report.bbox.extent();
  std::sort(extent.data(), extent.data() + 3);
  const double feature = 0.5 * extent[1];
  if (std::abs(delta) >= 0.5 * feature) {
    result.warnings.push_back("offset " + detail::format_float(delta, 6) + " mm is large relative to the feature size " +
                              detail::format_float(feature, 6) + " mm");
  }

  const auto normals = vertex_normals(mesh);
  for (std::size_t v = 0; v < result.mesh.vertices.size(); ++v) result.mesh.vertices[v] += delta * normals[v];
  if (check_self_intersections) {
    result.self_intersections = self_intersections(result.mesh);
    if (!result.self_intersections.empty()) {
      result.warnings.push_back(std::to_string(result.self_intersections.size()) +
                                " intersecting face pair(s) after offsetting");
    }
  }
  return result;
}

/// Keeps the part of `mesh` with normal.dot(p) <= offset and closes every
/// cut loop with a fan around its centroid. Assumes each cut loop is star
/// shaped about its centroid, which holds for finger cross-sections.
inline TriangleMesh clip_and_cap(const TriangleMesh& mesh, const Vec3& normal, double offset) {
  const Vec3 n = normal.normalized();
  const BoundingBox bb = bounding_box(mesh);
  const double eps = 1e-9 * std::max(1.0, bb.extent().norm());
  std::vector<double> dist(mesh.vertices.size());
  // Shift the plane off any vertex lying on it.
  for (int attempt = 0; attempt < 8; ++attempt) {
    bool on_plane = false;
    for (std::size_t v = 0; v < dist.size(); ++v) {
      dist[v] = n.dot(mesh.vertices[v]) - offset;
      on_plane = on_plane || std::abs(dist[v]) <= eps;
    }
    if (!on_plane) break;
    offset += 1e3 * eps;
  }

  TriangleMesh out;
  out.name = mesh.name;
  std::vector<std::int64_t> kept(mesh.vertices.size(), -1);
  auto keep = [&](std::uint32_t v) {
    if (kept[v] < 0) {
      kept[v] = static_cast<std::int64_t>(out.vertices.size());
      out.vertices.push_back(mesh.vertices[v]);
    }
    return static_cast<std::uint32_t>(kept[v]);
  };
  std::map<std::uint64_t, std::uint32_t> crossing;
  auto cut = [&](std::uint32_t a, std::uint32_t b) {
    const auto key = detail::edge_key(a, b);
    auto it = crossing.find(key);
    if (it != crossing.end()) return it->second;
    const double t = dist[a] / (dist[a] - dist[b]);
    out.vertices.push_back(mesh.vertices[a] + t * (mesh.vertices[b] - mesh.vertices[a]));
    const auto idx = static_cast<std::uint32_t>(out.vertices.size() - 1);
    crossing.emplace(key, idx);
    return idx;
  };

  std::map<std::uint32_t, std::uint32_t> next;  // directed cut edges of the kept side
  for (const auto& f : mesh.faces) {
    const std::array<bool, 3> in{dist[f[0]] < 0, dist[f[1]] < 0, dist[f[2]] < 0};
    const int count = in[0] + in[1] + in[2];
    if (count == 0) continue;
    if (count == 3) {
      out.faces.push_back({keep(f[0]), keep(f[1]), keep(f[2])});
      continue;
    }
    // Rotate so the lone vertex (inside for count 1, outside for count 2) is first.
    int r = 0;
    for (int k = 0; k < 3; ++k) {
      if (in[k] == (count == 1)) r = k;
    }
    const std::uint32_t a = f[r], b = f[(r + 1) % 3], c = f[(r + 2) % 3];
    if (count == 1) {
      const auto ab = cut(a, b), ac = cut(a, c);
      out.faces.push_back({keep(a), ab, ac});
      next[ab] = ac;
    } else {
      // a is outside; the kept polygon is b, c, then the two cut points.
      const auto ca = cut(c, a), ab = cut(a, b);
      out.faces.push_back({keep(b), keep(c), ca});
      out.faces.push_back({keep(b), ca, ab});
      next[ca] = ab;
    }
  }

  std::map<std::uint32_t, bool> visited;
  for (const auto& [start, unused] : next) {
    if (visited[start]) continue;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> loop;
    std::uint32_t v = start;
    while (!visited[v]) {
      visited[v] = true;
      auto it = next.find(v);
      if (it == next.end()) break;
      loop.emplace_back(v, it->second);
      v = it->second;
    }
    if (loop.size() < 3) continue;
    Vec3 centroid = Vec3::Zero();
    for (const auto& e : loop) centroid += out.vertices[e.first];
    centroid /= static_cast<double>(loop.size());
    const auto c = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.push_back(centroid);
    for (const auto& [from, to] : loop) out.faces.push_back({to, from, c});
  }
  return out;
}

/// Cuts the slab of `scan` between the planes through `start` and `end`
/// perpendicular to end - start, caps it, and returns the closed piece
/// that contains `inside`. Each connected shell of the scan is cut on its
/// own, since caps of overlapping shells would otherwise merge; if several
/// pieces contain `inside` the smallest wins.
inline TriangleMesh extract_segment(const TriangleMesh& scan, const Vec3& start, const Vec3& end, const Vec3& inside) {
  const Vec3 axis = end - start;
  if (!(axis.norm() > 1e-9)) throw Error(ErrorKind::ZeroReference, "segment endpoints coincide");
  const Vec3 u = axis.normalized();
  std::optional<TriangleMesh> best;
  double best_volume = std::numeric_limits<double>::infinity();
  for (const auto& shell : split_components(scan)) {
    auto slab = clip_and_cap(shell, -u, -u.dot(start));
    if (slab.faces.empty()) continue;
    slab = clip_and_cap(slab, u, u.dot(end));
    for (auto& part : split_components(slab)) {
      if (!analyze_mesh(part).watertight || !is_inside(part, inside)) continue;
      const double v = signed_volume(part);
      if (v < best_volume) {
        best_volume = v;
        best = std::move(part);
      }
    }
  }
  if (!best) throw Error(ErrorKind::Containment, "no closed skin piece between the cut planes contains the bone");
  return *best;
}

struct ShellModel {
  TriangleMesh outer;     // skin shrunk by sigma, outward wound
  TriangleMesh inner;     // bone grown by sigma, inward wound
  TriangleMesh supports;  // struts, one closed component each
  double material_volume_mm3 = 0.0;
  double solid_volume_mm3 = 0.0;  // skin minus bone, unhollowed
  double sigma = 0.0;
  Vec3 axis_point = Vec3::Zero();
  Vec3 axis_dir = Vec3::UnitZ();
  std::size_t strut_count = 0;
  std::vector<std::string> warnings;
};

inline double compute_material_volume(const ShellModel& shell) {
  return signed_volume(shell.outer) + signed_volume(shell.inner) + signed_volume(shell.supports);
}

namespace detail {

/// Sample of at most `limit` vertex indices, evenly strided.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t limit) {
  std::vector<std::size_t> out;
  const std::size_t stride = std::max<std::size_t>(1, (n + limit - 1) / limit);
  for (std::size_t i = 0; i < n; i += stride) out.push_back(i);
  return out;
}

inline Vec3 any_perpendicular(const Vec3& axis) {
  const Vec3 a = axis.normalized();
  int least = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(a[k]) < std::abs(a[least])) least = k;
  }
  return a.cross(Vec3::Unit(least)).normalized();
}

}  // namespace detail

/// Appends `spec.support_count` radial struts at mid-length of the shell
/// axis, equally spaced in angle, each running from the inner wall to the
/// outer wall.
inline ShellModel add_supports(ShellModel shell, const TubeSpec& spec) {
  if (spec.support_count <= 0) return shell;
  if (!(spec.support_radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "support_radius must be positive");
  const Vec3 axis = shell.axis_dir.normalized();
  const Vec3 u = detail::any_perpendicular(axis);
  const Vec3 v = axis.cross(u);
  for (int k = 0; k < spec.support_count; ++k) {
    const double a = 2.0 * std::numbers::pi * k / spec.support_count;
    const Vec3 dir = std::cos(a) * u + std::sin(a) * v;
    const auto inner_hits = ray_hits(shell.inner, shell.axis_point, dir);
    if (inner_hits.empty()) {
      throw Error(ErrorKind::PlacementFailure, "strut " + std::to_string(k) + " misses the inner wall");
    }
    const double t_in = inner_hits.back();
    const auto outer_hits = ray_hits(shell.outer, shell.axis_point, dir);
    auto it = std::find_if(outer_hits.begin(), outer_hits.end(), [&](double t) { return t > t_in; });
    if (it == outer_hits.end() || *it - t_in <= 1e-6) {
      throw Error(ErrorKind::PlacementFailure, "strut " + std::to_string(k) + " finds no gap between the walls");
    }
    const Vec3 p0 = shell.axis_point + t_in * dir;
    const Vec3 p1 = shell.axis_point + *it * dir;
    append(shell.supports, cylinder(p0, p1, spec.support_radius, 24));
    ++shell.strut_count;
  }
  shell.supports.name = "supports";
  shell.material_volume_mm3 = compute_material_volume(shell);
  return shell;
}

/// Builds the tissue shell between `skin_segment` and `bone`.
inline ShellModel build_concentric_tube(const TriangleMesh& skin_segment, const TriangleMesh& bone, const TubeSpec& spec) {
  validate(spec);
  if (!analyze_mesh(skin_segment).watertight) throw Error(ErrorKind::InvalidArgument, "skin segment is not watertight");
  if (!analyze_mesh(bone).watertight) throw Error(ErrorKind::InvalidArgument, "bone mesh is not watertight");

  double min_gap = std::numeric_limits<double>::infinity();
  for (auto i : detail::sample_indices(bone.vertices.size(), 512)) {
    const Vec3& p = bone.vertices[i];
    if (!is_inside(skin_segment, p)) {
      throw Error(ErrorKind::Containment, "bone vertex " + std::to_string(i) + " lies outside the skin segment");
    }
    min_gap = std::min(min_gap, distance_to_mesh(skin_segment, p));
  }
  if (!(spec.sigma < 0.5 * min_gap)) {
    throw Error(ErrorKind::GapTooSmall, "sigma " + detail::format_float(spec.sigma, 6) +
                                            " mm is not below half the skin-to-bone gap " + detail::format_float(min_gap, 6) + " mm");
  }

  ShellModel shell;
  shell.sigma = spec.sigma;
  auto outer = offset_surface(skin_segment, -spec.sigma);
  auto grown = offset_surface(bone, spec.sigma);
  shell.outer = std::move(outer.mesh);
  shell.outer.name = "outer";
  for (auto& w : outer.warnings) shell.warnings.push_back("outer: " + w);
  for (auto& w : grown.warnings) shell.warnings.push_back("inner: " + w);

  for (auto i : detail::sample_indices(grown.mesh.vertices.size(), 2048)) {
    const Vec3& p = grown.mesh.vertices[i];
    if (!is_inside(shell.outer, p) || !(distance_to_mesh(shell.outer, p) > 1e-9)) {
      throw Error(ErrorKind::GapTooSmall, "grown bone touches the shrunk skin at vertex " + std::to_string(i));
    }
  }
  shell.inner = flipped(std::move(grown.mesh));
  shell.inner.name = "inner";
  shell.supports.name = "supports";

  // Strut axis: principal direction of the bone, through its centroid at mid-length.
  const auto frame = align_midplane(bone).transform;
  shell.axis_dir = frame.rotation.row(0).transpose();
  const Vec3 centroid = vertex_centroid(bone);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : bone.vertices) {
    const double s = (p - centroid).dot(shell.axis_dir);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  shell.axis_point = centroid + 0.5 * (lo + hi) * shell.axis_dir;

  shell.solid_volume_mm3 = signed_volume(skin_segment) - signed_volume(bone);
  shell.material_volume_mm3 = compute_material_volume(shell);
  return add_supports(std::move(shell), spec);
}

struct ShellExport {
  std::vector<std::uint8_t> mesh_bytes;
  nlohmann::json report;
};

/// One multi-component mesh (outer, inner, struts) plus a volume report.
inline ShellExport export_shell(const ShellModel& shell, MeshFormat format = MeshFormat::stl_binary) {
  TriangleMesh merged;
  merged.name = "tissue_shell";
  append(merged, shell.outer);
  append(merged, shell.inner);
  append(merged, shell.supports);

  ShellExport out;
  out.mesh_bytes = write_mesh(merged, format);
  const double outer_v = signed_volume(shell.outer);
  const double inner_v = signed_volume(shell.inner);
  const double support_v = signed_volume(shell.supports);
  out.report = {
      {"sigma_mm", shell.sigma},
      {"components", 2 + shell.strut_count},
      {"struts", shell.strut_count},
      {"outer_volume_mm3", outer_v},
      {"inner_volume_mm3", inner_v},
      {"supports_volume_mm3", support_v},
      {"material_volume_mm3", shell.material_volume_mm3},
      {"material_volume_ml", shell.material_volume_mm3 / 1000.0},
      {"solid_volume_mm3", shell.solid_volume_mm3},
      {"solid_volume_ml", shell.solid_volume_mm3 / 1000.0},
      {"hollow_less_than_solid", shell.material_volume_mm3 < shell.solid_volume_mm3},
      {"warnings", shell.warnings},
  };
  return out;
}

}  // namespace handkit
