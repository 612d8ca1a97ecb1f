#pragma once

// Per-bone similarity registration of a template skeleton onto a target
// hand, and ligament-hole placement on the fitted bones.

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "handkit/landmarks.hpp"
#include "handkit/mesh.hpp"
#include "handkit/mesh_io.hpp"
#include "handkit/primitives.hpp"

namespace handkit {

/// p' = lambda * Rz(theta) * p + translation. Rotation is about +z,
/// counterclockwise seen from +z; the scale applies to all three axes.
struct SimilarityTransform {
  double theta = 0.0;
  double lambda = 1.0;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return Vec3(lambda * (c * p.x() - s * p.y()) + translation.x(),
                lambda * (s * p.x() + c * p.y()) + translation.y(), lambda * p.z() + translation.z());
  }
  Vec2 apply(const Vec2& p) const {
    const Vec3 q = apply(Vec3(p.x(), p.y(), 0.0));
    return {q.x(), q.y()};
  }
  /// Rotation and scale only.
  Vec2 apply_linear(const Vec2& v) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {lambda * (c * v.x() - s * v.y()), lambda * (s * v.x() + c * v.y())};
  }
};

/// Maps (-pi, pi] onto itself and -pi to pi.
inline double normalize_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

/// lambda = |r'| / |r|; theta is the signed angle from r to r', resolved
/// over all four quadrants; the translation carries the template origin
/// landmark onto the target origin landmark.
inline SimilarityTransform estimate_transform(const BoneFrame& template_frame, const BoneFrame& target_frame) {
  const Vec2& r = template_frame.reference;
  const Vec2& rp = target_frame.reference;
  const double nr = r.norm(), nrp = rp.norm();
  if (!(nr >= 1e-9) || !(nrp >= 1e-9)) {
    throw Error(ErrorKind::ZeroReference, "bone '" + target_frame.bone_id + "' has a zero reference vector");
  }
  SimilarityTransform t;
  t.lambda = nrp / nr;
  const double cross = r.x() * rp.y() - r.y() * rp.x();
  const double dot = r.dot(rp);
  t.theta = normalize_angle(std::atan2(cross, dot));
  const Vec2 mapped = t.apply_linear(template_frame.origin);
  t.translation = Vec3(target_frame.origin.x() - mapped.x(), target_frame.origin.y() - mapped.y(), 0.0);
  return t;
}

/// The identity returns the mesh untouched (so -0.0 stays -0.0).
inline TriangleMesh apply_transform(const TriangleMesh& mesh, const SimilarityTransform& t) {
  if (t.theta == 0.0 && t.lambda == 1.0 && t.translation.isZero(0.0)) return mesh;
  return transformed(mesh, [&](const Vec3& p) { return t.apply(p); });
}

struct BoneTemplateSet {
  std::map<std::string, TriangleMesh> meshes;
  LandmarkSet landmarks;
};

struct BoneFit {
  std::string bone_id;
  SimilarityTransform transform;
  BoneFrame target_frame;
  TriangleMesh mesh;
};

/// Fits every bone of the topology independently. Bones are returned in
/// topology order.
inline std::vector<BoneFit> fit_template(const BoneTemplateSet& templates, const BoneTopology& topology,
                                         const LandmarkSet& target_landmarks) {
  std::vector<BoneFit> fits;
  fits.reserve(topology.bones.size());
  for (const auto& entry : topology.bones) {
    auto mesh_it = templates.meshes.find(entry.bone_id);
    if (mesh_it == templates.meshes.end()) {
      throw Error(ErrorKind::InvalidArgument, "template has no mesh for bone '" + entry.bone_id + "'");
    }
    const BoneFrame from = bone_frame(templates.landmarks, topology, entry.bone_id);
    const BoneFrame to = bone_frame(target_landmarks, topology, entry.bone_id);
    BoneFit fit;
    fit.bone_id = entry.bone_id;
    fit.transform = estimate_transform(from, to);
    fit.target_frame = to;
    fit.mesh = apply_transform(mesh_it->second, fit.transform);
    fits.push_back(std::move(fit));
  }
  return fits;
}

struct HoleSpec {
  double diameter = 1.0;
  double depth = 0.0;  // <= 0 means the local bone width
  double end_offset = 2.0;
};

struct HolePose {
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitX();
  double diameter = 0.0;
  double depth = 0.0;
};

/// One hole near each end of the bone, on the long axis through the
/// frame origin, inset by `end_offset` from the axial extremes of the
/// mesh. Holes run perpendicular to the long axis and to z.
inline std::vector<HolePose> place_ligament_holes(const TriangleMesh& bone_mesh, const BoneFrame& frame,
                                                  const HoleSpec& spec) {
  if (bone_mesh.vertices.empty()) throw Error(ErrorKind::InvalidArgument, "bone mesh is empty");
  if (!(spec.diameter > 0.0) || !(spec.end_offset > 0.0) || spec.depth < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "hole diameter and end offset must be positive");
  }
  if (!(frame.reference.norm() >= 1e-9)) {
    throw Error(ErrorKind::ZeroReference, "bone '" + frame.bone_id + "' has a zero reference vector");
  }
  const Vec3 origin(frame.origin.x(), frame.origin.y(), 0.0);
  const Vec3 axis = Vec3(frame.reference.x(), frame.reference.y(), 0.0).normalized();
  const Vec3 across = axis.cross(Vec3::UnitZ()).normalized();

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : bone_mesh.vertices) {
    const double s = (p - origin).dot(axis);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (hi - lo < 2.0 * spec.end_offset) {
    throw Error(ErrorKind::BoneTooShort, "bone '" + frame.bone_id + "' is " + detail::format_float(hi - lo, 6) +
                                             " mm long, shorter than twice the hole offset");
  }

  auto local_width = [&](double s_center) {
    const double band = std::max(spec.diameter, 0.5);
    double wlo = std::numeric_limits<double>::infinity(), whi = -wlo;
    for (const auto& p : bone_mesh.vertices) {
      const Vec3 d = p - origin;
      if (std::abs(d.dot(axis) - s_center) > band) continue;
      wlo = std::min(wlo, d.dot(across));
      whi = std::max(whi, d.dot(across));
    }
    if (!(whi > wlo)) {
      for (const auto& p : bone_mesh.vertices) {
        wlo = std::min(wlo, (p - origin).dot(across));
        whi = std::max(whi, (p - origin).dot(across));
      }
    }
    return whi - wlo;
  };

  std::vector<HolePose> poses;
  for (double s : {lo + spec.end_offset, hi - spec.end_offset}) {
    HolePose pose;
    pose.center = origin + s * axis;
    pose.axis = across;
    pose.diameter = spec.diameter;
    pose.depth = spec.depth > 0.0 ? spec.depth : local_width(s);
    poses.push_back(pose);
  }
  return poses;
}

/// Closed cylinder matching a hole, for boolean subtraction in a slicer.
inline TriangleMesh hole_cutter(const HolePose& pose, int segments = 16) {
  const Vec3 half = 0.5 * pose.depth * pose.axis;
  auto mesh = cylinder(pose.center - half, pose.center + half, 0.5 * pose.diameter, segments);
  mesh.name = "hole";
  return mesh;
}

inline nlohmann::json to_json(const SimilarityTransform& t) {
  return {{"theta", t.theta}, {"lambda", t.lambda}, {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

inline nlohmann::json to_json(const HolePose& h) {
  return {{"center", {h.center.x(), h.center.y(), h.center.z()}},
          {"axis", {h.axis.x(), h.axis.y(), h.axis.z()}},
          {"diameter", h.diameter},
          {"depth", h.depth}};
}

inline HolePose hole_from_json(const nlohmann::json& j) {
  HolePose h;
  for (int k = 0; k < 3; ++k) {
    h.center[k] = j.at("center").at(k).get<double>();
    h.axis[k] = j.at("axis").at(k).get<double>();
  }
  h.diameter = j.at("diameter").get<double>();
  h.depth = j.at("depth").get<double>();
  return h;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::MalformedFile, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

/// Template directory layout: landmarks.json, optional topology.json and
/// one <bone_id>.stl (or .obj) per bone.
inline BoneTopology load_template_topology(const std::filesystem::path& dir) {
  const auto path = dir / "topology.json";
  if (std::filesystem::exists(path)) return topology_from_json(read_json_file(path));
  return default_topology();
}

inline BoneTemplateSet load_template_set(const std::filesystem::path& dir, const BoneTopology& topology) {
  BoneTemplateSet set;
  set.landmarks = load_landmarks(read_json_file(dir / "landmarks.json"), LandmarkSource::template_hand);
  for (const auto& entry : topology.bones) {
    auto path = dir / (entry.bone_id + ".stl");
    if (!std::filesystem::exists(path)) path = dir / (entry.bone_id + ".obj");
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorKind::Io, "template mesh for bone '" + entry.bone_id + "' not found in " + dir.string());
    }
    set.meshes[entry.bone_id] = load_mesh(path);
  }
  return set;
}

}  // namespace handkit
