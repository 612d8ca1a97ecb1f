#pragma once

// The 25-landmark hand annotation, the bone topology built on it, and
// mid-plane alignment of a scanned surface.
//
// Landmarks are 2D points in the aligned scan frame: the scan is first
// rotated so that its symmetry plane is z = 0, then annotated in xy.

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "handkit/mesh.hpp"

namespace handkit {

/// Canonical landmark names. The thumb has no intermediate phalanx and thus
/// one joint fewer (cmc, mcp, ip, tip).
inline const std::vector<std::string>& landmark_schema() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"wrist_center", "thumb_cmc", "thumb_mcp", "thumb_ip", "thumb_tip"};
    for (const char* finger : {"index", "middle", "ring", "little"}) {
      for (const char* joint : {"cmc", "mcp", "pip", "dip", "tip"}) {
        n.push_back(std::string(finger) + "_" + joint);
      }
    }
    return n;
  }();
  return names;
}

inline constexpr std::string_view kLandmarkSchemaVersion = "handkit-landmarks/1";

inline bool is_landmark_name(std::string_view name) {
  const auto& s = landmark_schema();
  return std::find(s.begin(), s.end(), name) != s.end();
}

enum class LandmarkSource { template_hand, target_hand };

struct LandmarkSet {
  std::map<std::string, Vec2> points;
  LandmarkSource source = LandmarkSource::target_hand;

  const Vec2& at(const std::string& name) const {
    auto it = points.find(name);
    if (it == points.end()) throw Error(ErrorKind::SchemaViolation, "missing landmark '" + name + "'");
    return it->second;
  }
};

struct BoneEntry {
  std::string bone_id;
  std::string origin;     // proximal landmark
  std::string reference;  // distal landmark
};

struct BoneTopology {
  std::vector<BoneEntry> bones;

  const BoneEntry& find(const std::string& bone_id) const {
    for (const auto& b : bones) {
      if (b.bone_id == bone_id) return b;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown bone '" + bone_id + "'");
  }
  std::vector<std::string> bone_ids() const {
    std::vector<std::string> ids;
    for (const auto& b : bones) ids.push_back(b.bone_id);
    return ids;
  }
};

struct BoneFrame {
  std::string bone_id;
  Vec2 origin = Vec2::Zero();
  Vec2 reference = Vec2::Zero();  // from origin to the reference landmark
};

inline void validate(const BoneTopology& topology) {
  std::vector<std::string> seen;
  for (const auto& b : topology.bones) {
    if (!is_landmark_name(b.origin) || !is_landmark_name(b.reference)) {
      throw Error(ErrorKind::SchemaViolation, "bone '" + b.bone_id + "' names a landmark outside the schema");
    }
    if (b.origin == b.reference) {
      throw Error(ErrorKind::SchemaViolation, "bone '" + b.bone_id + "' uses one landmark twice");
    }
    if (std::find(seen.begin(), seen.end(), b.bone_id) != seen.end()) {
      throw Error(ErrorKind::SchemaViolation, "duplicate bone '" + b.bone_id + "'");
    }
    seen.push_back(b.bone_id);
  }
}

/// 19 bones: a metacarpal per digit, proximal/intermediate/distal phalanges
/// for the four fingers and proximal/distal for the thumb.
inline BoneTopology default_topology() {
  BoneTopology t;
  t.bones.push_back({"thumb_metacarpal", "thumb_cmc", "thumb_mcp"});
  t.bones.push_back({"thumb_proximal", "thumb_mcp", "thumb_ip"});
  t.bones.push_back({"thumb_distal", "thumb_ip", "thumb_tip"});
  for (const char* f : {"index", "middle", "ring", "little"}) {
    const std::string finger(f);
    t.bones.push_back({finger + "_metacarpal", finger + "_cmc", finger + "_mcp"});
    t.bones.push_back({finger + "_proximal", finger + "_mcp", finger + "_pip"});
    t.bones.push_back({finger + "_intermediate", finger + "_pip", finger + "_dip"});
    t.bones.push_back({finger + "_distal", finger + "_dip", finger + "_tip"});
  }
  return t;
}

inline BoneTopology topology_from_json(const nlohmann::json& doc) {
  BoneTopology t;
  const auto& bones = doc.contains("bones") ? doc.at("bones") : doc;
  if (!bones.is_array()) throw Error(ErrorKind::SchemaViolation, "topology document needs a 'bones' array");
  for (const auto& b : bones) {
    if (!b.is_object() || !b.contains("bone_id") || !b.contains("origin") || !b.contains("reference")) {
      throw Error(ErrorKind::SchemaViolation, "topology entry needs bone_id, origin and reference");
    }
    t.bones.push_back({b.at("bone_id").get<std::string>(), b.at("origin").get<std::string>(),
                       b.at("reference").get<std::string>()});
  }
  validate(t);
  return t;
}

inline nlohmann::json to_json(const BoneTopology& t) {
  nlohmann::json bones = nlohmann::json::array();
  for (const auto& b : t.bones) {
    bones.push_back({{"bone_id", b.bone_id}, {"origin", b.origin}, {"reference", b.reference}});
  }
  return {{"bones", bones}};
}

/// Reads a key -> [x, y] document. Every problem found is listed in the
/// message, not just the first.
inline LandmarkSet load_landmarks(const nlohmann::json& doc, LandmarkSource source = LandmarkSource::target_hand) {
  // A wrapped form {"landmarks": {...}} is accepted as well.
  const auto& body = (doc.is_object() && doc.contains("landmarks")) ? doc.at("landmarks") : doc;
  if (!body.is_object()) throw Error(ErrorKind::SchemaViolation, "landmark document must be an object");

  LandmarkSet set;
  set.source = source;
  std::vector<std::string> problems;
  for (const auto& [key, value] : body.items()) {
    if (!is_landmark_name(key)) {
      problems.push_back("unknown landmark '" + key + "'");
      continue;
    }
    if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
      problems.push_back("landmark '" + key + "' must be [x, y]");
      continue;
    }
    const Vec2 p(value[0].get<double>(), value[1].get<double>());
    if (!p.allFinite()) {
      problems.push_back("landmark '" + key + "' is not finite");
      continue;
    }
    set.points[key] = p;
  }
  std::vector<std::string> missing;
  for (const auto& name : landmark_schema()) {
    if (!set.points.count(name) && !body.contains(name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    problems.push_back("missing landmark(s): " + list);
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorKind::SchemaViolation, msg);
  }
  return set;
}

inline nlohmann::json to_json(const LandmarkSet& set) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& name : landmark_schema()) {
    auto it = set.points.find(name);
    if (it != set.points.end()) out[name] = {it->second.x(), it->second.y()};
  }
  return out;
}

/// Rigid map p -> rotation * p + translation.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

struct AlignedMesh {
  TriangleMesh mesh;
  RigidTransform transform;
};

/// Moves the mesh into its principal frame: the centroid goes to the
/// origin, the largest-variance direction to +x, the next to +y, so the
/// least-squares symmetry plane becomes z = 0. Eigenvector signs are
/// chosen to agree with the current axes, which makes already-aligned
/// input a fixed point.
inline AlignedMesh align_midplane(const TriangleMesh& mesh) {
  if (mesh.vertices.size() < 3) {
    throw Error(ErrorKind::DegenerateGeometry, "alignment needs at least 3 vertices");
  }
  const Vec3 centroid = vertex_centroid(mesh);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : mesh.vertices) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(mesh.vertices.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::DegenerateGeometry, "covariance eigen-decomposition failed");
  }
  // Eigen sorts eigenvalues ascending.
  const Eigen::Vector3d values = solver.eigenvalues();
  const double scale = std::max(values[2], 0.0);
  if (!(scale > 0.0) || values[1] <= 1e-12 * scale) {
    throw Error(ErrorKind::DegenerateGeometry, "vertex covariance has rank < 2");
  }
  Vec3 e1 = solver.eigenvectors().col(2);
  Vec3 e2 = solver.eigenvectors().col(1);
  if (e1.x() < 0.0) e1 = -e1;
  if (e2.y() < 0.0) e2 = -e2;
  const Vec3 e3 = e1.cross(e2);

  RigidTransform t;
  t.rotation.row(0) = e1.transpose();
  t.rotation.row(1) = e2.transpose();
  t.rotation.row(2) = e3.transpose();
  t.translation = -(t.rotation * centroid);

  AlignedMesh out{mesh, t};
  for (auto& p : out.mesh.vertices) p = t.apply(p);
  return out;
}

inline BoneFrame bone_frame(const LandmarkSet& landmarks, const BoneTopology& topology, const std::string& bone_id) {
  const auto& entry = topology.find(bone_id);
  BoneFrame frame;
  frame.bone_id = bone_id;
  frame.origin = landmarks.at(entry.origin);
  frame.reference = landmarks.at(entry.reference) - frame.origin;
  if (!(frame.reference.norm() >= 1e-9)) {
    throw Error(ErrorKind::ZeroReference,
                "bone '" + bone_id + "': landmarks '" + entry.origin + "' and '" + entry.reference + "' coincide");
  }
  return frame;
}

}  // namespace handkit
