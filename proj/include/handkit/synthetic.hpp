#pragma once

// Synthetic hand used for demos and tests: a parametric template skeleton,
// a target hand derived from it, a capsule-built "scan" of the target, a
// placeholder deformation-curve family and six finger design presets.
//
// None of this is physiological data. Proportions are loosely based on an
// adult hand; the deformation curves only exercise the selection logic.

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "handkit/deformation.hpp"
#include "handkit/kinematics.hpp"
#include "handkit/landmarks.hpp"
#include "handkit/mesh_io.hpp"
#include "handkit/primitives.hpp"
#include "handkit/template_match.hpp"

namespace handkit::synthetic {

/// Right hand, palm in the xy-plane, fingers along +y, thumb toward -x.
inline LandmarkSet template_landmarks() {
  LandmarkSet s;
  s.source = LandmarkSource::template_hand;
  auto put = [&](const char* name, double x, double y) { s.points[name] = Vec2(x, y); };
  put("wrist_center", 0, 0);
  put("thumb_cmc", -25, 15);
  put("thumb_mcp", -50, 45);
  put("thumb_ip", -65, 75);
  put("thumb_tip", -75, 100);
  put("index_cmc", -22, 10);
  put("index_mcp", -24, 75);
  put("index_pip", -26, 120);
  put("index_dip", -27, 146);
  put("index_tip", -28, 168);
  put("middle_cmc", -6, 12);
  put("middle_mcp", -6, 80);
  put("middle_pip", -6, 128);
  put("middle_dip", -6, 157);
  put("middle_tip", -6, 181);
  put("ring_cmc", 9, 11);
  put("ring_mcp", 12, 75);
  put("ring_pip", 15, 120);
  put("ring_dip", 17, 148);
  put("ring_tip", 18, 170);
  put("little_cmc", 22, 8);
  put("little_mcp", 30, 65);
  put("little_pip", 35, 100);
  put("little_dip", 38, 120);
  put("little_tip", 40, 138);
  return s;
}

inline std::string digit_of(const std::string& name) { return name.substr(0, name.find('_')); }

/// Skin radius of each digit, mm.
inline double skin_radius(const std::string& digit) {
  static const std::map<std::string, double> r{
      {"thumb", 9.0}, {"index", 8.0}, {"middle", 8.5}, {"ring", 8.0}, {"little", 7.0}};
  return r.at(digit);
}

inline bool is_metacarpal(const std::string& bone_id) { return bone_id.find("metacarpal") != std::string::npos; }

/// Capsule spanning the middle 80% of the landmark segment.
inline TriangleMesh bone_capsule(const Vec2& a2, const Vec2& b2, double radius) {
  const Vec3 a(a2.x(), a2.y(), 0.0), b(b2.x(), b2.y(), 0.0);
  const Vec3 u = (b - a).normalized();
  const double inset = 0.1 * (b - a).norm() + radius;
  return capsule(a + inset * u, b - inset * u, radius, 20, 5, 6);
}

inline double bone_radius(const std::string& bone_id) {
  if (is_metacarpal(bone_id)) return 3.5;
  return 0.32 * skin_radius(digit_of(bone_id));
}

inline BoneTemplateSet template_set(const BoneTopology& topology = default_topology()) {
  BoneTemplateSet set;
  set.landmarks = template_landmarks();
  for (const auto& b : topology.bones) {
    auto mesh = bone_capsule(set.landmarks.at(b.origin), set.landmarks.at(b.reference), bone_radius(b.bone_id));
    mesh.name = b.bone_id;
    set.meshes[b.bone_id] = std::move(mesh);
  }
  return set;
}

/// The template hand scaled by 1.06 about the wrist, with the index finger
/// turned 6 degrees about its MCP joint and the little finger shortened by
/// 5% about its MCP joint.
inline LandmarkSet target_landmarks() {
  LandmarkSet s = template_landmarks();
  s.source = LandmarkSource::target_hand;
  for (auto& [name, p] : s.points) p *= 1.06;
  const Vec2 index_mcp = s.points.at("index_mcp");
  const double a = 6.0 * std::numbers::pi / 180.0;
  for (const char* n : {"index_pip", "index_dip", "index_tip"}) {
    const Vec2 d = s.points.at(n) - index_mcp;
    s.points[n] = index_mcp + Vec2(std::cos(a) * d.x() - std::sin(a) * d.y(), std::sin(a) * d.x() + std::cos(a) * d.y());
  }
  const Vec2 little_mcp = s.points.at("little_mcp");
  for (const char* n : {"little_pip", "little_dip", "little_tip"}) {
    s.points[n] = little_mcp + 0.95 * (s.points.at(n) - little_mcp);
  }
  return s;
}

/// Capsule with hemispherical ends centered at p0 and p1 whose vertex rings
/// avoid the planes through p0 and p1, so joint cuts never hit a vertex.
inline TriangleMesh skin_capsule(const Vec3& p0, const Vec3& p1, double radius, int segments = 32) {
  const double length = (p1 - p0).norm();
  const int cap_rings = 6, body_rings = std::max(4, static_cast<int>(std::ceil(length / 2.0)));
  const double half_pi = std::numbers::pi / 2.0;
  std::vector<std::pair<double, double>> profile{{0.0, -radius}};
  for (int k = 0; k < cap_rings; ++k) {
    const double a = -half_pi + half_pi * (k + 0.5) / cap_rings;
    profile.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  for (int k = 0; k < body_rings; ++k) profile.emplace_back(radius, length * (k + 0.5) / body_rings);
  for (int k = 0; k < cap_rings; ++k) {
    const double a = half_pi * (k + 0.5) / cap_rings;
    profile.emplace_back(radius * std::cos(a), length + radius * std::sin(a));
  }
  profile.emplace_back(0.0, length + radius);
  return place_along(lathe(profile, segments), p0, p1 - p0);
}

/// Multi-component scan of a hand with the given landmarks: a rounded
/// palm block plus one capsule per phalanx and for the thumb metacarpal.
/// Every component is closed; they overlap at the joints.
inline TriangleMesh scan_mesh(const LandmarkSet& landmarks, const BoneTopology& topology = default_topology()) {
  TriangleMesh scan;
  scan.name = "synthetic_scan";
  BoundingBox palm;
  for (const char* n : {"index_cmc", "middle_cmc", "ring_cmc", "little_cmc", "index_mcp", "middle_mcp", "ring_mcp",
                        "little_mcp"}) {
    const Vec2& p = landmarks.at(n);
    palm.extend(Vec3(p.x(), p.y(), 0.0));
  }
  append(scan, box(Vec3(palm.min.x() - 14.0, palm.min.y() - 12.0, -13.0), Vec3(palm.max.x() + 14.0, palm.max.y() + 5.0, 13.0)));
  for (const auto& b : topology.bones) {
    if (is_metacarpal(b.bone_id) && digit_of(b.bone_id) != "thumb") continue;
    const Vec2& a = landmarks.at(b.origin);
    const Vec2& c = landmarks.at(b.reference);
    append(scan, skin_capsule(Vec3(a.x(), a.y(), 0.0), Vec3(c.x(), c.y(), 0.0), skin_radius(digit_of(b.bone_id))));
  }
  return scan;
}

/// Placeholder reference curve: force = 12 s + 30 s^2 N over strain [0, 0.3].
inline DeformationCurve human_curve() {
  DeformationCurve c;
  c.label = "human";
  for (int k = 0; k <= 15; ++k) {
    const double s = 0.02 * k;
    c.samples.push_back({s, 12.0 * s + 30.0 * s * s});
  }
  return c;
}

inline const std::vector<double>& candidate_sigmas() {
  static const std::vector<double> sigmas{0.3, 0.4, 0.5, 0.6, 0.8};
  return sigmas;
}

/// Candidate curves scaled by sigma / 0.4, so sigma = 0.4 reproduces the
/// reference exactly.
inline std::vector<DeformationCurve> curve_family() {
  std::vector<DeformationCurve> curves{human_curve()};
  for (double sigma : candidate_sigmas()) {
    DeformationCurve c = human_curve();
    c.label = "sigma=" + detail::format_float(sigma, 6);
    for (auto& s : c.samples) s.force *= sigma / 0.4;
    curves.push_back(std::move(c));
  }
  return curves;
}

/// Six finger designs. Design 5 mimics a conventional single-tendon hand
/// (large moment arms, weak angle dependence, stiff return) and is the
/// baseline; design 6 is the default.
inline DesignSet design_presets() {
  auto make = [](const char* id, std::array<double, 3> b, std::array<double, 3> h, std::array<double, 3> k, bool baseline) {
    FingerConfig cfg;
    cfg.design_id = id;
    for (int j = 0; j < 3; ++j) {
      cfg.stages[j] = TendonStage{b[j], h[j], static_cast<StageId>(j)};
      cfg.springs[j] = k[j];
    }
    cfg.baseline = baseline;
    return cfg;
  };
  DesignSet set;
  set.designs = {
      make("design1", {8.0, 6.0, 4.0}, {2.0, 1.5, 1.0}, {40.0, 25.0, 15.0}, false),
      make("design2", {7.0, 6.0, 5.0}, {2.5, 1.5, 1.0}, {30.0, 25.0, 20.0}, false),
      make("design3", {9.0, 5.0, 4.0}, {1.5, 1.5, 1.2}, {50.0, 20.0, 15.0}, false),
      make("design4", {8.0, 7.0, 3.0}, {1.0, 1.0, 1.0}, {35.0, 30.0, 10.0}, false),
      make("design5", {14.0, 10.0, 8.0}, {0.5, 0.3, 0.2}, {120.0, 100.0, 80.0}, true),
      make("design6", {8.0, 6.0, 4.0}, {2.0, 1.5, 1.0}, {30.0, 20.0, 12.0}, false),
  };
  set.displacement_max = 40.0;
  set.steps = 41;
  return set;
}

/// Writes a complete fixture directory: config.json, scan.stl,
/// landmarks.json, template/, curves.csv and designs.json.
inline void write_demo_fixture(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "template");
  const auto topology = default_topology();
  const auto templates = template_set(topology);
  for (const auto& [bone_id, mesh] : templates.meshes) {
    save_mesh(dir / "template" / (bone_id + ".stl"), mesh, MeshFormat::stl_binary);
  }
  write_json_file(dir / "template" / "landmarks.json", to_json(templates.landmarks));
  write_json_file(dir / "template" / "topology.json", to_json(topology));
  const auto target = target_landmarks();
  write_json_file(dir / "landmarks.json", to_json(target));
  save_mesh(dir / "scan.stl", scan_mesh(target, topology), MeshFormat::stl_binary);
  const auto csv = write_curves(curve_family());
  write_file_bytes(dir / "curves.csv", std::vector<std::uint8_t>(csv.begin(), csv.end()));
  write_json_file(dir / "designs.json", to_json(design_presets()));
  const nlohmann::json config = {
      {"scan", "scan.stl"},
      {"landmarks", "landmarks.json"},
      {"template_dir", "template"},
      {"output_dir", "out"},
      {"align_scan", false},
      {"tube", {{"sigma", 0.4}, {"support_count", 4}, {"support_radius", 0.5}}},
      {"holes", {{"diameter", 1.0}, {"depth", 0.0}, {"end_offset", 2.0}}},
      {"designs", "designs.json"},
      {"curves", "curves.csv"},
      {"human_label", "human"},
      {"mesh_format", "stl_binary"},
      {"seed", 7},
  };
  write_json_file(dir / "config.json", config);
}

}  // namespace handkit::synthetic
