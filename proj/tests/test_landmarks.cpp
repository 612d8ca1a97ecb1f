// Landmark schema, bone frames and midplane alignment.

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "handkit/landmarks.hpp"
#include "handkit/primitives.hpp"
#include "handkit/synthetic.hpp"

using namespace handkit;

namespace {

nlohmann::json full_document() { return to_json(synthetic::template_landmarks()); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

}  // namespace

TEST(LandmarkSchema, TwentyFiveNamesNineteenBones) {
  EXPECT_EQ(landmark_schema().size(), 25u);
  const auto topo = default_topology();
  EXPECT_EQ(topo.bones.size(), 19u);
  EXPECT_NO_THROW(validate(topo));
  for (const auto& b : topo.bones) {
    EXPECT_TRUE(is_landmark_name(b.origin)) << b.origin;
    EXPECT_TRUE(is_landmark_name(b.reference)) << b.reference;
  }
}

TEST(LandmarkSchema, TopologyJsonRoundTrip) {
  const auto topo = default_topology();
  const auto back = topology_from_json(to_json(topo));
  EXPECT_EQ(back.bone_ids(), topo.bone_ids());
}

TEST(LoadLandmarks, ValidDocument) {
  const auto set = load_landmarks(full_document());
  EXPECT_EQ(set.points.size(), 25u);
  EXPECT_EQ(set.at("middle_tip"), Vec2(-6, 181));
  const auto wrapped = load_landmarks(nlohmann::json{{"landmarks", full_document()}});
  EXPECT_EQ(wrapped.points, set.points);
}

TEST(LoadLandmarks, MissingEntryIsNamed) {
  auto doc = full_document();
  doc.erase("ring_dip");
  try {
    load_landmarks(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaViolation);
    EXPECT_NE(std::string(e.what()).find("ring_dip"), std::string::npos) << e.what();
  }
}

TEST(LoadLandmarks, UnknownNameRejected) {
  auto doc = full_document();
  doc["wrist_x"] = {1.0, 2.0};
  EXPECT_EQ(kind_of([&] { load_landmarks(doc); }), ErrorKind::SchemaViolation);
  auto bad = full_document();
  bad["wrist_center"] = {1.0};
  EXPECT_EQ(kind_of([&] { load_landmarks(bad); }), ErrorKind::SchemaViolation);
}

TEST(BoneFrame, Subtraction) {
  LandmarkSet s = synthetic::template_landmarks();
  s.points["index_mcp"] = Vec2(10, 20);
  s.points["index_pip"] = Vec2(10, 50);
  const auto f = bone_frame(s, default_topology(), "index_proximal");
  EXPECT_EQ(f.origin, Vec2(10, 20));
  EXPECT_EQ(f.reference, Vec2(0, 30));
}

TEST(BoneFrame, CoincidentLandmarks) {
  LandmarkSet s = synthetic::template_landmarks();
  s.points["thumb_ip"] = s.points["thumb_tip"];
  EXPECT_EQ(kind_of([&] { bone_frame(s, default_topology(), "thumb_distal"); }), ErrorKind::ZeroReference);
}

TEST(BoneFrame, AllNineteenBones) {
  const auto s = synthetic::template_landmarks();
  const auto topo = default_topology();
  int n = 0;
  for (const auto& id : topo.bone_ids()) {
    EXPECT_NO_THROW(bone_frame(s, topo, id));
    ++n;
  }
  EXPECT_EQ(n, 19);
}

TEST(AlignMidplane, AlignedInputIsFixedPoint) {
  const auto m = box(Vec3(-3, -2, -1), Vec3(3, 2, 1));
  const auto a = align_midplane(m);
  EXPECT_LT((a.transform.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-6);
  EXPECT_LT(a.transform.translation.norm(), 1e-6);
}

TEST(AlignMidplane, PlateInXPlaneLandsInZPlane) {
  TriangleMesh plate;
  plate.vertices = {Vec3(0, 0, 0), Vec3(0, 8, 0), Vec3(0, 8, 3), Vec3(0, 0, 3), Vec3(0, 4, 1.5)};
  plate.faces = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  const auto a = align_midplane(plate);
  for (const auto& p : a.mesh.vertices) EXPECT_NEAR(p.z(), 0.0, 1e-9);
  const Vec3 mapped = a.transform.rotation * Vec3::UnitX();
  EXPECT_NEAR(std::abs(mapped.z()), 1.0, 1e-12);
}

TEST(AlignMidplane, SphereCentroidAtOrigin) {
  const auto a = align_midplane(icosphere(5.0, 2, Vec3(3, -4, 7)));
  EXPECT_LT(vertex_centroid(a.mesh).norm(), 1e-9);
}

TEST(AlignMidplane, RigidAndIdempotent) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto m = box(Vec3(0, 0, 0), Vec3(20, 9, 3));
  append(m, icosphere(2.0, 1, Vec3(4, 4, 4)));
  const Eigen::Quaterniond q = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
  m = transformed(m, [&](const Vec3& p) { return Vec3(q * p + Vec3(5, 6, 7)); });
  const auto a = align_midplane(m);
  EXPECT_NEAR(a.transform.rotation.determinant(), 1.0, 1e-12);
  EXPECT_NEAR(signed_volume(a.mesh), signed_volume(m), 1e-9);
  for (std::size_t i = 1; i < m.vertices.size(); i += 7) {
    EXPECT_NEAR((a.mesh.vertices[i] - a.mesh.vertices[0]).norm(), (m.vertices[i] - m.vertices[0]).norm(), 1e-9);
  }
  const auto b = align_midplane(a.mesh);
  EXPECT_LT((b.transform.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-6);
  EXPECT_LT(b.transform.translation.norm(), 1e-9);
}

TEST(AlignMidplane, CollinearPointsAreDegenerate) {
  TriangleMesh line;
  line.vertices = {Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2)};
  line.faces = {{0, 1, 2}};
  EXPECT_EQ(kind_of([&] { align_midplane(line); }), ErrorKind::DegenerateGeometry);
}
