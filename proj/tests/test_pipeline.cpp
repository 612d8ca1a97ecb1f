// The handkit command line run against copies of the demo fixture.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "handkit/mesh_io.hpp"
#include "handkit/primitives.hpp"
#include "handkit/template_match.hpp"

using namespace handkit;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("handkit_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Fresh copy of the demo fixture.
fs::path fixture(const std::string& name) {
  const fs::path dir = scratch(name);
  fs::copy(fs::path(HANDKIT_DATA_DIR) / "demo", dir, fs::copy_options::recursive);
  return dir;
}

Run run(const fs::path& dir, const std::string& args) {
  Run r;
  const std::string cmd = "cd '" + dir.string() + "' && '" + HANDKIT_CLI + "' " + args + " >stdout.txt 2>stderr.txt";
  const int status = std::system(cmd.c_str());
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(dir / "stdout.txt");
  r.err = slurp(dir / "stderr.txt");
  return r;
}

void edit_config(const fs::path& dir, const std::function<void(nlohmann::json&)>& fn) {
  auto cfg = read_json_file(dir / "config.json");
  fn(cfg);
  write_json_file(dir / "config.json", cfg);
}

double ball(double r) { return 4.0 / 3.0 * std::numbers::pi * r * r * r; }

}  // namespace

TEST(Validate, DemoFixturePasses) {
  const auto dir = fixture("validate_ok");
  const auto r = run(dir, "validate --config config.json");
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_EQ(read_json_file(dir / "out" / "validate.json").at("errors").get<int>(), 0);
}

TEST(Validate, MissingLandmarkFileIsUsageError) {
  const auto dir = fixture("validate_missing");
  fs::remove(dir / "landmarks.json");
  const auto r = run(dir, "validate --config config.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("landmarks.json"), std::string::npos) << r.err;
}

TEST(Validate, OpenScanOnlyWarns) {
  const auto dir = fixture("validate_open");
  auto scan = load_mesh(dir / "scan.stl");
  scan.faces.pop_back();
  save_mesh(dir / "scan.stl", scan, MeshFormat::stl_binary);
  const auto r = run(dir, "validate --config config.json");
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("warning"), std::string::npos) << r.out;
}

TEST(Validate, MissingLandmarkEntryFailsByName) {
  const auto dir = fixture("validate_schema");
  auto lm = read_json_file(dir / "landmarks.json");
  lm.erase("ring_dip");
  write_json_file(dir / "landmarks.json", lm);
  auto r = run(dir, "validate --config config.json");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("ring_dip"), std::string::npos) << r.out;
  r = run(dir, "fit-bones --config config.json");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ring_dip"), std::string::npos) << r.err;
}

TEST(Validate, MalformedConfigIsUsageError) {
  const auto dir = scratch("validate_badconfig");
  std::ofstream(dir / "config.json") << "{ not json";
  EXPECT_EQ(run(dir, "validate --config config.json").code, 2);
  EXPECT_EQ(run(dir, "validate").code, 2);
  EXPECT_EQ(run(dir, "no-such-command").code, 2);
}

TEST(FitBones, IdentityFixtureIsByteIdentical) {
  const auto dir = fixture("fit_identity");
  edit_config(dir, [](nlohmann::json& c) { c["landmarks"] = "template/landmarks.json"; });
  const auto r = run(dir, "fit-bones --config config.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto transforms = read_json_file(dir / "out" / "bones" / "transforms.json");
  ASSERT_EQ(transforms.size(), 19u);
  for (const auto& t : transforms) {
    EXPECT_EQ(t.at("theta").get<double>(), 0.0);
    EXPECT_EQ(t.at("lambda").get<double>(), 1.0);
    EXPECT_EQ(t.at("translation"), nlohmann::json({0.0, 0.0, 0.0}));
    const std::string id = t.at("bone_id");
    EXPECT_EQ(slurp(dir / "out" / "bones" / (id + ".stl")), slurp(dir / "template" / (id + ".stl"))) << id;
  }
}

TEST(FitBones, ScaledFixture) {
  const auto dir = fixture("fit_scaled");
  auto lm = read_json_file(dir / "template" / "landmarks.json");
  for (auto& [name, p] : lm.items()) p = {1.2 * p[0].get<double>(), 1.2 * p[1].get<double>()};
  write_json_file(dir / "landmarks.json", lm);
  const auto r = run(dir, "fit-bones --config config.json --format obj --hole-meshes");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& t : read_json_file(dir / "out" / "bones" / "transforms.json")) {
    EXPECT_NEAR(t.at("lambda").get<double>(), 1.2, 1e-12);
    EXPECT_NEAR(t.at("theta").get<double>(), 0.0, 1e-12);
  }
  EXPECT_TRUE(fs::exists(dir / "out" / "bones" / "index_proximal.obj"));
  EXPECT_TRUE(fs::exists(dir / "out" / "bones" / "index_proximal_hole0.obj"));
  EXPECT_EQ(read_json_file(dir / "out" / "bones" / "holes.json").size(), 19u);
}

TEST(GenTissue, SpherePairFromExplicitMeshes) {
  const auto dir = fixture("tissue_spheres");
  edit_config(dir, [](nlohmann::json& c) { c["tube"]["support_count"] = 0; });
  save_mesh(dir / "skin.stl", icosphere(10.0, 4), MeshFormat::stl_binary);
  save_mesh(dir / "bone.stl", icosphere(5.0, 4), MeshFormat::stl_binary);
  const auto r = run(dir, "gen-tissue --config config.json --bone ball --skin skin.stl --bone-mesh bone.stl");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = read_json_file(dir / "out" / "tissue" / "ball_report.json");
  const double exact = ball(9.6) - ball(5.4);
  EXPECT_LT(std::abs(report.at("material_volume_mm3").get<double>() - exact) / exact, 0.01);
  const auto shell = load_mesh(dir / "out" / "tissue" / "ball_shell.stl");
  EXPECT_EQ(split_components(shell).size(), 2u);
}

TEST(GenTissue, UsageErrors) {
  const auto dir = fixture("tissue_usage");
  auto r = run(dir, "gen-tissue --config config.json --bone index_proximal");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("fit-bones"), std::string::npos) << r.err;
  ASSERT_EQ(run(dir, "fit-bones --config config.json").code, 0);
  EXPECT_EQ(run(dir, "gen-tissue --config config.json --bone index_proximal --sigma 0").code, 2);
  EXPECT_EQ(run(dir, "gen-tissue --config config.json --bone index_proximal --sigma 5").code, 1);
  EXPECT_EQ(run(dir, "gen-tissue --config config.json --bone index_proximal --format ply").code, 2);
}

TEST(Simulate, StepsAndDisplacement) {
  const auto dir = fixture("simulate");
  EXPECT_EQ(run(dir, "simulate --config config.json --steps 1").code, 2);
  auto r = run(dir, "simulate --config config.json --displacement-max 0 --steps 3 --design design1");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "out" / "trajectories" / "design1.csv"), "displacement,y,z\n0,90,0\n0,90,0\n0,90,0\n");
  r = run(dir, "simulate --designs designs.json --out sim");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cmp = read_json_file(dir / "sim" / "trajectories" / "comparison.json");
  EXPECT_TRUE(cmp.at("ranking").back().at("baseline").get<bool>());
  EXPECT_EQ(run(dir, "simulate --config config.json --design nope").code, 2);
}

TEST(SelectThickness, DemoCurves) {
  const auto dir = fixture("select");
  auto r = run(dir, "select-thickness curves.csv --out sel");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("sigma* = 0.4 mm"), std::string::npos) << r.out;
  EXPECT_EQ(read_json_file(dir / "sel" / "thickness.json").at("sigma_star_mm").get<double>(), 0.4);
  EXPECT_EQ(run(dir, "select-thickness curves.csv --human nobody").code, 2);
  EXPECT_EQ(run(dir, "select-thickness missing.csv").code, 2);
}

TEST(Pipeline, RepeatedRunsAreByteIdentical) {
  const auto dir = fixture("determinism");
  for (const char* out : {"a", "b"}) {
    const std::string o = std::string(" --out ") + out;
    ASSERT_EQ(run(dir, "fit-bones --config config.json" + o).code, 0);
    ASSERT_EQ(run(dir, "gen-tissue --config config.json --bone middle_proximal" + o).code, 0);
    ASSERT_EQ(run(dir, "simulate --config config.json --steps 11" + o).code, 0);
  }
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir / "a");
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 20u);
}

TEST(Info, SchemaAndMesh) {
  const auto dir = fixture("info");
  auto r = run(dir, "info");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out).at("landmarks").size(), 25u);
  r = run(dir, "info scan.stl");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(nlohmann::json::parse(r.out).at("watertight").get<bool>());
}
