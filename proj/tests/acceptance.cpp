// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "handkit/deformation.hpp"
#include "handkit/kinematics.hpp"
#include "handkit/mesh_io.hpp"
#include "handkit/primitives.hpp"
#include "handkit/synthetic.hpp"
#include "handkit/template_match.hpp"
#include "handkit/tissue.hpp"
#include "oracles.hpp"

using namespace handkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double ball(double r) { return 4.0 / 3.0 * std::numbers::pi * r * r * r; }

Outcome transform_exactness() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  double worst = 0.0;
  bool lambda_exact = true;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) {
    BoneFrame a, b;
    a.origin = Vec2(u(rng), u(rng));
    a.reference = Vec2(u(rng), u(rng));
    b.origin = Vec2(u(rng), u(rng));
    b.reference = Vec2(u(rng), u(rng));
    const auto t = estimate_transform(a, b);
    const Vec2 want = b.origin + b.reference;
    worst = std::max(worst, (t.apply(Vec2(a.origin + a.reference)) - want).norm() / want.norm());
    lambda_exact = lambda_exact && t.lambda == b.reference.norm() / a.reference.norm();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst < 1e-9 && lambda_exact && secs < 1.0,
          "max relative error " + fmt("%.2e", worst) + (lambda_exact ? ", lambda exact" : ", lambda NOT exact") +
              ", " + fmt("%.4f", secs) + " s"};
}

Outcome identity_fixture() {
  const auto topo = default_topology();
  const auto templates = synthetic::template_set(topo);
  const auto fits = fit_template(templates, topo, templates.landmarks);
  int good = 0;
  for (const auto& f : fits) {
    const bool same = f.transform.theta == 0.0 && f.transform.lambda == 1.0 && f.transform.translation.isZero(0.0) &&
                      write_mesh(f.mesh, MeshFormat::stl_binary) ==
                          write_mesh(templates.meshes.at(f.bone_id), MeshFormat::stl_binary);
    good += same;
  }
  return {fits.size() == 19 && good == 19, std::to_string(good) + "/" + std::to_string(fits.size()) +
                                                " bones exact with byte-identical binary STL"};
}

Outcome sphere_offset() {
  const auto r = offset_surface(icosphere(10.0, 4), -0.4);
  double worst = 0.0;
  for (const auto& p : r.mesh.vertices) worst = std::max(worst, std::abs(p.norm() - 9.6));
  const double rel = std::abs(signed_volume(r.mesh) - ball(9.6)) / ball(9.6);
  return {worst <= 1e-6 && rel < 0.005,
          "max radius error " + fmt("%.2e", worst) + " mm, volume error " + fmt("%.3f", 100 * rel) + "%"};
}

Outcome concentric_volume() {
  TubeSpec spec;
  spec.support_count = 0;
  spec.sigma = 0.4;
  const auto skin = icosphere(10.0, 4), bone = icosphere(5.0, 4);
  const double exact = ball(9.6) - ball(5.4);
  const double rel = std::abs(build_concentric_tube(skin, bone, spec).material_volume_mm3 - exact) / exact;
  bool hollow_less = true, decreasing = true;
  double previous = std::numeric_limits<double>::infinity();
  std::string table;
  for (double sigma : synthetic::candidate_sigmas()) {
    spec.sigma = sigma;
    const auto shell = build_concentric_tube(skin, bone, spec);
    hollow_less = hollow_less && shell.material_volume_mm3 < shell.solid_volume_mm3;
    decreasing = decreasing && shell.material_volume_mm3 < previous;
    previous = shell.material_volume_mm3;
    table += " " + fmt("%.1f", shell.material_volume_mm3);
  }
  return {rel < 0.01 && hollow_less && decreasing,
          "sigma=0.4 error " + fmt("%.3f", 100 * rel) + "%, volumes (mm3)" + table +
              (hollow_less ? "" : ", hollow NOT below solid") + (decreasing ? "" : ", NOT decreasing")};
}

Outcome landsmeer() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> b(0.5, 20.0), h(0.0, 5.0), phi(0.0, 2.0);
  double worst_stage = 0.0, worst_cum = 0.0, worst_identity = 0.0;
  int bit_exact = 0;
  for (int i = 0; i < 10000; ++i) {
    FingerConfig c;
    for (int j = 0; j < 3; ++j) c.stages[j] = TendonStage{b(rng), h(rng), static_cast<StageId>(j)};
    const std::array<double, 3> a{phi(rng), phi(rng), phi(rng)};
    std::array<double, 3> e{};
    for (int j = 0; j < 3; ++j) {
      e[j] = tendon_excursion(c.stages[j], a[j]);
      worst_stage = std::max(worst_stage, std::abs(e[j] - oracle::excursion(c.stages[j].b, c.stages[j].h, a[j])));
    }
    const auto L = cumulative_excursion(c, JointState{a});
    worst_cum = std::max(worst_cum, std::abs(L.distal - oracle::distal_excursion(c, a)));
    const double di = (L.intermediate - L.proximal) - e[1];
    const double dd = (L.distal - L.proximal - L.intermediate) - e[2];
    worst_identity = std::max({worst_identity, std::abs(di), std::abs(dd), std::abs(L.proximal - e[0])});
    bit_exact += di == 0.0 && dd == 0.0;
  }
  return {worst_stage <= 1e-12 && worst_cum <= 1e-12 && worst_identity <= 1e-12,
          "stage error " + fmt("%.1e", worst_stage) + ", cumulative error " + fmt("%.1e", worst_cum) +
              ", identity error " + fmt("%.1e", worst_identity) + " (" + std::to_string(bit_exact) +
              "/10000 bit-exact)"};
}

Outcome solver_vs_lattice() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> b(1.0, 15.0), h(0.0, 3.0), k(5.0, 150.0), frac(0.02, 0.98);
  double worst_gap = 0.0, worst_residual = 0.0, worst_undercut = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 50; ++i) {
    FingerConfig c;
    for (int j = 0; j < 3; ++j) {
      c.stages[j] = TendonStage{b(rng), h(rng), static_cast<StageId>(j)};
      c.springs[j] = k(rng);
    }
    const double d = frac(rng) * oracle::distal_excursion(c, c.limits);
    const auto sol = solve_flexion(c, d);
    const double e = elastic_energy(c, sol.state);
    const auto ref = oracle::lattice_minimum(c, d);
    worst_gap = std::max(worst_gap, std::abs(ref.energy - e));
    worst_undercut = std::max(worst_undercut, e - ref.energy);
    worst_residual = std::max(worst_residual, std::abs(cumulative_excursion(c, sol.state).distal - d));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst_gap < 1e-3 && worst_residual < 1e-9 && secs < 60.0,
          "max |E - E_lattice| " + fmt("%.2e", worst_gap) + " N mm (solver above lattice by at most " +
              fmt("%.1e", std::max(0.0, worst_undercut)) + "), residual " + fmt("%.1e", worst_residual) + " mm, " +
              fmt("%.2f", secs) + " s"};
}

Outcome trajectories() {
  const auto set = synthetic::design_presets();
  const auto cmp = compare_designs(set.designs, set.displacement_max, set.steps);
  bool monotone = true;
  for (const auto& t : cmp.trajectories) {
    for (std::size_t k = 1; k < t.points.size(); ++k) monotone = monotone && t.points[k].y <= t.points[k - 1].y;
  }
  const auto& top = cmp.ranking.back();
  const bool baseline_shallowest =
      top.baseline && cmp.ranking.size() > 1 && top.min_y > cmp.ranking[cmp.ranking.size() - 2].min_y;
  return {monotone && baseline_shallowest,
          std::to_string(cmp.trajectories.size()) + " designs, y " + (monotone ? "non-increasing" : "NOT monotone") +
              ", baseline " + top.design_id + " min y " + fmt("%.2f", top.min_y) + " mm vs next " +
              fmt("%.2f", cmp.ranking[cmp.ranking.size() - 2].min_y) + " mm"};
}

Outcome sigma_selection() {
  const auto bytes = read_file_bytes(fs::path(HANDKIT_DATA_DIR) / "demo" / "curves.csv");
  const auto curves = load_curves(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  const DeformationCurve* human = nullptr;
  std::vector<ThicknessCandidate> candidates;
  for (const auto& c : curves) {
    if (c.label == "human") human = &c;
    if (auto s = sigma_from_label(c.label)) candidates.push_back({*s, c});
  }
  if (!human) return {false, "no human curve in the shipped table"};
  std::sort(candidates.begin(), candidates.end(), [](auto& a, auto& b) { return a.sigma < b.sigma; });
  int orders = 0, correct = 0;
  do {
    const auto r = select_thickness(candidates, *human);
    const auto it = std::find_if(r.distances.begin(), r.distances.end(), [](auto& p) { return p.first == 0.4; });
    correct += r.sigma_star == 0.4 && it != r.distances.end() && it->second == 0.0;
    ++orders;
  } while (std::next_permutation(candidates.begin(), candidates.end(),
                                 [](auto& a, auto& b) { return a.sigma < b.sigma; }));
  return {orders > 1 && correct == orders,
          "sigma* = 0.4 with distance 0 in " + std::to_string(correct) + "/" + std::to_string(orders) + " orderings"};
}

TriangleMesh random_mesh(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-50.0, 50.0), size(0.5, 20.0), jitter(-0.05, 0.05);
  std::uniform_int_distribution<int> kind(0, 2), sub(0, 3);
  TriangleMesh m;
  const Vec3 c(u(rng), u(rng), u(rng));
  switch (kind(rng)) {
    case 0: m = icosphere(size(rng), sub(rng), c); break;
    case 1: m = box(c, c + Vec3(size(rng), size(rng), size(rng))); break;
    default: m = capsule(c, c + Vec3(size(rng), size(rng), size(rng)), size(rng) / 4, 8 + sub(rng) * 4, 2 + sub(rng)); break;
  }
  for (auto& p : m.vertices) p += Vec3(jitter(rng), jitter(rng), jitter(rng));
  return m;
}

Outcome format_round_trip() {
  std::mt19937_64 rng(909);
  int ok_obj = 0, ok_ascii = 0, ok_bin = 0;
  for (int i = 0; i < 100; ++i) {
    const auto m = random_mesh(rng);
    const auto exact = oracle::face_coords(m);
    const auto obj = parse_mesh(std::span<const std::uint8_t>(write_mesh(m, MeshFormat::obj)));
    ok_obj += oracle::face_coords(obj) == exact;
    const auto ascii = parse_mesh(std::span<const std::uint8_t>(write_mesh(m, MeshFormat::stl_ascii)));
    ok_ascii += oracle::face_coords(ascii) == exact;
    const auto bytes = write_mesh(m, MeshFormat::stl_binary);
    const auto bin = parse_mesh(std::span<const std::uint8_t>(bytes));
    auto rounded = m;
    for (auto& p : rounded.vertices) p = p.cast<float>().cast<double>();
    ok_bin += oracle::face_coords(bin) == oracle::face_coords(rounded) &&
              write_mesh(m, MeshFormat::stl_binary) == bytes && write_mesh(bin, MeshFormat::stl_binary) == bytes;
  }
  return {ok_obj == 100 && ok_ascii == 100 && ok_bin == 100,
          "obj " + std::to_string(ok_obj) + "/100, ascii stl " + std::to_string(ok_ascii) + "/100, binary stl " +
              std::to_string(ok_bin) + "/100 (deterministic)"};
}

Outcome end_to_end() {
  const fs::path dir = fs::temp_directory_path() / "handkit_acceptance_demo";
  fs::remove_all(dir);
  fs::copy(fs::path(HANDKIT_DATA_DIR) / "demo", dir, fs::copy_options::recursive);
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* step : {"validate", "fit-bones", "gen-tissue", "simulate"}) {
    const std::string cmd = "cd '" + dir.string() + "' && '" + HANDKIT_CLI + "' " + step +
                            " --config config.json >>log.txt 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      return {false, std::string(step) + " failed; see " + (dir / "log.txt").string()};
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  int meshes = 0, leaky = 0, shells = 0;
  for (const auto& sub : {"bones", "tissue"}) {
    for (const auto& e : fs::directory_iterator(dir / "out" / sub)) {
      if (e.path().extension() != ".stl") continue;
      ++meshes;
      shells += sub == std::string("tissue");
      for (const auto& part : split_components(load_mesh(e.path()))) leaky += !analyze_mesh(part).watertight;
    }
  }
  const bool trajectories = fs::exists(dir / "out" / "trajectories" / "comparison.json");
  return {secs < 120.0 && leaky == 0 && shells == 19 && meshes == 38 && trajectories,
          std::to_string(meshes) + " meshes (" + std::to_string(shells) + " shells), " + std::to_string(leaky) +
              " open components, " + fmt("%.1f", secs) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"transform exactness", transform_exactness},
      {"identity fixture", identity_fixture},
      {"sphere offset oracle", sphere_offset},
      {"concentric-shell volume", concentric_volume},
      {"Landsmeer oracle", landsmeer},
      {"underactuation solver vs lattice", solver_vs_lattice},
      {"trajectory ordering", trajectories},
      {"sigma selection", sigma_selection},
      {"format round-trip", format_round_trip},
      {"end-to-end demo", end_to_end},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
