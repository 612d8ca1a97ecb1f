#pragma once

// File-based pipeline stages behind the `handkit` command line tool. Each
// command reads its inputs from disk, writes its outputs to disk and
// returns a process exit status: 0 success, 1 domain failure, 2 usage or
// configuration error.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "handkit/deformation.hpp"
#include "handkit/kinematics.hpp"
#include "handkit/landmarks.hpp"
#include "handkit/mesh_io.hpp"
#include "handkit/template_match.hpp"
#include "handkit/tissue.hpp"

namespace handkit {

namespace fs = std::filesystem;

/// Malformed or inconsistent command input. Always exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  fs::path source;  // the config file itself
  fs::path scan;
  fs::path landmarks;
  fs::path template_dir;
  fs::path output_dir;
  std::optional<fs::path> designs;
  std::optional<fs::path> curves;
  std::optional<DesignSet> inline_designs;
  std::string human_label = "human";
  TubeSpec tube;
  HoleSpec holes;
  bool align_scan = false;
  MeshFormat mesh_format = MeshFormat::stl_binary;
  int seed = 0;
};

/// Relative paths resolve against the directory holding the config file.
inline PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path.string());
  nlohmann::json doc;
  try {
    doc = read_json_file(path);
  } catch (const Error& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
  PipelineConfig cfg;
  cfg.source = path;
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  try {
    if (!doc.is_object()) throw UsageError("config must be a JSON object");
    for (const char* key : {"scan", "landmarks", "template_dir", "output_dir"}) {
      if (!doc.contains(key)) throw UsageError(std::string("config is missing '") + key + "'");
    }
    cfg.scan = resolve(doc.at("scan").get<std::string>());
    cfg.landmarks = resolve(doc.at("landmarks").get<std::string>());
    cfg.template_dir = resolve(doc.at("template_dir").get<std::string>());
    cfg.output_dir = resolve(doc.at("output_dir").get<std::string>());
    if (doc.contains("designs")) {
      const auto& d = doc.at("designs");
      if (d.is_string()) {
        cfg.designs = resolve(d.get<std::string>());
      } else {
        cfg.inline_designs = design_set_from_json(d);
      }
    }
    if (doc.contains("curves")) cfg.curves = resolve(doc.at("curves").get<std::string>());
    cfg.human_label = doc.value("human_label", cfg.human_label);
    if (doc.contains("tube")) {
      const auto& t = doc.at("tube");
      cfg.tube.sigma = t.value("sigma", cfg.tube.sigma);
      cfg.tube.support_count = t.value("support_count", cfg.tube.support_count);
      cfg.tube.support_radius = t.value("support_radius", cfg.tube.support_radius);
    }
    if (doc.contains("holes")) {
      const auto& h = doc.at("holes");
      cfg.holes.diameter = h.value("diameter", cfg.holes.diameter);
      cfg.holes.depth = h.value("depth", cfg.holes.depth);
      cfg.holes.end_offset = h.value("end_offset", cfg.holes.end_offset);
    }
    cfg.align_scan = doc.value("align_scan", false);
    if (doc.contains("mesh_format")) cfg.mesh_format = mesh_format_from_string(doc.at("mesh_format").get<std::string>());
    cfg.seed = doc.value("seed", 0);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  } catch (const Error& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

namespace detail {

inline void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw UsageError(std::string(what) + " not found: " + p.string());
}

inline void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw UsageError("cannot create output directory " + p.string());
}

inline void write_text(const fs::path& p, const std::string& text) {
  write_file_bytes(p, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline void write_json(const fs::path& p, const nlohmann::json& doc) { write_text(p, doc.dump(2) + "\n"); }

/// Turns exceptions into the exit-status contract.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: [" << to_string(e.kind()) << "] " << e.message() << '\n';
    return e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::Io ? 2 : 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed input: " << e.what() << '\n';
    return 2;
  }
}

inline TriangleMesh load_scan(const PipelineConfig& cfg, std::vector<std::string>* warnings = nullptr) {
  auto scan = load_mesh(cfg.scan, warnings);
  if (cfg.align_scan) scan = align_midplane(scan).mesh;
  return scan;
}

inline DesignSet load_designs(const PipelineConfig& cfg) {
  if (cfg.inline_designs) return *cfg.inline_designs;
  if (!cfg.designs) throw UsageError("config names no designs");
  require_exists(*cfg.designs, "designs file");
  return design_set_from_json(read_json_file(*cfg.designs));
}

}  // namespace detail

/// Diagnostics for every input named by the config. Errors make the exit
/// status 1; warnings (including a non-watertight scan) do not.
inline int cmd_validate(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = load_config(config_path);
    detail::require_exists(cfg.scan, "scan mesh");
    detail::require_exists(cfg.landmarks, "landmark file");
    detail::require_exists(cfg.template_dir, "template directory");
    detail::require_exists(cfg.template_dir / "landmarks.json", "template landmark file");
    if (cfg.designs) detail::require_exists(*cfg.designs, "designs file");
    if (cfg.curves) detail::require_exists(*cfg.curves, "curves file");
    detail::ensure_dir(cfg.output_dir);

    nlohmann::json diagnostics = nlohmann::json::array();
    int errors = 0;
    auto note = [&](const std::string& level, const std::string& input, const std::string& message) {
      diagnostics.push_back({{"level", level}, {"input", input}, {"message", message}});
      if (level == "error") ++errors;
      out << "[" << level << "] " << input << ": " << message << '\n';
    };
    auto check = [&](const std::string& input, auto&& fn) {
      try {
        fn();
      } catch (const Error& e) {
        note("error", input, std::string(to_string(e.kind())) + ": " + e.message());
      } catch (const nlohmann::json::exception& e) {
        note("error", input, e.what());
      }
    };
    auto check_mesh = [&](const fs::path& path) {
      check(path.string(), [&] {
        std::vector<std::string> warnings;
        const auto mesh = load_mesh(path, &warnings);
        for (const auto& w : warnings) note("warning", path.string(), w);
        const auto report = analyze_mesh(mesh);
        if (!report.watertight) {
          note("warning", path.string(),
               std::to_string(report.boundary_edge_count) + " boundary and " + std::to_string(report.non_manifold_edge_count) +
                   " non-manifold edges; mesh is not watertight");
        }
      });
    };

    check_mesh(cfg.scan);
    check(cfg.landmarks.string(),
          [&] { load_landmarks(read_json_file(cfg.landmarks), LandmarkSource::target_hand); });
    check(cfg.template_dir.string(), [&] {
      const auto topology = load_template_topology(cfg.template_dir);
      load_landmarks(read_json_file(cfg.template_dir / "landmarks.json"), LandmarkSource::template_hand);
      for (const auto& b : topology.bones) {
        auto path = cfg.template_dir / (b.bone_id + ".stl");
        if (!fs::exists(path)) path = cfg.template_dir / (b.bone_id + ".obj");
        if (!fs::exists(path)) {
          note("error", cfg.template_dir.string(), "no template mesh for bone '" + b.bone_id + "'");
          continue;
        }
        check_mesh(path);
      }
    });
    check("tube", [&] { validate(cfg.tube); });
    if (cfg.designs || cfg.inline_designs) check("designs", [&] { detail::load_designs(cfg); });
    if (cfg.curves) {
      check(cfg.curves->string(), [&] {
        const auto bytes = read_file_bytes(*cfg.curves);
        load_curves(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      });
    }

    detail::write_json(cfg.output_dir / "validate.json", {{"errors", errors}, {"diagnostics", diagnostics}});
    out << (errors == 0 ? "ok" : "failed") << ": " << errors << " error(s)\n";
    return errors == 0 ? 0 : 1;
  });
}

struct FitBonesOptions {
  fs::path config;
  std::optional<fs::path> out;
  std::optional<MeshFormat> format;
  bool hole_meshes = false;
};

/// Writes bones/<bone_id>.<ext>, holes.json and transforms.json.
inline int cmd_fit_bones(const FitBonesOptions& options, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = load_config(options.config);
    detail::require_exists(cfg.landmarks, "landmark file");
    detail::require_exists(cfg.template_dir, "template directory");
    const auto format = options.format.value_or(cfg.mesh_format);
    const fs::path dir = options.out.value_or(cfg.output_dir) / "bones";
    detail::ensure_dir(dir);

    const auto topology = load_template_topology(cfg.template_dir);
    const auto templates = load_template_set(cfg.template_dir, topology);
    const auto target = load_landmarks(read_json_file(cfg.landmarks), LandmarkSource::target_hand);

    nlohmann::json transforms = nlohmann::json::array();
    nlohmann::json holes = nlohmann::json::object();
    for (const auto& entry : topology.bones) {
      try {
        const auto fit = fit_template(templates, BoneTopology{{entry}}, target).front();
        save_mesh(dir / (fit.bone_id + extension_for(format)), fit.mesh, format);
        auto t = to_json(fit.transform);
        t["bone_id"] = fit.bone_id;
        transforms.push_back(t);
        const auto poses = place_ligament_holes(fit.mesh, fit.target_frame, cfg.holes);
        holes[fit.bone_id] = nlohmann::json::array();
        for (std::size_t k = 0; k < poses.size(); ++k) {
          holes[fit.bone_id].push_back(to_json(poses[k]));
          if (options.hole_meshes) {
            save_mesh(dir / (fit.bone_id + "_hole" + std::to_string(k) + extension_for(format)), hole_cutter(poses[k]),
                      format);
          }
        }
        out << fit.bone_id << ": theta=" << detail::format_float(fit.transform.theta, 9)
            << " lambda=" << detail::format_float(fit.transform.lambda, 9) << '\n';
      } catch (const Error& e) {
        throw Error(e.kind(), "bone '" + entry.bone_id + "': " + e.message());
      }
    }
    detail::write_json(dir / "transforms.json", transforms);
    detail::write_json(dir / "holes.json", holes);
    out << "fitted " << topology.bones.size() << " bones into " << dir.string() << '\n';
    return 0;
  });
}

struct GenTissueOptions {
  fs::path config;
  std::optional<std::string> bone_id;  // all bones when empty
  std::optional<double> sigma;
  std::optional<fs::path> out;
  std::optional<MeshFormat> format;
  std::optional<fs::path> skin;       // use this skin segment instead of cutting the scan
  std::optional<fs::path> bone_mesh;  // use this bone instead of the fitted one
};

/// Writes tissue/<bone_id>_shell.<ext> and tissue/<bone_id>_report.json.
inline int cmd_gen_tissue(const GenTissueOptions& options, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = load_config(options.config);
    TubeSpec spec = cfg.tube;
    if (options.sigma) spec.sigma = *options.sigma;
    validate(spec);
    const auto format = options.format.value_or(cfg.mesh_format);
    const fs::path root = options.out.value_or(cfg.output_dir);
    const fs::path dir = root / "tissue";

    std::vector<std::string> bone_ids;
    if (options.bone_id) {
      bone_ids.push_back(*options.bone_id);
    } else if (options.bone_mesh && options.skin) {
      bone_ids.push_back(options.bone_mesh->stem().string());
    } else {
      bone_ids = load_template_topology(cfg.template_dir).bone_ids();
    }

    std::optional<TriangleMesh> scan;
    std::optional<LandmarkSet> target;
    BoneTopology topology;
    if (!options.skin) {
      detail::require_exists(cfg.scan, "scan mesh");
      detail::require_exists(cfg.landmarks, "landmark file");
      scan = detail::load_scan(cfg);
      target = load_landmarks(read_json_file(cfg.landmarks), LandmarkSource::target_hand);
      topology = load_template_topology(cfg.template_dir);
    }
    detail::ensure_dir(dir);

    for (const auto& bone_id : bone_ids) {
      TriangleMesh bone;
      if (options.bone_mesh) {
        detail::require_exists(*options.bone_mesh, "bone mesh");
        bone = load_mesh(*options.bone_mesh);
      } else {
        auto path = root / "bones" / (bone_id + ".stl");
        if (!fs::exists(path)) path = root / "bones" / (bone_id + ".obj");
        if (!fs::exists(path)) throw UsageError("fitted bone not found: " + path.string() + " (run fit-bones first)");
        bone = load_mesh(path);
      }
      try {
        TriangleMesh skin;
        if (options.skin) {
          detail::require_exists(*options.skin, "skin mesh");
          skin = load_mesh(*options.skin);
        } else {
          const auto frame = bone_frame(*target, topology, bone_id);
          const Vec3 start(frame.origin.x(), frame.origin.y(), 0.0);
          const Vec3 end = start + Vec3(frame.reference.x(), frame.reference.y(), 0.0);
          skin = extract_segment(*scan, start, end, vertex_centroid(bone));
        }
        const auto shell = build_concentric_tube(skin, bone, spec);
        const auto exported = export_shell(shell, format);
        write_file_bytes(dir / (bone_id + "_shell" + extension_for(format)), exported.mesh_bytes);
        auto report = exported.report;
        report["bone_id"] = bone_id;
        detail::write_json(dir / (bone_id + "_report.json"), report);
        char line[256];
        std::snprintf(line, sizeof line, "%s: sigma=%.3g mm hollow=%.4g ml solid=%.4g ml\n", bone_id.c_str(),
                      shell.sigma, shell.material_volume_mm3 / 1000.0, shell.solid_volume_mm3 / 1000.0);
        out << line;
        for (const auto& w : shell.warnings) out << "  warning: " << w << '\n';
      } catch (const Error& e) {
        throw Error(e.kind(), "bone '" + bone_id + "': " + e.message());
      }
    }
    return 0;
  });
}

struct SelectThicknessOptions {
  fs::path curves;
  std::string human_label = "human";
  CurveMetric metric = CurveMetric::rms;
  int grid_points = 100;
  std::optional<fs::path> out;
};

/// Candidates are the curves labeled "sigma=<mm>"; other labels besides the
/// reference are skipped with a warning.
inline int cmd_select_thickness(const SelectThicknessOptions& options, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    detail::require_exists(options.curves, "curves file");
    const auto bytes = read_file_bytes(options.curves);
    const auto curves = load_curves(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    std::optional<DeformationCurve> human;
    std::vector<ThicknessCandidate> candidates;
    for (const auto& c : curves) {
      if (c.label == options.human_label) {
        human = c;
      } else if (auto sigma = sigma_from_label(c.label)) {
        candidates.push_back({*sigma, c});
      } else {
        err << "warning: ignoring curve '" << c.label << "'\n";
      }
    }
    if (!human) throw UsageError("no curve labeled '" + options.human_label + "'");
    SelectionOptions sel;
    sel.metric = options.metric;
    sel.grid_points = options.grid_points;
    const auto result = select_thickness(candidates, *human, sel);
    out << "sigma_mm,distance_N\n";
    for (const auto& [sigma, d] : result.distances) {
      out << detail::format_float(sigma, 6) << ',' << detail::format_float(d, 9) << '\n';
    }
    out << "sigma* = " << detail::format_float(result.sigma_star, 6) << " mm\n";
    if (options.out) {
      detail::ensure_dir(*options.out);
      detail::write_json(*options.out / "thickness.json", to_json(result, options.metric));
    }
    return 0;
  });
}

struct SimulateOptions {
  std::optional<fs::path> config;
  std::optional<fs::path> designs;  // overrides the config's designs
  std::vector<std::string> design_ids;
  std::optional<double> displacement_max;
  std::optional<int> steps;
  std::optional<fs::path> out;
};

/// Writes trajectories/<design_id>.csv (displacement,y,z) and
/// trajectories/comparison.json.
inline int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    DesignSet set;
    fs::path root;
    if (options.designs) {
      detail::require_exists(*options.designs, "designs file");
      set = design_set_from_json(read_json_file(*options.designs));
      root = options.designs->parent_path() / "out";
    }
    if (options.config) {
      const auto cfg = load_config(*options.config);
      if (!options.designs) set = detail::load_designs(cfg);
      root = cfg.output_dir;
    }
    if (!options.config && !options.designs) throw UsageError("simulate needs --config or --designs");
    if (options.out) root = *options.out;
    const double dmax = options.displacement_max.value_or(set.displacement_max);
    const int steps = options.steps.value_or(set.steps);
    if (steps < 2) throw UsageError("--steps must be at least 2");
    if (!(dmax >= 0.0)) throw UsageError("--displacement-max must be >= 0");

    std::vector<FingerConfig> chosen;
    if (options.design_ids.empty()) {
      chosen = set.designs;
    } else {
      for (const auto& id : options.design_ids) {
        auto it = std::find_if(set.designs.begin(), set.designs.end(), [&](const auto& d) { return d.design_id == id; });
        if (it == set.designs.end()) throw UsageError("unknown design '" + id + "'");
        chosen.push_back(*it);
      }
    }
    const auto comparison = compare_designs(chosen, dmax, steps);

    const fs::path dir = root / "trajectories";
    detail::ensure_dir(dir);
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const auto& t = comparison.trajectories[i];
      std::string csv = "displacement,y,z\n";
      for (std::size_t k = 0; k < t.points.size(); ++k) {
        csv += detail::format_float(t.displacements[k], 17) + "," + detail::format_float(t.points[k].y, 17) + "," +
               detail::format_float(t.points[k].z, 17) + "\n";
      }
      detail::write_text(dir / (chosen[i].design_id + ".csv"), csv);
    }
    auto report = to_json(comparison);
    report["displacement_max"] = dmax;
    report["steps"] = steps;
    detail::write_json(dir / "comparison.json", report);
    for (const auto& m : comparison.ranking) {
      out << m.design_id << (m.baseline ? " (baseline)" : "") << ": min y = " << detail::format_float(m.min_y, 6)
          << " mm\n";
    }
    return 0;
  });
}

/// Mesh statistics for one file, or the landmark schema with no file.
inline int cmd_info(const std::optional<fs::path>& mesh_path, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (!mesh_path) {
      out << nlohmann::json{{"landmark_schema", kLandmarkSchemaVersion},
                            {"landmarks", landmark_schema()},
                            {"topology", to_json(default_topology())}}
                 .dump(2)
          << '\n';
      return 0;
    }
    detail::require_exists(*mesh_path, "mesh");
    std::vector<std::string> warnings;
    const auto mesh = load_mesh(*mesh_path, &warnings);
    const auto r = analyze_mesh(mesh);
    const auto bb = bounding_box(mesh);
    out << nlohmann::json{{"name", mesh.name},
                          {"vertices", mesh.vertex_count()},
                          {"faces", mesh.face_count()},
                          {"components", split_components(mesh).size()},
                          {"watertight", r.watertight},
                          {"boundary_edges", r.boundary_edge_count},
                          {"nonmanifold_edges", r.non_manifold_edge_count},
                          {"signed_volume_mm3", signed_volume(mesh)},
                          {"surface_area_mm2", surface_area(mesh)},
                          {"bbox_min", {bb.min.x(), bb.min.y(), bb.min.z()}},
                          {"bbox_max", {bb.max.x(), bb.max.y(), bb.max.z()}},
                          {"warnings", warnings}}
               .dump(2)
        << '\n';
    return 0;
  });
}

}  // namespace handkit
