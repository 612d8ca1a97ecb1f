// handkit: command line front end for the hand fabrication pipeline.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "handkit/landmarks.hpp"
#include "handkit/pipeline.hpp"
#include "handkit/synthetic.hpp"

namespace {

template <class T>
std::optional<T> opt(const CLI::Option* o, const T& v) {
  return o->count() ? std::optional<T>(v) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace handkit;
  CLI::App app{"Template-based robotic hand fabrication toolkit"};
  app.require_subcommand(1);

  std::string config, out, format_name, bone_id, skin, bone_mesh, designs, curves, human = "human", metric = "rms",
                                                                              mesh_path;
  double sigma = 0.0, dmax = 0.0;
  int steps = 0, grid = 100;
  bool hole_meshes = false;
  std::vector<std::string> design_ids;
  const std::vector<std::string> formats{"stl_binary", "stl_ascii", "obj"};

  auto* validate_cmd = app.add_subcommand("validate", "check every input named by a config");
  validate_cmd->add_option("--config", config, "pipeline config (JSON)")->required();

  auto* fit = app.add_subcommand("fit-bones", "fit template bones to the target landmarks");
  fit->add_option("--config", config)->required();
  auto* fit_out = fit->add_option("--out", out, "output root (default: config output_dir)");
  auto* fit_fmt = fit->add_option("--format", format_name)->check(CLI::IsMember(formats));
  fit->add_flag("--hole-meshes", hole_meshes, "also write one cutter mesh per ligament hole");

  auto* tissue = app.add_subcommand("gen-tissue", "build the concentric tissue shell around fitted bones");
  tissue->add_option("--config", config)->required();
  auto* t_bone = tissue->add_option("--bone", bone_id, "bone id (default: all bones)");
  auto* t_sigma = tissue->add_option("--sigma", sigma, "wall offset in mm");
  auto* t_out = tissue->add_option("--out", out);
  auto* t_fmt = tissue->add_option("--format", format_name)->check(CLI::IsMember(formats));
  auto* t_skin = tissue->add_option("--skin", skin, "closed skin segment mesh instead of cutting the scan");
  auto* t_bmesh = tissue->add_option("--bone-mesh", bone_mesh, "bone mesh instead of the fitted bone");

  auto* select = app.add_subcommand("select-thickness", "pick the tube thickness closest to the reference curve");
  select->add_option("curves", curves, "curve table (strain,force,label)")->required();
  select->add_option("--human", human, "label of the reference curve");
  select->add_option("--metric", metric)->check(CLI::IsMember({"rms", "max_abs"}));
  select->add_option("--grid", grid, "number of comparison strains");
  auto* s_out = select->add_option("--out", out);

  auto* simulate = app.add_subcommand("simulate", "sweep cable displacement for finger designs");
  auto* m_config = simulate->add_option("--config", config);
  auto* m_designs = simulate->add_option("--designs", designs, "design set (JSON)");
  simulate->add_option("--design", design_ids, "design ids to simulate (default: all)");
  auto* m_dmax = simulate->add_option("--displacement-max", dmax, "mm");
  auto* m_steps = simulate->add_option("--steps", steps);
  auto* m_out = simulate->add_option("--out", out);

  auto* info = app.add_subcommand("info", "mesh statistics, or the landmark schema without a mesh");
  auto* i_mesh = info->add_option("mesh", mesh_path);

  auto* demo = app.add_subcommand("make-demo", "write the synthetic demo fixture");
  demo->add_option("dir", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto format = [&](const CLI::Option* o) {
    return o->count() ? std::optional<MeshFormat>(mesh_format_from_string(format_name)) : std::nullopt;
  };
  auto path = [&](const CLI::Option* o, const std::string& v) {
    return o->count() ? std::optional<fs::path>(v) : std::nullopt;
  };

  if (validate_cmd->parsed()) return cmd_validate(config, std::cout, std::cerr);
  if (fit->parsed()) {
    return cmd_fit_bones(FitBonesOptions{config, path(fit_out, out), format(fit_fmt), hole_meshes}, std::cout,
                         std::cerr);
  }
  if (tissue->parsed()) {
    return cmd_gen_tissue(GenTissueOptions{config, opt(t_bone, bone_id), opt(t_sigma, sigma), path(t_out, out), format(t_fmt),
                           path(t_skin, skin), path(t_bmesh, bone_mesh)},
                          std::cout, std::cerr);
  }
  if (select->parsed()) {
    SelectThicknessOptions o;
    o.curves = curves;
    o.human_label = human;
    o.metric = curve_metric_from_string(metric);
    o.grid_points = grid;
    o.out = path(s_out, out);
    return cmd_select_thickness(o, std::cout, std::cerr);
  }
  if (simulate->parsed()) {
    return cmd_simulate(SimulateOptions{path(m_config, config), path(m_designs, designs), design_ids, opt(m_dmax, dmax),
                         opt(m_steps, steps), path(m_out, out)},
                        std::cout, std::cerr);
  }
  if (info->parsed()) return cmd_info(path(i_mesh, mesh_path), std::cout, std::cerr);
  if (demo->parsed()) {
    try {
      synthetic::write_demo_fixture(out);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    std::cout << "wrote demo fixture to " << out << '\n';
    return 0;
  }
  return 2;
}
