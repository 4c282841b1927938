#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "phaselab/experiments.hpp"

namespace {

using namespace phaselab;

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  return detail::read_json_file(path);
}

int cmd_mesh_gen(const std::string& kind, int subdivisions, int resolution,
                 double d, const std::string& out) {
  TriangleMesh mesh;
  if (kind == "icosphere") {
    mesh = gen_icosphere(subdivisions);
  } else if (kind == "sphere") {
    mesh = gen_revolution_mesh(ProfileCurve::sphere(), resolution, resolution)
               .mesh;
  } else if (kind == "dumbbell") {
    mesh = gen_revolution_mesh(ProfileCurve::dumbbell(d), resolution,
                               resolution)
               .mesh;
  } else {
    throw std::invalid_argument("unknown mesh kind '" + kind +
                                "' (icosphere, sphere, dumbbell)");
  }
  write_obj(out, mesh);
  json report{{"kind", kind},
              {"vertices", mesh.num_vertices},
              {"faces", static_cast<long long>(mesh.faces.rows())},
              {"euler_characteristic", mesh.euler_characteristic},
              {"total_area", mesh.total_area},
              {"mean_edge_length", mesh.mean_edge_length},
              {"file", out}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_solve(const std::string& mesh_path, double epsilon,
              const std::string& init, std::uint64_t seed,
              const std::string& out) {
  TriangleMesh mesh = read_obj(mesh_path);
  OperatorPair ops = build_operators(mesh);
  DoubleWell well = DoubleWell::quartic();
  detail::check_resolution(epsilon, mesh);

  VertexField u0(mesh.num_vertices);
  if (init == "random") {
    Rng rng(seed);
    for (int i = 0; i < mesh.num_vertices; ++i) {
      u0[i] = rng.uniform(well.alpha(), well.beta());
    }
  } else if (init == "step") {
    require(mesh.has_positions, "step init needs an embedded mesh");
    double zmid =
        0.5 * (mesh.positions.col(2).minCoeff() + mesh.positions.col(2).maxCoeff());
    for (int i = 0; i < mesh.num_vertices; ++i) {
      u0[i] = mesh.positions(i, 2) < zmid ? well.alpha() : well.beta();
    }
  } else {
    throw std::invalid_argument("unknown init '" + init + "' (step, random)");
  }

  SolveParams params;
  params.seed = seed;
  SolveReport rep = solve_steady(ops, well, epsilon, u0, params);
  if (!out.empty()) write_field_csv(out, rep.u);
  json report{{"termination", rep.termination},
              {"steps", rep.steps},
              {"residual_inf", rep.residual_trace.back()},
              {"energy", phase_energy(ops, well, epsilon, rep.u)},
              {"u_min", rep.u.minCoeff()},
              {"u_max", rep.u.maxCoeff()}};
  if (!out.empty()) report["field"] = out;
  std::cout << report.dump(2) << "\n";
  return rep.termination == "converged" ? 0 : 1;
}

int cmd_spectrum(const std::string& mesh_path, const std::string& field_path,
                 double epsilon, int k) {
  TriangleMesh mesh = read_obj(mesh_path);
  OperatorPair ops = build_operators(mesh);
  DoubleWell well = DoubleWell::quartic();
  VertexField u = read_field_csv(field_path);
  require(u.size() == mesh.num_vertices, "field size does not match the mesh");
  StabilityReport rep = classify_stability(ops, well, epsilon, u, k);
  json eig = json::array();
  for (int i = 0; i < rep.eigenvalues.size(); ++i) {
    eig.push_back(rep.eigenvalues[i]);
  }
  json report{{"eigenvalues", eig},
              {"tau", rep.tau},
              {"classification", rep.classification}};
  WitnessReport wit = instability_witness(mesh, ops, well, epsilon, u);
  report["q_witness"] = wit.q_value;
  report["witness_verdict"] = wit.verdict;
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_experiment_run(const std::string& name, const std::string& config_path,
                       const std::string& out_dir, int threads,
                       std::uint64_t seed, bool seed_set) {
  json cfg = load_config(config_path);
  if (!name.empty()) {
    if (cfg.contains("experiment")) {
      require(cfg["experiment"] == name,
              "config names experiment '" +
                  cfg["experiment"].get<std::string>() +
                  "' but the command line says '" + name + "'");
    }
    cfg["experiment"] = name;
  }
  if (seed_set) cfg["seed"] = seed;
  RunResult res = run_experiment(cfg, out_dir, threads);
  json report{{"experiment", res.manifest.experiment},
              {"out_dir", res.out_dir.string()},
              {"manifest", res.manifest_path.string()},
              {"config_digest", res.manifest.config_digest},
              {"outputs", json::array()}};
  for (const auto& o : res.manifest.outputs) {
    report["outputs"].push_back(o.file);
  }
  report["summary"] = res.summary;
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_experiment_rerun(const std::string& manifest_path,
                         const std::string& out_dir, int threads) {
  RerunReport rep = rerun_from_manifest(manifest_path, out_dir, threads);
  json files = json::array();
  for (const auto& e : rep.entries) {
    files.push_back(json{{"file", e.file}, {"match", e.match}});
  }
  json report{{"config_digest_ok", rep.config_digest_ok},
              {"all_match", rep.all_match},
              {"files", files}};
  std::cout << report.dump(2) << "\n";
  return rep.all_match ? 0 : 1;
}

int cmd_experiment_verify(const std::string& manifest_path) {
  ManifestCheck check = verify_manifest(manifest_path);
  json files = json::array();
  for (const auto& e : check.entries) {
    files.push_back(json{{"file", e.file},
                         {"exists", e.exists},
                         {"bytes_match", e.bytes_match},
                         {"sha_match", e.sha_match}});
  }
  json report{{"ok", check.ok},
              {"config_digest_ok", check.digest_ok},
              {"files", files}};
  std::cout << report.dump(2) << "\n";
  return check.ok ? 0 : 1;
}

int cmd_export_contour(const std::string& mesh_path,
                       const std::string& field_path, double level,
                       const std::string& out) {
  TriangleMesh mesh = read_obj(mesh_path);
  VertexField u = read_field_csv(field_path);
  require(u.size() == mesh.num_vertices, "field size does not match the mesh");
  IsoContour contour = extract_iso_contour(mesh, u, level);
  detail::CsvTable table({"loop", "point", "x", "y", "z"});
  for (std::size_t li = 0; li < contour.loops.size(); ++li) {
    const IsoLoop& loop = contour.loops[li];
    for (std::size_t pi = 0; pi < loop.positions.size(); ++pi) {
      table.row({detail::cell(static_cast<int>(li)),
                 detail::cell(static_cast<int>(pi)),
                 detail::cell(loop.positions[pi][0]),
                 detail::cell(loop.positions[pi][1]),
                 detail::cell(loop.positions[pi][2])});
    }
  }
  table.write(out);
  json report{{"loops", contour.loops.size()},
              {"total_length", contour.total_length},
              {"file", out}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_export_vtk(const std::string& mesh_path, const std::string& field_path,
                   const std::string& out) {
  TriangleMesh mesh = read_obj(mesh_path);
  VertexField u = read_field_csv(field_path);
  require(u.size() == mesh.num_vertices, "field size does not match the mesh");
  write_vtk(out, mesh, {{"u", u}});
  std::cout << json{{"file", out}}.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phase-field states and stability on closed surfaces"};
  app.require_subcommand(1);

  // mesh gen
  auto* mesh_cmd = app.add_subcommand("mesh", "mesh utilities");
  mesh_cmd->require_subcommand(1);
  auto* gen = mesh_cmd->add_subcommand("gen", "generate a surface mesh");
  std::string gen_kind = "icosphere", gen_out = "mesh.obj";
  int gen_sub = 4, gen_res = 64;
  double gen_d = 0.5;
  gen->add_option("--kind", gen_kind, "icosphere | sphere | dumbbell");
  gen->add_option("--subdivisions", gen_sub, "icosphere subdivision level");
  gen->add_option("--resolution", gen_res, "revolution grid resolution");
  gen->add_option("--d", gen_d, "dumbbell neck parameter in (1/3, 2/3]");
  gen->add_option("--out", gen_out, "output OBJ path");

  // solve
  auto* solve = app.add_subcommand("solve", "relax a phase field to a steady state");
  std::string solve_mesh, solve_init = "random", solve_out;
  double solve_eps = 0.25;
  std::uint64_t solve_seed = 1;
  solve->add_option("--mesh", solve_mesh, "input OBJ mesh")->required();
  solve->add_option("--epsilon", solve_eps, "interface width");
  solve->add_option("--init", solve_init, "step | random");
  solve->add_option("--seed", solve_seed, "rng seed for random init");
  solve->add_option("--out", solve_out, "output field CSV");

  // spectrum
  auto* spectrum = app.add_subcommand("spectrum", "second variation spectrum of a state");
  std::string spec_mesh, spec_field;
  double spec_eps = 0.25;
  int spec_k = 4;
  spectrum->add_option("--mesh", spec_mesh, "input OBJ mesh")->required();
  spectrum->add_option("--field", spec_field, "state CSV")->required();
  spectrum->add_option("--epsilon", spec_eps, "interface width");
  spectrum->add_option("--k", spec_k, "number of low eigenvalues");

  // experiment run / rerun / verify
  auto* exp = app.add_subcommand("experiment", "run recorded experiments");
  exp->require_subcommand(1);
  auto* run = exp->add_subcommand("run", "run an experiment and write a manifest");
  std::string run_name, run_config, run_out = "out";
  int run_threads = 1;
  std::uint64_t run_seed = 1;
  run->add_option("name", run_name,
                  "sphere-instability | dumbbell-minimizer | gamma-sweep | "
                  "torus-degenerate | oracle-compare | identity-check");
  run->add_option("--config", run_config, "JSON config path");
  run->add_option("--out", run_out, "output directory");
  run->add_option("--threads", run_threads, "worker threads");
  auto* seed_opt = run->add_option("--seed", run_seed, "override the config seed");

  auto* rerun = exp->add_subcommand("rerun", "re-execute a manifest and compare outputs");
  std::string rerun_manifest, rerun_out = "rerun";
  int rerun_threads = 1;
  rerun->add_option("--manifest", rerun_manifest, "manifest JSON path")->required();
  rerun->add_option("--out", rerun_out, "output directory");
  rerun->add_option("--threads", rerun_threads, "worker threads");

  auto* verify = exp->add_subcommand("verify", "check manifest outputs on disk");
  std::string verify_manifest_path;
  verify->add_option("--manifest", verify_manifest_path, "manifest JSON path")
      ->required();

  // export
  auto* exp_out = app.add_subcommand("export", "derived artifacts from a state");
  exp_out->require_subcommand(1);
  auto* contour = exp_out->add_subcommand("contour", "extract the half-level contour");
  std::string con_mesh, con_field, con_out = "contour.csv";
  double con_level = 0.0;
  contour->add_option("--mesh", con_mesh, "input OBJ mesh")->required();
  contour->add_option("--field", con_field, "state CSV")->required();
  contour->add_option("--level", con_level, "contour level");
  contour->add_option("--out", con_out, "output CSV");
  auto* vtk = exp_out->add_subcommand("vtk", "mesh plus field as legacy VTK");
  std::string vtk_mesh, vtk_field, vtk_out = "state.vtk";
  vtk->add_option("--mesh", vtk_mesh, "input OBJ mesh")->required();
  vtk->add_option("--field", vtk_field, "state CSV")->required();
  vtk->add_option("--out", vtk_out, "output VTK");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_mesh_gen(gen_kind, gen_sub, gen_res, gen_d, gen_out);
    }
    if (solve->parsed()) {
      return cmd_solve(solve_mesh, solve_eps, solve_init, solve_seed, solve_out);
    }
    if (spectrum->parsed()) {
      return cmd_spectrum(spec_mesh, spec_field, spec_eps, spec_k);
    }
    if (run->parsed()) {
      return cmd_experiment_run(run_name, run_config, run_out, run_threads,
                                run_seed, seed_opt->count() > 0);
    }
    if (rerun->parsed()) {
      return cmd_experiment_rerun(rerun_manifest, rerun_out, rerun_threads);
    }
    if (verify->parsed()) {
      return cmd_experiment_verify(verify_manifest_path);
    }
    if (contour->parsed()) {
      return cmd_export_contour(con_mesh, con_field, con_level, con_out);
    }
    if (vtk->parsed()) {
      return cmd_export_vtk(vtk_mesh, vtk_field, vtk_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
