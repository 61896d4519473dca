// lcfgrad: probabilistic low-cycle-fatigue shape sensitivities on FE meshes.
//
// Commands: solve, grad, check-grad, optimize, export-vtk. All reports are
// plain delimited text with a one-line schema header; results replay
// bit-exactly given the same inputs, seed and thread count.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lcfgrad/lcfgrad.hpp"

namespace fs = std::filesystem;
using namespace lcfgrad;

namespace {

// distinct exit codes per error family
enum ExitCode {
  kOk = 0,
  kUnexpected = 1,
  kParse = 2,
  kGeometry = 3,
  kSingular = 4,
  kNumeric = 5,
  kGateFailure = 6,
  kConfig = 7,
  kIo = 8,
};

struct CommonOptions {
  std::vector<std::string> mesh_paths;
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 12345;
  int threads = 1;
};

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file '" + path + "'");
  return parse_mesh(in);
}

Model load_model(const CommonOptions& opt, std::size_t mesh_index = 0) {
  if (opt.mesh_paths.empty()) throw ConfigError("--mesh is required");
  if (opt.config_path.empty()) throw ConfigError("--config is required");
  Mesh mesh = read_mesh_file(opt.mesh_paths.at(mesh_index));
  RunSetup setup = read_config_file(opt.config_path);
  setup.numerics.threads = opt.threads;
  return make_model(std::move(mesh), setup);
}

std::ofstream open_out(const CommonOptions& opt, const std::string& name) {
  fs::create_directories(opt.out_dir);
  const fs::path path = fs::path(opt.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file '" + path.string() + "'");
  out.precision(17);
  return out;
}

void print_header(std::ostream& out, const Model& model, const CommonOptions& opt) {
  out << "# mesh=" << opt.mesh_paths.front() << " nodes=" << model.mesh.n_nodes()
      << " elements=" << model.mesh.n_elements() << " kind="
      << element_kind_name(model.mesh.kind) << " omega=" << model.load.omega
      << " cycles_n=" << model.load.cycles_n;
  if (model.mesh.cyclic) out << " sectors=" << model.mesh.cyclic->sector_count;
  out << " seed=" << opt.seed << " threads=" << opt.threads << "\n";
}

Eigen::MatrixXd nodal_displacement(const Mesh& mesh, const Eigen::VectorXd& U) {
  Eigen::MatrixXd out(mesh.n_nodes(), mesh.dim);
  for (int n = 0; n < mesh.n_nodes(); ++n)
    for (int d = 0; d < mesh.dim; ++d) out(n, d) = U(n * mesh.dim + d);
  return out;
}

// per-node von Mises / log-life columns aligned with the mesh nodes;
// nodes off the fatigue surface carry zeros
void nodal_life_columns(const Mesh& mesh, const DetLife& life, Eigen::MatrixXd& vm,
                        Eigen::MatrixXd& log_life) {
  vm = Eigen::MatrixXd::Zero(mesh.n_nodes(), 1);
  log_life = Eigen::MatrixXd::Zero(mesh.n_nodes(), 1);
  for (std::size_t i = 0; i < life.nodes.size(); ++i) {
    vm(life.nodes[i], 0) = life.sigma_el[i];
    log_life(life.nodes[i], 0) = life.log_life[i];
  }
}

int cmd_solve(const CommonOptions& opt) {
  Model model = load_model(opt);
  const StateResult state = solve_model(model);
  const Objective obj = objective_J(model.mesh, model.material, state.U, model.face_rule());
  const double p = pof(obj.J, model.load.cycles_n, model.material);
  const double eta = weibull_scale(obj.J, model.material);
  const DetLife life = det_life(model.mesh, model.material, state.U);

  auto report = open_out(opt, "solve_report.txt");
  print_header(report, model, opt);
  report << "# J pof eta min_life_node min_log_life saturated\n";
  report << obj.J << " " << p << " " << eta << " " << (life.min_node + 1) << " "
         << life.min_log_life << " " << (obj.saturated_warning ? 1 : 0) << "\n";

  auto table = open_out(opt, "nodal_state.txt");
  table << "# node_id u... sigma_vm log_life\n";
  const Eigen::MatrixXd disp = nodal_displacement(model.mesh, state.U);
  Eigen::MatrixXd vm, log_life;
  nodal_life_columns(model.mesh, life, vm, log_life);
  for (int n = 0; n < model.mesh.n_nodes(); ++n) {
    table << (n + 1);
    for (int d = 0; d < model.mesh.dim; ++d) table << " " << disp(n, d);
    table << " " << vm(n, 0) << " " << log_life(n, 0) << "\n";
  }

  write_vtk_file((fs::path(opt.out_dir) / "solve.vtk").string(), model.mesh,
                 {{"displacement", disp}, {"sigma_vm", vm}, {"log_life", log_life}});
  std::cout << "J = " << obj.J << ", PoF(n=" << model.load.cycles_n << ") = " << p
            << ", eta = " << eta << "\n";
  if (obj.saturated_warning)
    std::cerr << "warning: fatigue life saturated at the short-life bracket edge\n";
  return kOk;
}

void write_sensitivity_table(std::ostream& out, const Mesh& mesh, const SensitivityField& f) {
  out << "# node_id g...\n";
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    out << (n + 1);
    for (int d = 0; d < mesh.dim; ++d) out << " " << f.values(n, d);
    out << "\n";
  }
}

int cmd_grad(const CommonOptions& opt) {
  Model model = load_model(opt);
  const GradientResult grad = compute_gradient(model);

  auto report = open_out(opt, "grad_report.txt");
  print_header(report, model, opt);
  report << "# J pof dirichlet_nodes_flagged\n";
  std::set<int> clamped;
  for (auto [node, comp] : model.mesh.dirichlet) clamped.insert(node);
  report << grad.objective.J << " " << grad.pof << " " << clamped.size() << "\n";
  report << "# stage elapsed_s\n";
  report << "state_U " << grad.times.state << "\n";
  report << "dJ_dU_dJ_dX " << grad.times.dj << "\n";
  report << "adjoint_state " << grad.times.adjoint << "\n";
  report << "dB_dX_dF_dX_contractions " << grad.times.contractions << "\n";

  auto dj = open_out(opt, "sensitivity.txt");
  write_sensitivity_table(dj, model.mesh, grad.total);
  auto dp = open_out(opt, "pof_sensitivity.txt");
  write_sensitivity_table(dp, model.mesh, grad.pof_grad);

  const DetLife life = det_life(model.mesh, model.material, grad.U);
  Eigen::MatrixXd vm, log_life;
  nodal_life_columns(model.mesh, life, vm, log_life);
  write_vtk_file((fs::path(opt.out_dir) / "grad.vtk").string(), model.mesh,
                 {{"displacement", nodal_displacement(model.mesh, grad.U)},
                  {"sigma_vm", vm},
                  {"log_life", log_life},
                  {"dJ_dX", grad.total.values},
                  {"dPoF_dX", grad.pof_grad.values}});
  std::cout << "J = " << grad.objective.J << ", |dJ/dX| = " << grad.total.norm() << "\n";
  return kOk;
}

int cmd_check_grad(const CommonOptions& opt, int n_directions, const std::string& scheme,
                   double gate, bool corrupt) {
  Model model = load_model(opt);
  std::vector<FdScheme> schemes;
  if (scheme == "central" || scheme == "both") schemes.push_back(FdScheme::central);
  if (scheme == "one-sided" || scheme == "both") schemes.push_back(FdScheme::one_sided);
  if (schemes.empty()) throw ConfigError("unknown scheme '" + scheme + "'");

  const auto steps = default_step_grid(model.mesh);
  const auto reports =
      run_validation(model, n_directions, steps, schemes, opt.seed, corrupt ? -1.0 : 1.0);

  auto table = open_out(opt, "fd_reports.txt");
  print_header(table, model, opt);
  table << "# direction step scheme fd_value adjoint_value ratio\n";
  for (const auto& r : reports)
    table << r.direction_id << " " << r.step << " " << fd_scheme_name(r.scheme) << " "
          << r.fd_value << " " << r.adjoint_value << " " << r.ratio << "\n";

  const auto summaries = summarize_validation(reports);
  auto summary = open_out(opt, "fd_summary.txt");
  summary << "# direction scheme best_step best_ratio\n";
  double worst_central = 0.0;
  bool any_central = false;
  for (const auto& s : summaries) {
    summary << s.direction_id << " " << fd_scheme_name(s.scheme) << " " << s.best_step << " "
            << s.best_ratio << "\n";
    if (s.scheme == FdScheme::central) {
      any_central = true;
      worst_central = std::max(worst_central, std::abs(s.best_ratio - 1.0));
    }
  }
  if (any_central) {
    std::cout << "worst central best-step |ratio-1| = " << worst_central << " (gate " << gate
              << ")\n";
    if (worst_central > gate) {
      std::cerr << "gradient validation failed the gate\n";
      return kGateFailure;
    }
  }
  return kOk;
}

int cmd_optimize(const CommonOptions& opt) {
  if (opt.mesh_paths.empty()) throw ConfigError("--mesh is required (repeat for several starts)");
  if (opt.config_path.empty()) throw ConfigError("--config is required");
  RunSetup setup = read_config_file(opt.config_path);
  setup.numerics.threads = opt.threads;
  std::vector<Model> starts;
  for (const auto& path : opt.mesh_paths)
    starts.push_back(make_model(read_mesh_file(path), setup));

  const SweepResult sweep = pareto_sweep(starts, default_moo_objectives(), setup.moo);
  for (const auto& err : sweep.errors) std::cerr << "start failed: " << err << "\n";

  auto front = open_out(opt, "front.txt");
  front << "# start_id volume pof iterations converged\n";
  for (const auto& pt : sweep.front)
    front << pt.start_id << " " << pt.volume << " " << pt.pof << " " << pt.iterations << " "
          << (pt.converged ? 1 : 0) << "\n";

  for (std::size_t s = 0; s < sweep.traces.size(); ++s) {
    const auto& trace = sweep.traces[s];
    if (trace.values.empty()) continue;
    auto tr = open_out(opt, "trace_" + std::to_string(s) + ".txt");
    tr << "# iter pof volume\n";
    for (std::size_t i = 0; i < trace.values.size(); ++i)
      tr << i << " " << trace.values[i][0] << " " << trace.values[i][1] << "\n";
    if (setup.moo.snapshots) {
      for (std::size_t i = 0; i < trace.snapshots.size(); ++i) {
        auto snap = open_out(opt, "snapshot_" + std::to_string(s) + "_" + std::to_string(i) +
                                      ".msh");
        write_mesh(starts[s].mesh.with_nodes(trace.snapshots[i]), snap);
      }
    }
  }
  std::cout << "front points: " << sweep.front.size() << " of " << sweep.all_points.size()
            << " runs\n";
  return kOk;
}

int cmd_export_vtk(const CommonOptions& opt, bool with_gradient) {
  Model model = load_model(opt);
  fs::create_directories(opt.out_dir);
  std::vector<VtkPointData> fields;
  Eigen::MatrixXd vm, log_life;
  if (with_gradient) {
    const GradientResult grad = compute_gradient(model);
    const DetLife life = det_life(model.mesh, model.material, grad.U);
    nodal_life_columns(model.mesh, life, vm, log_life);
    fields = {{"displacement", nodal_displacement(model.mesh, grad.U)},
              {"sigma_vm", vm},
              {"log_life", log_life},
              {"dJ_dX", grad.total.values},
              {"dPoF_dX", grad.pof_grad.values}};
  } else {
    const StateResult state = solve_model(model);
    const DetLife life = det_life(model.mesh, model.material, state.U);
    nodal_life_columns(model.mesh, life, vm, log_life);
    fields = {{"displacement", nodal_displacement(model.mesh, state.U)},
              {"sigma_vm", vm},
              {"log_life", log_life}};
  }
  write_vtk_file((fs::path(opt.out_dir) / "export.vtk").string(), model.mesh, fields);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic LCF shape sensitivities"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  CommonOptions opt;
  app.add_option("--mesh", opt.mesh_paths, "mesh file (repeat for several optimize starts)")
      ->envname("LCFGRAD_MESH");
  app.add_option("--config", opt.config_path, "load/material/numerics config file")
      ->envname("LCFGRAD_CONFIG");
  app.add_option("--out", opt.out_dir, "output directory")->envname("LCFGRAD_OUT");
  app.add_option("--seed", opt.seed, "RNG seed (check-grad directions)")
      ->envname("LCFGRAD_SEED");
  app.add_option("--threads", opt.threads, "worker cap for element-parallel passes")
      ->envname("LCFGRAD_THREADS");

  auto* solve = app.add_subcommand("solve", "solve the state and report J, PoF, eta");
  auto* grad = app.add_subcommand("grad", "full adjoint pipeline: dJ/dX and dPoF/dX");
  auto* check = app.add_subcommand("check-grad", "validate the gradient against FD quotients");
  int n_directions = 5;
  std::string scheme = "both";
  double gate = 1e-3;
  bool corrupt = false;
  check->add_option("--directions", n_directions, "number of random directions");
  check->add_option("--scheme", scheme, "central | one-sided | both");
  check->add_option("--gate", gate, "gate on the best central |ratio-1|");
  check->add_flag("--corrupt-gradient", corrupt,
                  "negative control: flip the adjoint sign (must fail the gate)");
  auto* optimize = app.add_subcommand("optimize", "biobjective descent over PoF and volume");
  auto* expo = app.add_subcommand("export-vtk", "write a legacy-ASCII VTK unstructured grid");
  bool with_gradient = true;
  expo->add_flag("--gradient,!--no-gradient", with_gradient, "include sensitivity vectors");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(opt);
    if (grad->parsed()) return cmd_grad(opt);
    if (check->parsed()) return cmd_check_grad(opt, n_directions, scheme, gate, corrupt);
    if (optimize->parsed()) return cmd_optimize(opt);
    if (expo->parsed()) return cmd_export_vtk(opt, with_gradient);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << "\n";
    return kGeometry;
  } catch (const SingularSystemError& e) {
    std::cerr << "singular system: " << e.what() << "\n";
    return kSingular;
  } catch (const ConstraintError& e) {
    std::cerr << "constraint error: " << e.what() << "\n";
    return kParse;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kUnexpected;
  }
  return kUnexpected;
}
