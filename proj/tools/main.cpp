// Command-line driver: solve, sweep, check-jacobian, generate, validate.
// Exit codes: 0 success, 1 solver non-convergence / failed check, 2 input errors.

#include "latmech/errors.hpp"
#include "latmech/scenario.hpp"
#include "latmech/solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

using namespace latmech;

namespace {

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir;
  std::optional<Real> tol;
  std::optional<int> max_iter;
  bool no_timestamp = false;
};

SolverOptions scenario_options(const Scenario& sc, const CommonArgs& args) {
  SolverOptions opts = sc.solver;
  if (args.tol) opts.tol_residual = *args.tol;
  if (args.max_iter) opts.max_iterations = *args.max_iter;
  opts.validate();
  return opts;
}

void print_summary(const SolveReport& report) {
  std::printf("status: %s\n", to_string(report.status));
  std::printf("newton iterations: %d\n", report.newton_iterations);
  std::printf("final residual norm: %.3e\n", report.final_residual_norm);
  std::printf("broken bonds: %zu\n", report.broken_bonds.size());
}

int run_solve(const CommonArgs& args, bool sweep_mode, std::optional<int> steps) {
  const Scenario sc = load_scenario_file(args.scenario_path);
  const BuiltScenario built = build_problem(sc);
  SolverOptions opts = scenario_options(sc, args);
  if (steps) opts.load_steps = *steps;
  opts.validate();

  const SolveReport report =
      sweep_mode ? load_sweep(built.problem, opts) : solve(built.problem, opts);

  EmitOptions eopts;
  eopts.timestamp = !args.no_timestamp;
  eopts.write_history = sweep_mode;
  emit_results(report, built, args.out_dir, eopts);
  print_summary(report);
  return report.status == SolveStatus::Converged ? 0 : 1;
}

int run_check_jacobian(const CommonArgs& args, unsigned seed, Real fd_step) {
  const Scenario sc = load_scenario_file(args.scenario_path);
  const BuiltScenario built = build_problem(sc);
  const EquilibriumProblem& prob = built.problem;
  const auto states = prob.initial_bond_states();

  const Real scale = std::max(1.0, prob.net().reference_positions().cwiseAbs().maxCoeff());
  const Real h = fd_step > 0.0 ? fd_step : 1e-6 * scale;

  Real worst = check_jacobian(prob, prob.reference_free_positions(), states, h);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<Real> bump(-0.01 * scale, 0.01 * scale);
  for (int trial = 0; trial < 5; ++trial) {
    MatX3 x_p = prob.reference_free_positions();
    for (Eigen::Index i = 0; i < x_p.rows(); ++i)
      x_p.row(i) += Vec3{bump(rng), bump(rng), bump(rng)};
    worst = std::max(worst, check_jacobian(prob, x_p, states, h));
  }
  std::printf("max relative discrepancy: %.3e\n", worst);
  return worst < 1e-5 ? 0 : 1;
}

int run_generate(const std::string& name, int nx, int ny, int nz, const std::string& out_path) {
  const Scenario sc = name == "grid" ? generate_grid(nx, ny, nz) : generate_example(name);
  const std::string text = emit_scenario(sc);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write '" + out_path + "'");
    out << text;
  }
  return 0;
}

int run_validate(const CommonArgs& args) {
  const Scenario sc = load_scenario_file(args.scenario_path);
  const BuiltScenario built = build_problem(sc);
  const auto diagnostics = validate_network(built.problem.net());
  if (diagnostics.empty()) {
    std::printf("ok: %d nodes, %d bonds, %d free, %d prescribed\n",
                built.problem.net().node_count(), built.problem.net().bond_count(),
                built.problem.partition().free_count(),
                built.problem.partition().prescribed_count());
    return 0;
  }
  for (const Diagnostic& diag : diagnostics)
    std::fprintf(stderr, "error: %s: %s\n", to_string(diag.code), diag.message.c_str());
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latmech: node/bond lattice equilibrium solver"};
  app.require_subcommand(1);

  CommonArgs args;
  unsigned seed = 0;
  Real fd_step = 0.0;
  int steps = 0;
  std::string gen_name;
  std::string gen_out;
  int nx = 2, ny = 1, nz = 1;

  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")->required();
    if (with_out) cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--tol", args.tol, "residual tolerance override");
    cmd->add_option("--max-iter", args.max_iter, "Newton iteration cap override");
    cmd->add_flag("--no-timestamp", args.no_timestamp, "omit the timestamp from report.json");
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve the scenario and write results");
  add_common(solve_cmd, true);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "incremental load/displacement sweep");
  add_common(sweep_cmd, true);
  sweep_cmd->add_option("--steps", steps, "number of load steps (defaults to the scenario)");

  CLI::App* check_cmd =
      app.add_subcommand("check-jacobian", "compare the analytic Jacobian to finite differences");
  add_common(check_cmd, false);
  check_cmd->add_option("--seed", seed, "seed for the random probe configurations");
  check_cmd->add_option("--fd-step", fd_step, "finite-difference step (default 1e-6 x scale)");

  CLI::App* gen_cmd = app.add_subcommand("generate", "emit a built-in example scenario");
  gen_cmd->add_option("--name", gen_name, "triangle, octahedron, or grid")->required();
  gen_cmd->add_option("--out", gen_out, "output file (stdout when omitted)");
  gen_cmd->add_option("--nx", nx, "grid size along x");
  gen_cmd->add_option("--ny", ny, "grid size along y");
  gen_cmd->add_option("--nz", nz, "grid size along z");

  CLI::App* validate_cmd = app.add_subcommand("validate", "check a scenario and its network");
  add_common(validate_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (solve_cmd->parsed()) return run_solve(args, false, std::nullopt);
    if (sweep_cmd->parsed())
      return run_solve(args, true, steps > 0 ? std::optional<int>(steps) : std::nullopt);
    if (check_cmd->parsed()) return run_check_jacobian(args, seed, fd_step);
    if (gen_cmd->parsed()) return run_generate(gen_name, nx, ny, nz, gen_out);
    if (validate_cmd->parsed()) return run_validate(args);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
