// decouple: generate two-channel instances, solve for the energy-independent
// channel Hamiltonians, verify the spectral identities, and sweep grids.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "decoupling/cli.hpp"

namespace {

void add_solver_flags(CLI::App* cmd, decoupling::SolverConfig& cfg, double& tol) {
  cmd->add_option("--delta", cfg.delta, "ball radius for the solution")->default_val(1.0)->check(CLI::PositiveNumber);
  cmd->add_option("--tol", tol, "absolute fixed-point tolerance (default 1e-12 * max(1, ||B12||_2))");
  cmd->add_option("--max-iter", cfg.max_iterations, "iteration budget")->default_val(500)->check(CLI::PositiveNumber);
  cmd->add_option("--divergence-guard", cfg.divergence_guard, "abort when ||Q|| exceeds this")->default_val(1e3);
  cmd->add_flag("--allow-inadmissible", cfg.allow_inadmissible,
                "iterate even when the admissibility bound fails (results are non-guaranteed)");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace decoupling;

  CLI::App app{"Removes resolvent-type energy dependence from two-channel Hamiltonians"};
  app.footer(cli::kExitCodeHelp);
  app.require_subcommand(1);

  cli::GlobalOptions global;
  std::string tol_profile;
  app.add_option("--tol-profile", tol_profile, "JSON file of named tolerances");
  app.add_option("--output", global.output, "output directory")->default_val(".");
  app.add_flag("--quiet", global.quiet, "suppress standard output");

  // generate
  cli::GenerateOptions gen;
  std::string gen_file;
  auto* generate = app.add_subcommand("generate", "write a seeded random instance");
  generate->fallthrough();
  generate->add_option("--n1", gen.params.n1, "channel 1 dimension")->default_val(4);
  generate->add_option("--n2", gen.params.n2, "channel 2 dimension")->default_val(4);
  generate->add_option("--gap", gen.params.gap, "distance between the channel spectra")->default_val(1.0);
  generate->add_option("--coupling", gen.params.coupling_scale,
                       "||B12||_2 as a fraction of gap/2, in (0, 1)")->default_val(0.5);
  generate->add_option("--seed", gen.params.seed, "random seed")->default_val(0);
  generate->add_option("--file", gen_file, "instance path (default <output>/instance.json)");

  // solve
  cli::SolveOptions sol;
  double solve_tol = 0.0;
  auto* solve_cmd = app.add_subcommand("solve", "solve for Q and write Q, H, W and eigenvalues");
  solve_cmd->fallthrough();
  solve_cmd->add_option("instance", sol.instance, "instance file")->required();
  add_solver_flags(solve_cmd, sol.solver, solve_tol);
  solve_cmd->add_option("--channel", sol.channel, "1, 2 or both")->default_val("both");
  solve_cmd->add_flag("--independent-solve", sol.independent_solve,
                      "iterate channel 2 directly instead of conjugating channel 1");

  // verify
  cli::VerifyOptions ver;
  double verify_tol = 0.0;
  std::string q_file, report_file;
  bool no_cross_check = false;
  auto* verify_cmd = app.add_subcommand("verify", "run every spectral check and write a report");
  verify_cmd->fallthrough();
  verify_cmd->add_option("instance", ver.instance, "instance file")->required();
  add_solver_flags(verify_cmd, ver.solver, verify_tol);
  verify_cmd->add_option("--set-tol", ver.tolerance_overrides, "override a tolerance: name=value")
      ->take_all();
  verify_cmd->add_option("--q-file", q_file, "use Q from this solution file instead of solving");
  verify_cmd->add_option("--report", report_file, "report path (default <output>/report.json)");
  verify_cmd->add_flag("--no-cross-check", no_cross_check, "skip the independent channel-2 solve");
  bool no_summary = false;
  auto* summary_flag = verify_cmd->add_flag("--summary", "print the aligned check table (default)");
  verify_cmd->add_flag("--no-summary", no_summary, "do not print the check table")->excludes(summary_flag);

  // sweep
  cli::SweepOptions swp;
  unsigned workers = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "verify every point of a parameter grid");
  sweep_cmd->fallthrough();
  sweep_cmd->add_option("spec", swp.spec, "sweep specification file")->required();
  sweep_cmd->add_option("--workers", workers, "worker threads (default: hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInvalidParams;
  }

  if (!tol_profile.empty()) global.tol_profile = tol_profile;
  const cli::Console con{std::cout, std::cerr, global.quiet};

  if (*generate) {
    if (!gen_file.empty()) gen.file = gen_file;
    return cli::cmd_generate(global, gen, con);
  }
  if (*solve_cmd) {
    if (solve_tol > 0.0) sol.solver.residual_tol = solve_tol;
    return cli::cmd_solve(global, sol, con);
  }
  if (*verify_cmd) {
    if (verify_tol > 0.0) ver.solver.residual_tol = verify_tol;
    if (!q_file.empty()) ver.q_file = q_file;
    if (!report_file.empty()) ver.report_file = report_file;
    ver.independent_solve = !no_cross_check;
    ver.summary = !no_summary;
    return cli::cmd_verify(global, ver, con);
  }
  if (*sweep_cmd) {
    if (workers > 0) swp.workers = workers;
    return cli::cmd_sweep(global, swp, con);
  }
  return cli::kInvalidParams;
}
