#include "cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace mpecbt::cli;

  CLI::App app{"Bundle-trust and semismooth Newton solvers for MPECs"};
  app.require_subcommand(1);

  SolveArgs solve;
  std::string solve_x0;
  auto* s = app.add_subcommand("solve", "Minimize the reduced objective of a configured problem");
  s->add_option("--config", solve.config, "Problem config (JSON)")->required()->check(CLI::ExistingFile);
  s->add_option("--solver", solve.solver, "bt or ssnewton")->check(CLI::IsMember({"bt", "ssnewton"}));
  s->add_option("--x0", solve_x0, "Start point as a comma list (overrides the config)");
  s->add_option("--tol", solve.tol, "Final accuracy");
  s->add_option("--maxit", solve.maxit, "Iteration limit");
  s->add_option("--out", solve.out, "Output directory for report.json and trace.csv");
  s->add_option("--seed", solve.seed, "Seed for randomized checks");
  s->add_flag("--timing", solve.timing, "Record wall time in the report");

  CheckArgs check;
  std::string check_point;
  auto* c = app.add_subcommand("check", "Evaluate the oracle and the stationarity residual at a point");
  c->add_option("--config", check.config, "Problem config (JSON)")->required()->check(CLI::ExistingFile);
  c->add_option("--point", check_point, "Point as a comma list")->required();
  c->add_option("--fd-audit", check.fd_audit, "Number of random finite-difference probes");
  c->add_option("--seed", check.seed, "Seed for the finite-difference probes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (s->parsed()) {
      if (!solve_x0.empty()) solve.x0 = parse_list(solve_x0);
      return cmd_solve(solve, std::cout, std::cerr);
    }
    check.point = parse_list(check_point);
    return cmd_check(check, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
