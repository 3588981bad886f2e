#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "optrec/commands.hpp"
#include "optrec/errors.hpp"

namespace cli = optrec::cli;

int main(int argc, char** argv) {
  CLI::App app{"Optimal recovery of linear functionals from Chebyshev data"};
  app.require_subcommand(1);

  std::string path;
  cli::SolveFlags solve;
  double solve_tol = 0.0;
  int solve_N = 0;
  int solve_K = 0;
  auto* s = app.add_subcommand("solve", "Compute optimal recovery weights and the certified error");
  s->add_option("spec", path, "Problem specification (JSON)")->required();
  auto* s_tol = s->add_option("--tol", solve_tol, "Solver tolerance");
  auto* s_N = s->add_option("--N", solve_N, "Truncation order for type1");
  auto* s_K = s->add_option("--K", solve_K, "Grid size for type1");
  s->add_option("--out", solve.out_path, "Result file (default stdout)");
  s->add_option("--samples", solve.samples, "Oracle samples");
  s->add_option("--seed", solve.seed, "Oracle seed");
  s->add_option("--dump", solve.dump_path, "Write the assembled conic programs as triplets");

  cli::VerifyFlags verify;
  auto* v = app.add_subcommand("verify", "Re-check a result file");
  v->add_option("result", path, "Result file written by solve")->required();
  v->add_option("--samples", verify.samples, "Oracle samples");
  v->add_option("--seed", verify.seed, "Oracle seed");
  v->add_option("--out", verify.out_path, "Annotated copy (default: rewrite in place)");

  cli::ConvergeFlags converge;
  double conv_tol = 0.0;
  std::string N_list;
  std::string K_list;
  auto* c = app.add_subcommand("converge", "Sandwich table for a type1 problem");
  c->add_option("spec", path, "Problem specification (JSON)")->required();
  auto* c_tol = c->add_option("--tol", conv_tol, "Solver tolerance");
  c->add_option("--N-list", N_list, "Comma separated truncation orders");
  c->add_option("--K-list", K_list, "Comma separated grid sizes");
  c->add_option("--out", converge.out_path, "JSON output (default stdout)");
  c->add_flag("!--serial", converge.parallel, "Run the solves one at a time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cli::kSpecError;
  }

  try {
    if (s->parsed()) {
      if (*s_tol) solve.tol = solve_tol;
      if (*s_N) solve.N = solve_N;
      if (*s_K) solve.K = solve_K;
      return cli::cmd_solve(path, solve, std::cout, std::cerr);
    }
    if (v->parsed()) return cli::cmd_verify(path, verify, std::cout, std::cerr);
    if (*c_tol) converge.tol = conv_tol;
    if (!N_list.empty()) converge.N_list = cli::parse_int_list(N_list, "N-list");
    if (!K_list.empty()) converge.K_list = cli::parse_int_list(K_list, "K-list");
    return cli::cmd_converge(path, converge, std::cout, std::cerr);
  } catch (const optrec::SpecError& e) {
    std::cerr << "spec error in " << e.field() << ": " << e.what() << '\n';
    return cli::kSpecError;
  }
}
