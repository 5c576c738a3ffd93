#include <iostream>

#include "CLI11.hpp"
#include "stratfib/errors.hpp"
#include "stratfib/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Estimate non-regular values of polynomial maps on stratified sets and verify trivializations"};
  app.set_version_flag("--version", stratfib::kVersion);

  std::string command;
  std::string problem_path;
  std::string box;
  std::uint64_t seed = 0;
  double tol = 0.0;
  std::string out_dir = ".";

  app.add_option("command", command, "audit-strata | milnor | sinf | kinf | sigma | safe-radius | trivialize | report")
      ->required()
      ->check(CLI::IsMember(stratfib::commands()));
  app.add_option("problem", problem_path, "problem file (JSON)")->required();
  auto* box_opt = app.add_option("--box", box, "target box as lo,hi per map component");
  auto* seed_opt = app.add_option("--seed", seed, "override config.seed");
  auto* tol_opt = app.add_option("--tol", tol, "override config.tol")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto problem = stratfib::load_problem(problem_path);
    stratfib::RunOptions options;
    if (*box_opt) options.box = stratfib::parse_box(box, problem.map.dim());
    if (*seed_opt) options.seed = seed;
    if (*tol_opt) options.tol = tol;
    const auto out = stratfib::run_command(command, problem, options);
    stratfib::write_outputs(out, out_dir);
    std::cout << out.report;
    return out.exit_code;
  } catch (const stratfib::Error& e) {
    std::cerr << "stratfib: " << e.what() << "\n";
    return 2;
  }
}
