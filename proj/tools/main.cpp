#include "lsopt/cli_runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Large-scale portfolio optimization toolkit"};
  app.require_subcommand(1);
  lsopt::RunSpec spec;
  std::string format = "json";

  auto common = [&](CLI::App* cmd, bool needs_input) {
    auto* in = cmd->add_option("--input,-i", spec.input, "JSON request file");
    if (needs_input) in->required()->check(CLI::ExistingFile);
    cmd->add_option("--output,-o", spec.output, "Output file (default stdout)");
    cmd->add_option("--format,-f", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--tol", spec.tol, "Stopping tolerance");
    cmd->add_option("--phi", spec.phi, "Initial ADMM penalty");
    cmd->add_option("--seed", spec.seed, "Random seed");
    cmd->add_option("--max-iter", spec.max_iter, "Iteration cap");
  };
  common(app.add_subcommand("prox", "Evaluate a proximal operator"), true);
  common(app.add_subcommand("project", "Project onto a set or an intersection of sets"), true);
  common(app.add_subcommand("qp", "Solve a quadratic program"), true);
  common(app.add_subcommand("allocate", "Run an allocation model"), true);
  auto* rep = app.add_subcommand("reproduce", "Reproduce a reference table or trace");
  rep->add_option("table", spec.target, "table4, table5, erc, lasso_trace or box_qp_trace")
      ->required()
      ->check(CLI::IsMember({"table4", "table5", "erc", "lasso_trace", "box_qp_trace"}));
  common(rep, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : lsopt::exit_code::kInput;
  }
  spec.command = app.get_subcommands().front()->get_name();
  spec.format = format == "csv" ? lsopt::OutputFormat::Csv : lsopt::OutputFormat::Json;
  return lsopt::run_command(spec, std::cout, std::cerr);
}
