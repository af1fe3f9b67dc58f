#include <CLI11.hpp>

#include <iostream>

#include "mfg/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Price formation solver for mean-field markets with common noise"};
  app.require_subcommand(1);

  mfg::CommandOptions options;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t j_eval = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Override the configured seed");
    cmd->add_option("--out", out_dir, "Override the output directory");
  };

  CLI::App* train = app.add_subcommand("train", "Train the control and price networks");
  add_common(train);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate checkpoints against the oracle");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", options.checkpoints,
                       "Checkpoint file; give one control and one price checkpoint");
  evaluate->add_option("--j-eval", j_eval, "Number of evaluation paths")
      ->check(CLI::PositiveNumber);

  CLI::App* oracle = app.add_subcommand("oracle", "Dump the linear-quadratic reference price");
  add_common(oracle);
  oracle->add_option("--j-eval", j_eval, "Number of oracle paths")->check(CLI::PositiveNumber);

  CLI::App* grad_check = app.add_subcommand("grad-check", "Check loss gradients numerically");
  add_common(grad_check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--config")) options.config_path = config_path;
  if (chosen->count("--seed")) options.seed = seed;
  if (chosen->count("--out")) options.out_dir = out_dir;
  if (chosen->get_option_no_throw("--j-eval") && chosen->count("--j-eval")) {
    options.j_eval = j_eval;
  }

  if (chosen == train) return mfg::cmd_train(options, std::cout, std::cerr);
  if (chosen == evaluate) return mfg::cmd_evaluate(options, std::cout, std::cerr);
  if (chosen == oracle) return mfg::cmd_oracle(options, std::cout, std::cerr);
  return mfg::cmd_grad_check(options, std::cout, std::cerr);
}
