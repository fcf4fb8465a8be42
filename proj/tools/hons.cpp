// hons: command-line front end.
//   hons <subcommand> --config <path> [--dry-run] [--out-dir <path>]

#include <CLI11.hpp>

#include <iostream>

#include "hons/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Higher-order NLS simulation and identity checks"};
  app.require_subcommand(1);

  std::string config;
  hons::RunFlags flags;
  for (const auto& name : hons::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "run configuration file")->required();
    sub->add_flag("--dry-run", flags.dry_run, "validate and print the plan only");
    sub->add_option("--out-dir", flags.out_dir, "directory for CSV output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  const hons::RunResult res = hons::run(sub, config, flags);
  if (res.status != 0) {
    std::cerr << "hons " << sub << ": " << res.message;
    if (!res.message.empty() && res.message.back() != '\n') std::cerr << '\n';
    return res.status;
  }
  if (flags.dry_run) std::cout << res.message;
  else std::cout << res.output_file << '\n';
  return 0;
}
