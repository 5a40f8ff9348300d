// Command-line runner: one subcommand per experiment plus run, validate and report.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lorentz/cli/config.hpp"
#include "lorentz/cli/report.hpp"
#include "lorentz/cli/runner.hpp"

using namespace lorentz;

namespace {

struct Flags {
  std::string config;
  std::string out;
  int workers = 0;
  bool quiet = false;
  bool serial = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (defaults to the config's output)");
  cmd->add_option("--workers", f.workers, "worker threads (hint; results do not depend on it)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--serial", f.serial, "use the serial reference loop");
  cmd->add_flag("--quiet", f.quiet, "suppress progress output");
}

int run(const Flags& f, const std::string& experiment) {
  cli::ExperimentConfig cfg;
  try {
    cfg = cli::validate_config(f.config, experiment);
  } catch (const cli::SchemaError& e) {
    for (const auto& v : e.violations) std::cerr << "config error: " << v << '\n';
    return cli::kConfigError;
  } catch (const billiard::TableError& e) {
    std::cerr << "table error: " << e.what() << '\n';
    return cli::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kRuntimeError;
  }
  cli::RunOptions opt;
  opt.out_dir = f.out.empty() ? cfg.output : f.out;
  opt.policy = f.serial ? ExecPolicy::serial() : ExecPolicy::threads(f.workers);
  opt.quiet = f.quiet;
  const int code = cli::run_experiment(cfg, opt);
  if (!f.quiet) {
    try {
      cli::emit_report(opt.out_dir, std::cout);
    } catch (const cli::MissingBundle& e) {
      std::cerr << e.what() << '\n';
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Z^2-extension mixing-rate laboratory"};
  app.require_subcommand(1);
  Flags flags;
  std::string bundle;

  auto* run_cmd = app.add_subcommand("run", "run the experiment named in the config");
  add_common(run_cmd, flags);
  for (const auto& name : cli::kExperiments) {
    auto* cmd = app.add_subcommand(name, "run the " + name + " experiment");
    add_common(cmd, flags);
  }
  auto* report_cmd = app.add_subcommand("report", "print the verdict table of a result bundle");
  report_cmd->add_option("--out", bundle, "bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cli::kConfigError;
  }

  if (report_cmd->parsed()) {
    try {
      return cli::emit_report(bundle, std::cout);
    } catch (const cli::MissingBundle& e) {
      std::cerr << "missing bundle: " << e.what() << '\n';
      return cli::kConfigError;
    }
  }
  if (run_cmd->parsed()) return run(flags, "");
  for (const auto* cmd : app.get_subcommands()) return run(flags, cmd->get_name());
  return cli::kConfigError;
}
