// specfno: run one experiment from a TOML config and write its reports.
//
//   specfno converge --config desk.toml --set experiment.s_list=[2] --threads 1
//
// Exit codes: 0 ok, 2 config error, 3 precondition violation,
// 4 numerical check failed, 5 IO error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "specfno/commands.hpp"
#include "specfno/config.hpp"

using namespace specfno;

int main(int argc, char** argv) {
  CLI::App app{"Discretization-error experiments for Fourier neural operators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "specfno 1.0.0");

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<int> threads;
  std::string out_dir;
  bool wall_time = false;
  bool quiet = false;

  for (const std::string& name : cli::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "TOML config file (defaults apply when omitted)");
    sub->add_option("--set", overrides, "table.key=value override, repeatable")->allow_extra_args(false);
    sub->add_option("--threads", threads, "worker threads; 1 is the deterministic mode")->check(CLI::PositiveNumber);
    sub->add_option("-o,--out", out_dir, "output directory (default: $SPECFNO_OUTPUT_DIR or ./specfno_out)");
    sub->add_flag("--wall-time", wall_time, "record per-epoch wall time in training histories");
    sub->add_flag("-q,--quiet", quiet, "suppress progress lines");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  cli::tune_allocator();

  try {
    std::optional<std::filesystem::path> path;
    if (!config_path.empty()) path = config_path;
    config::RunConfig cfg = config::load_config(path, overrides);
    if (threads) cfg.run.threads = *threads;
    if (!out_dir.empty()) cfg.run.output_dir = out_dir;

    cli::CommandOptions opt;
    opt.record_wall_time = wall_time;
    opt.log = quiet ? nullptr : &std::cout;
    const cli::CommandOutcome out = cli::run_command(command, cfg, opt);
    if (!quiet) std::cout << "wrote " << out.files.size() << " files to " << cfg.output_dir().string() << '\n';
    if (out.status != cli::kExitOk) std::cerr << command << ": " << out.message << '\n';
    return out.status;
  } catch (...) {
    return cli::exit_code_for(std::current_exception(), std::cerr);
  }
}
