// Command-line front end: generate synthetic corpora, run experiments,
// compute temporal-decay matrices, and summarize persisted runs.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "driftbench/io.hpp"
#include "driftbench/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"temporal drift benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> seeds;
  std::vector<std::string> run_dirs;
  std::string scale = "unit";
  std::optional<std::string> report_out;

  auto add_config_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run config JSON")->required();
    cmd->add_option("--out", out_dir, "output directory (default: config output_dir)");
  };

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic corpus");
  add_config_opts(generate);

  CLI::App* run = app.add_subcommand("run", "train, predict, and score one experiment");
  add_config_opts(run);
  run->add_option("--seeds", seeds, "use only the first N configured seeds");

  CLI::App* tr = app.add_subcommand("tr", "build the bin-to-bin score matrix");
  add_config_opts(tr);
  tr->add_option("--seeds", seeds, "use only the first N configured seeds");

  CLI::App* report = app.add_subcommand("report", "summarize finished runs");
  report->add_option("dirs", run_dirs, "run directories")->required()->expected(-1);
  report->add_option("--scale", scale, "unit or percent")
      ->check(CLI::IsMember({"unit", "percent"}));
  report->add_option("--out", report_out, "also write the summary JSON here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      driftbench::cmd_generate(driftbench::load_run_config(config_path), out_dir);
    } else if (run->parsed()) {
      auto result = driftbench::cmd_run(driftbench::load_run_config(config_path),
                                        out_dir, seeds);
      std::cout << result.metrics.dump(2) << "\n";
    } else if (tr->parsed()) {
      driftbench::cmd_tr(driftbench::load_run_config(config_path), out_dir, seeds);
    } else if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      auto summary = driftbench::cmd_report(dirs, scale == "percent", std::cout);
      if (report_out)
        driftbench::write_file_atomic(*report_out, summary.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
