#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tce/commands.hpp"
#include "tce/errors.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporally-correlated episodic RL on toy control tasks"};
  app.set_version_flag("--version", tce::version_string());
  app.require_subcommand(1);

  tce::TrainOptions train;
  std::string out, seeds;
  auto* train_cmd = app.add_subcommand("train", "Train one policy per seed and write a run directory");
  train_cmd->add_option("--config", train.config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--set", train.overrides, "Override a dotted key, e.g. learner.k=10")->take_all();
  auto* out_opt = train_cmd->add_option("--out", out, "Run directory (overrides run.output)");
  auto* seeds_opt = train_cmd->add_option("--seeds", seeds, "Seed list, e.g. 0,1,2 or 0-4 (overrides run.seeds)");
  train_cmd->add_flag("--force", train.force, "Replace an existing run directory");

  std::string eval_dir;
  int eval_episodes = 20;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate the mean policy of every seed in a run");
  eval_cmd->add_option("run_dir", eval_dir, "Run directory")->required();
  eval_cmd->add_option("-n,--episodes", eval_episodes, "Evaluation episodes per seed")->check(CLI::PositiveNumber);

  std::vector<std::string> report_dirs;
  std::string report_out = "report/report.csv";
  int n_boot = 2000;
  auto* report_cmd = app.add_subcommand("report", "Aggregate runs into IQM scores with bootstrap intervals");
  report_cmd->add_option("run_dirs", report_dirs, "Run directories")->required();
  report_cmd->add_option("--out", report_out, "Output CSV (scores.csv is written alongside)");
  report_cmd->add_option("--bootstrap", n_boot, "Bootstrap replicates")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  try {
    if (*train_cmd) {
      if (*out_opt) train.output = out;
      if (*seeds_opt) train.seeds = seeds;
      const auto dir = tce::cmd_train(train, std::cerr);
      std::cout << dir.string() << '\n';
    } else if (*eval_cmd) {
      std::cout << tce::cmd_eval(eval_dir, eval_episodes, std::cerr).string() << '\n';
    } else if (*report_cmd) {
      std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
      std::cout << tce::cmd_report(dirs, report_out, n_boot, std::cerr).string() << '\n';
    }
  } catch (const tce::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const tce::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
