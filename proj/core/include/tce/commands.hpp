#pragma once

// Implementations behind the `tce` command-line subcommands.  Errors surface as
// exceptions; the executable maps ConfigError to exit code 2 and
// NumericalError to exit code 3.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tce {

struct TrainOptions {
  std::string config_path;
  std::vector<std::string> overrides;       // "key=value"
  std::optional<std::string> output;        // replaces run.output
  std::optional<std::string> seeds;         // replaces run.seeds
  bool force = false;                       // allow replacing an existing run directory
};

/// Layout: <out>/config.ini, <out>/manifest.txt and per seed <out>/seed-<s>/
/// {config.ini, manifest.txt, progress.csv, policy.txt}.  progress.csv rows are
/// flushed as they are produced, so a numerical abort leaves the partial file.
std::filesystem::path cmd_train(const TrainOptions& options, std::ostream& log);

/// Deterministic mean-policy episodes for every seed of a run.  Writes
/// per seed metrics.csv, eval.csv and trajectory.csv (first episode) and a
/// pooled <run>/metrics.csv.  Returns the pooled rows' path.
std::filesystem::path cmd_eval(const std::filesystem::path& run_dir, int n_episodes, std::ostream& log);

/// Stratified-bootstrap IQM across runs grouped by algorithm (tasks = environments).
/// Writes `<algorithm>:<metric>` rows to out_path and raw per-run scores next to it
/// as scores.csv.
std::filesystem::path cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                                 const std::filesystem::path& out_path, int n_boot, std::ostream& log);

/// Version string recorded in manifests.
std::string version_string();

/// Per-run score: mean success rate over the final `window` progress rows.
double final_success_rate(const std::filesystem::path& progress_csv, int window = 10);

}  // namespace tce
