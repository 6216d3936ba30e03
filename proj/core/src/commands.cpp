#include "tce/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "tce/csv.hpp"
#include "tce/errors.hpp"
#include "tce/metrics.hpp"
#include "tce/run_config.hpp"
#include "tce/trainer.hpp"

#ifndef TCE_VERSION_STRING
#define TCE_VERSION_STRING "unknown"
#endif

namespace fs = std::filesystem;

namespace tce {
namespace {

constexpr int kBootstrapReplicates = 2000;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CsvTable read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read " + path.string());
  return read_csv(in);
}

RunConfig load_snapshot_config(const fs::path& path) {
  return build_run_config(parse_config_text(read_text(path), path.string()));
}

std::string manifest(const RunConfig& rc, const std::string& status, const std::vector<std::string>& extra) {
  std::ostringstream m;
  m << "version = " << version_string() << '\n'
    << "algorithm = " << to_string(rc.trainer.algorithm) << '\n'
    << "env = " << rc.trainer.env << '\n'
    << "status = " << status << '\n';
  for (const auto& line : extra) m << line << '\n';
  return m.str();
}

std::vector<fs::path> seed_dirs(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw ArgumentError(run_dir.string() + " is not a run directory");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    if (e.is_directory() && e.path().filename().string().rfind("seed-", 0) == 0) dirs.push_back(e.path());
  }
  if (dirs.empty()) throw ArgumentError(run_dir.string() + " contains no seed-* directories");
  std::sort(dirs.begin(), dirs.end(), [](const fs::path& a, const fs::path& b) {
    return std::stoull(a.filename().string().substr(5)) < std::stoull(b.filename().string().substr(5));
  });
  return dirs;
}

std::uint64_t seed_of(const fs::path& dir) { return std::stoull(dir.filename().string().substr(5)); }

}  // namespace

std::string version_string() { return std::string("tce ") + TCE_VERSION_STRING; }

fs::path cmd_train(const TrainOptions& options, std::ostream& log) {
  std::vector<std::string> overrides = options.overrides;
  if (options.output) overrides.push_back("run.output=" + *options.output);
  if (options.seeds) overrides.push_back("run.seeds=" + *options.seeds);
  const RunConfig rc = load_run_config(options.config_path, overrides);

  const fs::path out(rc.output);
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!options.force) throw ConfigError(out.string() + " already exists; pass --force to replace it");
    fs::remove_all(out);
  }
  fs::create_directories(out);
  const std::string ini = to_ini(rc);
  write_text(out / "config.ini", ini);
  write_text(out / "manifest.txt", manifest(rc, "running", {"seeds = " + std::to_string(rc.seeds.size())}));

  for (std::uint64_t seed : rc.seeds) {
    const fs::path dir = out / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    write_text(dir / "config.ini", ini);
    Trainer trainer(rc.trainer, seed);
    std::ofstream progress(dir / "progress.csv");
    CsvTable header;
    header.header = progress_header();
    write_csv(progress, header);
    progress.flush();
    try {
      for (int i = 0; i < rc.trainer.iterations; ++i) {
        const ProgressRow row = trainer.iterate();
        const auto fields = progress_fields(row);
        for (std::size_t f = 0; f < fields.size(); ++f) progress << (f ? "," : "") << fields[f];
        progress << '\n';
        progress.flush();
        if (row.iteration % 10 == 0 || row.iteration == rc.trainer.iterations) {
          log << "seed " << seed << " iteration " << row.iteration << " env_steps " << row.env_steps
              << " return " << row.mean_return << " success " << row.success_rate << '\n';
        }
      }
    } catch (const NumericalError& e) {
      write_text(dir / "manifest.txt",
                 manifest(rc, "aborted", {"seed = " + std::to_string(seed),
                                          "iterations_completed = " + std::to_string(trainer.iteration()),
                                          std::string("error = ") + e.what()}));
      throw;
    }
    std::ofstream snap(dir / "policy.txt");
    trainer.write_snapshot(snap);
    write_text(dir / "manifest.txt",
               manifest(rc, "complete", {"seed = " + std::to_string(seed),
                                         "iterations_completed = " + std::to_string(trainer.iteration()),
                                         "env_steps = " + std::to_string(trainer.env_steps())}));
  }
  write_text(out / "manifest.txt", manifest(rc, "complete", {"seeds = " + std::to_string(rc.seeds.size())}));
  return out;
}

fs::path cmd_eval(const fs::path& run_dir, int n_episodes, std::ostream& log) {
  if (n_episodes < 1) throw ArgumentError("eval: need at least one episode");
  const auto dirs = seed_dirs(run_dir);
  std::map<std::string, std::vector<double>> pooled;
  const std::vector<std::string> names{"success_rate", "return", "max_jerk", "mean_sq_jerk", "dimensionless_jerk"};
  for (const auto& dir : dirs) {
    const RunConfig rc = load_snapshot_config(dir / "config.ini");
    const std::uint64_t seed = seed_of(dir);
    Trainer trainer(rc.trainer, seed);
    std::ifstream snap(dir / "policy.txt");
    if (!snap) throw ArgumentError(dir.string() + ": missing policy.txt (training incomplete?)");
    trainer.read_snapshot(snap);
    const auto episodes = trainer.evaluate(n_episodes);

    CsvTable per_episode;
    per_episode.header = {"episode", "return", "success", "max_jerk", "mean_sq_jerk", "dimensionless_jerk"};
    std::map<std::string, std::vector<double>> values;
    for (std::size_t i = 0; i < episodes.size(); ++i) {
      const auto& e = episodes[i];
      const std::vector<double> v{e.success ? 1.0 : 0.0, e.total_return, e.smoothness.max_jerk,
                                  e.smoothness.mean_sq_jerk, e.smoothness.dimensionless_jerk};
      for (std::size_t k = 0; k < names.size(); ++k) {
        values[names[k]].push_back(v[k]);
        pooled[names[k]].push_back(v[k]);
      }
      per_episode.rows.push_back({std::to_string(i), format_double(e.total_return), e.success ? "1" : "0",
                                  format_double(e.smoothness.max_jerk), format_double(e.smoothness.mean_sq_jerk),
                                  format_double(e.smoothness.dimensionless_jerk)});
    }
    std::vector<MetricRow> rows;
    for (const auto& name : names) {
      const IqmResult r = bootstrap_mean_ci(values[name], kBootstrapReplicates, derive_seed(seed, "bootstrap"));
      rows.push_back({name, r.point, r.ci_low, r.ci_high});
    }
    {
      std::ofstream f(dir / "metrics.csv");
      write_metrics_csv(f, rows);
      std::ofstream e(dir / "eval.csv");
      write_csv(e, per_episode);
      std::ofstream t(dir / "trajectory.csv");
      write_trajectory_csv(t, episodes.front().trajectory);
    }
    log << dir.filename().string() << ": success " << rows[0].value << " return " << rows[1].value
        << " dimensionless_jerk " << rows[4].value << '\n';
  }
  std::vector<MetricRow> rows;
  for (const auto& name : names) {
    const IqmResult r = bootstrap_mean_ci(pooled[name], kBootstrapReplicates, derive_seed(0, "bootstrap"));
    rows.push_back({name, r.point, r.ci_low, r.ci_high});
  }
  const fs::path out = run_dir / "metrics.csv";
  std::ofstream f(out);
  write_metrics_csv(f, rows);
  return out;
}

double final_success_rate(const fs::path& progress_csv, int window) {
  const CsvTable t = read_table(progress_csv);
  if (t.rows.empty()) throw ArgumentError(progress_csv.string() + ": no progress rows");
  const std::size_t col = t.column("success_rate");
  const std::size_t n = std::min(t.rows.size(), static_cast<std::size_t>(std::max(window, 1)));
  double s = 0.0;
  for (std::size_t i = t.rows.size() - n; i < t.rows.size(); ++i) s += parse_double(t.rows[i][col]);
  return s / static_cast<double>(n);
}

fs::path cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out_path, int n_boot, std::ostream& log) {
  if (run_dirs.empty()) throw ArgumentError("report: no run directories given");
  // algorithm -> metric -> task -> per-run scores
  std::map<std::string, std::map<std::string, std::map<std::string, std::vector<double>>>> scores;
  CsvTable raw;
  raw.header = {"algorithm", "env", "run", "seed", "metric", "score"};
  for (const auto& run : run_dirs) {
    for (const auto& dir : seed_dirs(run)) {
      const RunConfig rc = load_snapshot_config(dir / "config.ini");
      const std::string algo = to_string(rc.trainer.algorithm);
      const std::string env = rc.trainer.env;
      std::vector<std::pair<std::string, double>> run_scores;
      const CsvTable progress = read_table(dir / "progress.csv");
      if (!progress.rows.empty()) {
        run_scores.emplace_back("final_success_rate", final_success_rate(dir / "progress.csv"));
        run_scores.emplace_back("final_return", parse_double(progress.rows.back()[progress.column("mean_return")]));
      }
      if (fs::exists(dir / "metrics.csv")) {
        std::ifstream in(dir / "metrics.csv");
        for (const auto& m : read_metrics_csv(in)) run_scores.emplace_back("eval_" + m.metric, m.value);
      }
      for (const auto& [metric, score] : run_scores) {
        scores[algo][metric][env].push_back(score);
        raw.rows.push_back({algo, env, run.string(), std::to_string(seed_of(dir)), metric, format_double(score)});
      }
    }
  }
  std::vector<MetricRow> rows;
  for (const auto& [algo, metrics] : scores) {
    for (const auto& [metric, per_task] : metrics) {
      const IqmResult r = stratified_bootstrap_ci(per_task, n_boot, derive_seed(0, "bootstrap"));
      rows.push_back({algo + ":" + metric, r.point, r.ci_low, r.ci_high});
      log << algo << ' ' << metric << " IQM " << r.point << " [" << r.ci_low << ", " << r.ci_high << "] over "
          << r.n_runs << " runs\n";
    }
  }
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  {
    std::ofstream f(out_path);
    if (!f) throw ArgumentError("cannot write " + out_path.string());
    write_metrics_csv(f, rows);
  }
  std::ofstream s(out_path.parent_path() / "scores.csv");
  write_csv(s, raw);
  return out_path;
}

}  // namespace tce
