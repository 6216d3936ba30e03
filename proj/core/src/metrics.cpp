#include "tce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tce/csv.hpp"
#include "tce/errors.hpp"
#include "tce/random.hpp"

namespace tce {

SmoothnessReport jerk_metrics(const Trajectory& traj) {
  const Eigen::MatrixXd jerk = finite_diff_derivatives(traj, 3);
  const Eigen::VectorXd sq = jerk.colwise().squaredNorm().transpose();
  const Eigen::Index n = sq.size();
  SmoothnessReport r;
  r.max_jerk = std::sqrt(sq.maxCoeff());
  r.mean_sq_jerk = sq.mean();
  const double amplitude = (traj.pos.rowwise().maxCoeff() - traj.pos.rowwise().minCoeff()).norm();
  if (amplitude > 0.0) {
    const double integral = traj.dt * (sq.sum() - 0.5 * (sq[0] + sq[n - 1]));
    r.dimensionless_jerk = std::pow(traj.duration(), 5) / (amplitude * amplitude) * integral;
  }
  return r;
}

double iqm(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("iqm: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t cut = v.size() / 4;
  const auto first = v.begin() + static_cast<std::ptrdiff_t>(cut);
  const auto last = v.end() - static_cast<std::ptrdiff_t>(cut);
  return std::accumulate(first, last, 0.0) / static_cast<double>(last - first);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ArgumentError("percentile: empty input");
  if (!(q >= 0.0 && q <= 100.0)) throw ArgumentError("percentile: q must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

IqmResult finish(double point, std::vector<double> replicates, int n_runs) {
  IqmResult r;
  r.point = point;
  r.n_runs = n_runs;
  r.n_bootstrap = static_cast<int>(replicates.size());
  if (replicates.empty()) {
    r.ci_low = r.ci_high = point;
    return r;
  }
  r.ci_low = std::min(percentile(replicates, 2.5), point);
  r.ci_high = std::max(percentile(std::move(replicates), 97.5), point);
  return r;
}

}  // namespace

IqmResult stratified_bootstrap_ci(const std::map<std::string, std::vector<double>>& per_task_runs, int n_boot,
                                  std::uint64_t seed) {
  if (per_task_runs.empty()) throw ArgumentError("stratified_bootstrap_ci: no tasks");
  if (n_boot < 0) throw ArgumentError("stratified_bootstrap_ci: negative replicate count");
  std::vector<double> pooled;
  for (const auto& [task, runs] : per_task_runs) {
    if (runs.empty()) throw ArgumentError("stratified_bootstrap_ci: task '" + task + "' has no runs");
    pooled.insert(pooled.end(), runs.begin(), runs.end());
  }
  const double point = iqm(pooled);
  Rng rng(seed);
  std::vector<double> replicates;
  replicates.reserve(static_cast<std::size_t>(n_boot));
  std::vector<double> sample(pooled.size());
  for (int b = 0; b < n_boot; ++b) {
    std::size_t j = 0;
    for (const auto& [task, runs] : per_task_runs) {
      std::uniform_int_distribution<std::size_t> pick(0, runs.size() - 1);
      for (std::size_t i = 0; i < runs.size(); ++i) sample[j++] = runs[pick(rng)];
    }
    replicates.push_back(iqm(sample));
  }
  return finish(point, std::move(replicates), static_cast<int>(pooled.size()));
}

IqmResult bootstrap_mean_ci(std::span<const double> values, int n_boot, std::uint64_t seed) {
  if (values.empty()) throw ArgumentError("bootstrap_mean_ci: empty input");
  const double n = static_cast<double>(values.size());
  const double point = std::accumulate(values.begin(), values.end(), 0.0) / n;
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> replicates;
  replicates.reserve(static_cast<std::size_t>(std::max(n_boot, 0)));
  for (int b = 0; b < n_boot; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(rng)];
    replicates.push_back(s / n);
  }
  return finish(point, std::move(replicates), static_cast<int>(values.size()));
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  CsvTable t;
  t.header = {"metric", "value", "ci_low", "ci_high"};
  for (const auto& r : rows) {
    t.rows.push_back({r.metric, format_double(r.value), format_double(r.ci_low), format_double(r.ci_high)});
  }
  write_csv(out, t);
}

std::vector<MetricRow> read_metrics_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::size_t m = t.column("metric"), v = t.column("value"), lo = t.column("ci_low"), hi = t.column("ci_high");
  std::vector<MetricRow> rows;
  for (const auto& r : t.rows) rows.push_back({r[m], parse_double(r[v]), parse_double(r[lo]), parse_double(r[hi])});
  return rows;
}

}  // namespace tce
