#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tce/prodmp.hpp"

namespace tce {

struct SmoothnessReport {
  double max_jerk = 0.0;            // max_t |jerk(t)|
  double mean_sq_jerk = 0.0;        // mean_t |jerk(t)|^2
  double dimensionless_jerk = 0.0;  // duration^5 / amplitude^2 * integral |jerk|^2 dt
};

/// Jerk from finite_diff_derivatives(traj, 3).  The amplitude is the Euclidean
/// norm of the per-DoF peak-to-peak position range; a constant trajectory has
/// dimensionless jerk 0.
SmoothnessReport jerk_metrics(const Trajectory& traj);

/// Mean after dropping floor(n / 4) values from each tail of the sorted input.
double iqm(std::span<const double> values);

/// Percentile with linear interpolation between order statistics, q in [0, 100].
double percentile(std::vector<double> values, double q);

struct IqmResult {
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_runs = 0;
  int n_bootstrap = 0;
};

/// Resamples runs within each task, recomputes the pooled IQM per replicate and
/// reports the 2.5 / 97.5 percentiles.  The interval is widened if needed so
/// that it always contains the point estimate.
IqmResult stratified_bootstrap_ci(const std::map<std::string, std::vector<double>>& per_task_runs, int n_boot,
                                  std::uint64_t seed);

/// Plain mean with a percentile bootstrap interval.
IqmResult bootstrap_mean_ci(std::span<const double> values, int n_boot, std::uint64_t seed);

struct MetricRow {
  std::string metric;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// `metric,value,ci_low,ci_high`.
void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(std::istream& in);

}  // namespace tce
