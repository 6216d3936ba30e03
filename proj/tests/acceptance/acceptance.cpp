// Acceptance runner: one PASS/FAIL line per criterion.
//
//   tce_acceptance            run every criterion
//   tce_acceptance 1 4 10     run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tce/learner.hpp"
#include "tce/metrics.hpp"
#include "tce/run_config.hpp"
#include "tce/trainer.hpp"
#include "tce/traj_dist.hpp"
#include "tce/trust_region.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string list(const std::vector<double>& v, const char* f = "%.3f") {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
  return s + "]";
}

// ---------------------------------------------------------------------------
// Trained runs, cached so criteria that share a configuration share seeds.

struct TrainedRun {
  std::unique_ptr<tce::Trainer> trainer;
  std::vector<tce::ProgressRow> progress;

  double final_success(int window = 10) const {
    const int n = std::min<int>(window, static_cast<int>(progress.size()));
    double s = 0.0;
    for (int i = static_cast<int>(progress.size()) - n; i < static_cast<int>(progress.size()); ++i) {
      s += progress[static_cast<std::size_t>(i)].success_rate;
    }
    return s / n;
  }

  /// First env-step count at which the trailing window's mean success reaches the threshold, or -1.
  long long steps_to(double threshold, int window = 10) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < progress.size(); ++i) {
      sum += progress[i].success_rate;
      if (i >= static_cast<std::size_t>(window)) sum -= progress[i - window].success_rate;
      const double n = static_cast<double>(std::min<std::size_t>(i + 1, window));
      if (i + 1 >= static_cast<std::size_t>(window) && sum / n >= threshold) return progress[i].env_steps;
    }
    return -1;
  }
};

std::map<std::string, TrainedRun> run_cache;

tce::RunConfig load(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return tce::load_run_config(std::string(TCE_CONFIG_DIR) + "/" + name + ".ini", overrides);
}

const TrainedRun& train(const std::string& name, const tce::RunConfig& config, std::uint64_t seed) {
  const std::string key = name + "#" + std::to_string(seed);
  if (auto it = run_cache.find(key); it != run_cache.end()) return it->second;
  const auto start = Clock::now();
  TrainedRun run;
  run.trainer = std::make_unique<tce::Trainer>(config.trainer, seed);
  for (int i = 0; i < config.trainer.iterations; ++i) run.progress.push_back(run.trainer->iterate());
  std::cerr << "  trained " << name << " seed " << seed << ": final success " << fmt("%.3f", run.final_success())
            << " after " << run.trainer->env_steps() << " steps (" << fmt("%.0f", seconds_since(start)) << " s)\n";
  return run_cache.emplace(key, std::move(run)).first->second;
}

std::vector<double> final_successes(const std::string& name, const tce::RunConfig& config, int seeds) {
  std::vector<double> out;
  for (int s = 0; s < seeds; ++s) out.push_back(train(name, config, static_cast<std::uint64_t>(s)).final_success());
  return out;
}

double median(std::vector<double> v) { return tce::percentile(std::move(v), 50.0); }

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> tau_dist(0.5, 3.0);
  double max_pos = 0.0, max_vel = 0.0, max_boundary = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    tce::MpConfig c;
    c.num_dof = 1;
    c.num_basis = 5;
    c.num_steps = 100;
    c.duration = tau_dist(rng);
    c.forcing_gain = 156.25;
    const auto kernel = tce::build_kernel(c);
    const Eigen::VectorXd w = oracle::random_vector(6, rng, 1.5);
    const Eigen::VectorXd yb = oracle::random_vector(1, rng);
    const Eigen::VectorXd vb = oracle::random_vector(1, rng);
    const auto traj = tce::compute_trajectory(kernel, w, yb, vb);
    oracle::DmpSpec s;
    s.num_basis = c.num_basis;
    s.tau = c.duration;
    s.alpha = c.alpha;
    s.alpha_x = c.alpha_x;
    s.overlap = c.basis_overlap;
    s.forcing_gain = c.forcing_gain;
    const Eigen::MatrixXd ref = oracle::dmp_rk4(s, w.head(5), w[5], yb[0], vb[0], 100, 10000);
    max_pos = std::max(max_pos, (traj.pos.row(0) - ref.row(0)).cwiseAbs().maxCoeff());
    max_vel = std::max(max_vel, (traj.vel.row(0) - ref.row(1)).cwiseAbs().maxCoeff());
    max_boundary = std::max({max_boundary, std::abs(traj.pos(0, 0) - yb[0]), std::abs(traj.vel(0, 0) - vb[0])});
  }
  const double elapsed = seconds_since(start);
  return {max_pos <= 1e-4 && max_boundary <= 1e-10 && elapsed < 10.0,
          "20 instances: max |pos - rk4| " + fmt("%.2e", max_pos) + " (<= 1e-4), max |vel - rk4| " + fmt("%.2e", max_vel) +
              ", boundary error " + fmt("%.1e", max_boundary) + " (<= 1e-10), " + fmt("%.2f", elapsed) + " s (< 10 s)"};
}

Outcome criterion2() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> dof_dist(1, 3), basis_dist(1, 5);
  std::uniform_real_distribution<double> noise_dist(0.005, 0.1);
  double max_err = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 50; ++trial) {
    tce::MpConfig c;
    c.num_dof = dof_dist(rng);
    c.num_basis = basis_dist(rng);
    c.forcing_gain = 156.25;
    const auto kernel = tce::build_kernel(c);
    const int m = kernel.num_params();
    const tce::ParamGaussian pg{oracle::random_vector(m, rng), oracle::random_lower(m, rng, 0.05)};
    const Eigen::VectorXd yb = oracle::random_vector(c.num_dof, rng);
    const Eigen::VectorXd vb = oracle::random_vector(c.num_dof, rng);
    const tce::NoiseModel noise{noise_dist(rng)};
    std::uniform_int_distribution<int> t_dist(0, c.num_steps);
    int a = t_dist(rng), b = t_dist(rng);
    while (b == a) b = t_dist(rng);
    const tce::TimePair pair{std::min(a, b), std::max(a, b)};
    const auto dense = fixture::dense_trajectory(kernel, pg, yb, vb, noise.noise_std);
    const auto seg = tce::segment_distribution(kernel, pg, yb, vb, pair, noise);
    const auto idx = fixture::pair_indices(c.num_dof, c.num_steps + 1, pair);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      max_err = std::max(max_err, std::abs(seg.mean[ii] - dense.mean[idx[i]]));
      for (std::size_t j = 0; j < idx.size(); ++j) {
        max_err = std::max(max_err, std::abs(seg.cov(ii, static_cast<Eigen::Index>(j)) - dense.cov(idx[i], idx[j])));
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(seg.cov);
    worst_ratio = std::min(worst_ratio, es.eigenvalues().minCoeff() / (noise.noise_std * noise.noise_std));
  }
  return {max_err <= 1e-10 && worst_ratio >= 1.0 - 1e-8,
          "50 instances: max |segment - dense block| " + fmt("%.2e", max_err) + " (<= 1e-10), min eigenvalue / sigma^2 " +
              fmt("%.12f", worst_ratio) + " (>= 1 - 1e-8)"};
}

Outcome criterion3() {
  std::mt19937_64 rng(303);
  double max_ll = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    tce::MpConfig c;
    c.num_dof = 1 + trial % 3;
    c.num_basis = 2 + trial % 4;
    c.forcing_gain = 156.25;
    const auto kernel = tce::build_kernel(c);
    const int m = kernel.num_params();
    const tce::ParamGaussian pg{oracle::random_vector(m, rng), oracle::random_lower(m, rng, 0.05)};
    const Eigen::VectorXd yb = oracle::random_vector(c.num_dof, rng);
    const Eigen::VectorXd vb = oracle::random_vector(c.num_dof, rng);
    const tce::NoiseModel noise{0.03};
    const auto observed = tce::compute_trajectory(kernel, tce::sample(pg, rng()), yb, vb);
    const auto pairs = tce::partition_pairs(c.num_steps, 1 + trial % 7);
    const auto dense = fixture::dense_trajectory(kernel, pg, yb, vb, noise.noise_std);
    double expected = 0.0;
    for (const auto& p : pairs) {
      const auto idx = fixture::pair_indices(c.num_dof, c.num_steps + 1, p);
      const auto n = static_cast<Eigen::Index>(idx.size());
      Eigen::VectorXd mu(n);
      Eigen::MatrixXd cov(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        mu[i] = dense.mean[idx[static_cast<std::size_t>(i)]];
        for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = dense.cov(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      }
      expected += oracle::dense_log_pdf(mu, cov, tce::segment_values(observed, p)) / static_cast<double>(pairs.size());
    }
    const double got = tce::trajectory_log_likelihood(kernel, pg, yb, vb, pairs, observed, noise);
    max_ll = std::max(max_ll, std::abs(got - expected));
  }

  double max_grad = 0.0;
  const auto check = [&](const fixture::SurrogateProblem& prob, const tce::TrustRegionBounds& bounds) {
    const auto ev = tce::tce_surrogate(prob.policy, prob.batches, prob.old, bounds, prob.noise, true);
    auto probe = prob.policy;
    const auto f = [&](const Eigen::VectorXd& x) {
      probe.set_parameters(x);
      return tce::tce_surrogate(probe, prob.batches, prob.old, bounds, prob.noise, false).loss;
    };
    max_grad = std::max(max_grad, oracle::max_rel_error(ev.grad, oracle::numeric_gradient(f, prob.policy.parameters(), 1e-6)));
  };
  // 1 DoF, N = 2, K = 2: once with an inactive projection, once with both projections active.
  check(fixture::make_surrogate_problem(1, 2, 2, 3, 31), {1e6, 1e6, 3.0});
  const auto tight_prob = fixture::make_surrogate_problem(1, 2, 2, 3, 32, 0.3);
  const tce::TrustRegionBounds tight{1e-3, 1e-5, 0.0};
  bool projection_active = true;
  for (std::size_t b = 0; b < tight_prob.batches.size(); ++b) {
    const auto p = tce::project(tight_prob.policy.predict(tight_prob.batches[b].initial_state), tight_prob.old[b], tight);
    projection_active = projection_active && p.mean.active && p.cov.active;
  }
  check(tight_prob, tight);
  return {max_ll <= 1e-8 && max_grad <= 1e-4 && projection_active,
          "log-likelihood max error " + fmt("%.2e", max_ll) + " (<= 1e-8) over 20 instances; surrogate gradient max rel error " +
              fmt("%.2e", max_grad) + " (<= 1e-4), projection active in the constrained case: " +
              (projection_active ? "yes" : "no")};
}

Outcome criterion4() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> log_eps(-4.0, 0.0);
  std::uniform_int_distribution<int> dim(1, 8);
  int bound_violations = 0, inside_changed = 0, not_idempotent = 0, inside = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = dim(rng);
    const double spread = trial % 3 == 0 ? 1e-3 : 1.5;
    const tce::ParamGaussian old{oracle::random_vector(m, rng), oracle::random_lower(m, rng, 0.3)};
    const Eigen::MatrixXd strict = Eigen::MatrixXd(oracle::random_lower(m, rng, 0.0).triangularView<Eigen::StrictlyLower>());
    const tce::ParamGaussian raw{old.mean + oracle::random_vector(m, rng, spread), old.chol + 0.1 * spread * strict};
    const tce::TrustRegionBounds b{std::pow(10.0, log_eps(rng)), std::pow(10.0, log_eps(rng)), 1.0};
    const auto p = tce::project(raw, old, b);
    const auto g = p.gaussian();
    const Eigen::MatrixXd old_cov = old.covariance();
    const Eigen::VectorXd d = g.mean - old.mean;
    const double dm = d.dot(old_cov.llt().solve(d)) / b.eps_mean;
    const double dc = (g.covariance() - old_cov).squaredNorm() / b.eps_cov;
    worst = std::max({worst, dm, dc});
    if (dm > 1 + 1e-6 || dc > 1 + 1e-6) ++bound_violations;
    if (!p.mean.active && !p.cov.active) {
      ++inside;
      if (g.mean != raw.mean || g.chol != raw.chol) ++inside_changed;
    }
    const auto again = tce::project(g, old, b).gaussian();
    if (again.mean != g.mean || again.chol != g.chol) ++not_idempotent;
  }
  return {bound_violations == 0 && inside_changed == 0 && not_idempotent == 0 && inside > 0,
          "1000 instances: max dissimilarity / eps " + fmt("%.9f", worst) + " (<= 1 + 1e-6), bound violations " +
              std::to_string(bound_violations) + ", inside instances changed " + std::to_string(inside_changed) + " of " +
              std::to_string(inside) + ", non-idempotent " + std::to_string(not_idempotent)};
}

Outcome criterion5() {
  std::mt19937_64 rng(505);
  double max_tel = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    tce::MpConfig c;
    c.num_steps = 20 + trial;
    const auto kernel = tce::build_kernel(c);
    const int horizon = c.num_steps;
    tce::EpisodeRecord ep;
    ep.initial_state = oracle::random_vector(3, rng);
    ep.boundary_pos = oracle::random_vector(2, rng);
    ep.boundary_vel = oracle::random_vector(2, rng);
    ep.sampled_params = oracle::random_vector(kernel.num_params(), rng);
    ep.trajectory = tce::compute_trajectory(kernel, ep.sampled_params, ep.boundary_pos, ep.boundary_vel);
    ep.states.resize(4, horizon + 1);
    for (int t = 0; t <= horizon; ++t) ep.states.col(t) = oracle::random_vector(4, rng);
    ep.rewards = oracle::random_vector(horizon, rng);
    tce::Mlp value({4, 8, 1}, tce::Activation::tanh);
    value.set_parameters(oracle::random_vector(static_cast<int>(value.num_params()), rng, 0.5));
    std::uniform_int_distribution<int> k_dist(1, horizon);
    const int k = k_dist(rng);
    const auto batch = tce::make_segments(ep, kernel, k, 1.0);
    const Eigen::VectorXd adv = tce::segment_advantages(batch, value, 1.0);
    const double v0 = value.forward(Eigen::VectorXd(ep.states.col(0)))[0];
    max_tel = std::max(max_tel, std::abs(adv.sum() - (ep.rewards.sum() - v0)));
  }
  double max_gae = 0.0;
  for (double gamma : {1.0, 0.99, 0.9}) {
    for (double lam : {0.0, 0.5, 0.95, 1.0}) {
      const Eigen::VectorXd r = oracle::random_vector(200, rng);
      Eigen::VectorXd v = oracle::random_vector(201, rng);
      v[200] = 0.0;
      const Eigen::VectorXd a = tce::gae_advantages(v, r, {gamma, lam});
      max_gae = std::max(max_gae, (a - oracle::gae_double_sum(v, r, gamma, lam)).cwiseAbs().maxCoeff());
    }
  }
  return {max_tel <= 1e-10 && max_gae <= 1e-12,
          "telescoping max error " + fmt("%.2e", max_tel) + " (<= 1e-10) over 50 episodes; GAE max error " +
              fmt("%.2e", max_gae) + " (<= 1e-12)"};
}

Outcome criterion6() {
  const auto config = load("reacher_tce");
  const auto finals = final_successes("reacher_tce", config, 5);
  long long steps = 0;
  for (int s = 0; s < 5; ++s) steps = std::max(steps, train("reacher_tce", config, static_cast<std::uint64_t>(s)).trainer->env_steps());
  const double q = tce::iqm(finals);
  return {q >= 0.9 && steps <= 200000,
          "reacher-dense TCE, 5 seeds, " + std::to_string(steps) + " env steps (<= 2e5): final-10 success " + list(finals) +
              ", IQM " + fmt("%.3f", q) + " (>= 0.9)"};
}

Outcome criterion7() {
  const std::vector<std::pair<std::string, std::string>> runs{{"TCE", "viapoint_tce"}, {"BBRL-Cov", "viapoint_bbrl_cov"}};
  bool pass = true;
  std::string detail;
  for (const auto& [label, name] : runs) {
    const auto config = load(name);
    const auto finals = final_successes(name, config, 5);
    const double q = tce::iqm(finals);
    long long steps = 0;
    std::vector<double> reach;
    for (int s = 0; s < 5; ++s) {
      const auto& run = train(name, config, static_cast<std::uint64_t>(s));
      steps = std::max(steps, run.trainer->env_steps());
      reach.push_back(static_cast<double>(run.steps_to(0.7)));
    }
    pass = pass && q >= 0.7 && steps <= 500000;
    detail += (detail.empty() ? "" : "; ") + label + " " + std::to_string(steps) + " steps: success " + list(finals) +
              ", IQM " + fmt("%.3f", q) + " (>= 0.7), env steps to 0.7 " + list(reach, "%.0f");
  }
  return {pass, "viapoint-sparse, 5 seeds each. " + detail + " (-1: not reached)"};
}

Outcome criterion8() {
  const auto tce_config = load("reacher_tce");
  const auto ppo_config = load("reacher_ppo");
  constexpr int kSeeds = 20;
  constexpr int kEpisodes = 10;
  int smoother = 0, smoother_vs_mean = 0;
  std::vector<double> ratios;
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const auto& tce_run = train("reacher_tce", tce_config, seed);
    const auto& ppo_run = train("reacher_ppo", ppo_config, seed);
    std::vector<double> tce_jerk, ppo_jerk, ppo_mean_jerk;
    for (const auto& ep : tce_run.trainer->evaluate(kEpisodes)) tce_jerk.push_back(ep.smoothness.dimensionless_jerk);
    for (const auto& ep : ppo_run.trainer->evaluate(kEpisodes)) ppo_mean_jerk.push_back(ep.smoothness.dimensionless_jerk);
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < kEpisodes; ++i) seeds.push_back(tce::derive_seed(seed, "eval", static_cast<std::uint64_t>(i)));
    const auto& trainer = *ppo_run.trainer;
    const auto executed = tce::collect_step_rollouts([&] { return trainer.make_environment(); }, trainer.step_policy(),
                                                     kEpisodes, seeds, false);
    for (const auto& ep : executed) ppo_jerk.push_back(tce::jerk_metrics(ep.executed).dimensionless_jerk);
    const double t = median(tce_jerk), p = median(ppo_jerk);
    if (t < p) ++smoother;
    if (t < median(ppo_mean_jerk)) ++smoother_vs_mean;
    ratios.push_back(p / t);
  }
  const double fraction = static_cast<double>(smoother) / kSeeds;
  return {fraction >= 0.9,
          "reacher-dense, 20 paired seeds: TCE mean-trajectory jerk below PPO-step executed jerk in " +
              std::to_string(smoother) + "/20 (>= 90%), median PPO/TCE ratio " + fmt("%.2f", median(ratios)) +
              "; against the deterministic PPO mean action sequence TCE is smoother in " +
              std::to_string(smoother_vs_mean) + "/20"};
}

double max_cross_dof_correlation(const tce::Trainer& trainer, std::uint64_t seed) {
  auto env = trainer.make_environment();
  const auto s0 = env->reset(tce::derive_seed(seed, "eval", 0));
  const auto pg = trainer.episodic_policy().predict(s0);
  const auto dense = fixture::dense_trajectory(trainer.kernel(), pg, env->pos(), env->vel(), 0.0);
  const int points = trainer.kernel().num_steps() + 1;
  double best = 0.0;
  for (int i = 1; i < points; ++i) {
    for (int j = 1; j < points; ++j) {
      const double var = dense.cov(i, i) * dense.cov(points + j, points + j);
      if (var > 0.0) best = std::max(best, std::abs(dense.cov(i, points + j)) / std::sqrt(var));
    }
  }
  return best;
}

Outcome criterion9() {
  const auto cov_config = load("viapoint_bbrl_cov");
  const auto diag_config = load("viapoint_bbrl");
  const auto cov_finals = final_successes("viapoint_bbrl_cov", cov_config, 10);
  const auto diag_finals = final_successes("viapoint_bbrl", diag_config, 10);
  std::vector<double> cov_rho, diag_rho;
  for (int s = 0; s < 10; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    cov_rho.push_back(max_cross_dof_correlation(*train("viapoint_bbrl_cov", cov_config, seed).trainer, seed));
    diag_rho.push_back(max_cross_dof_correlation(*train("viapoint_bbrl", diag_config, seed).trainer, seed));
  }
  const double qc = tce::iqm(cov_finals), qd = tce::iqm(diag_finals);
  const double min_cov_rho = *std::min_element(cov_rho.begin(), cov_rho.end());
  const double max_diag_rho = *std::max_element(diag_rho.begin(), diag_rho.end());
  return {qc >= qd - 0.05 && min_cov_rho > 0.1 && max_diag_rho == 0.0,
          "viapoint-sparse, 10 seeds: BBRL-Cov IQM " + fmt("%.3f", qc) + " vs BBRL IQM " + fmt("%.3f", qd) +
              " (>= BBRL - 0.05); BBRL-Cov max cross-DoF |rho| per seed " + list(cov_rho) + " (each > 0.1); BBRL max " +
              fmt("%.1e", max_diag_rho) + " (== 0)"};
}

Outcome criterion10() {
  const std::vector<double> v{1, 2, 3, 4};
  const bool iqm_ok = tce::iqm(v) == 2.5;
  const std::map<std::string, std::vector<double>> runs{{"a", {0.2, 0.9, 0.4, 0.7}}, {"b", {0.1, 0.5, 0.3}}};
  const auto r1 = tce::stratified_bootstrap_ci(runs, 2000, 7);
  const auto r2 = tce::stratified_bootstrap_ci(runs, 2000, 7);
  const bool deterministic = r1.point == r2.point && r1.ci_low == r2.ci_low && r1.ci_high == r2.ci_high;
  const std::map<std::string, std::vector<double>> flat{{"a", {0.6, 0.6, 0.6}}, {"b", {0.6, 0.6}}};
  const auto z = tce::stratified_bootstrap_ci(flat, 2000, 7);
  const bool zero_width = z.ci_high - z.ci_low == 0.0;
  return {iqm_ok && deterministic && zero_width,
          std::string("iqm([1,2,3,4]) = ") + fmt("%.17g", tce::iqm(v)) + ", bootstrap repeatable: " +
              (deterministic ? "yes" : "no") + ", constant-data CI width " + fmt("%.1e", z.ci_high - z.ci_low)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                        criterion6, criterion7, criterion8, criterion9, criterion10};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
              << fmt("%.1f", seconds_since(start)) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
