#include "tce/learner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tce/errors.hpp"

namespace tce {
namespace {

template <typename E>
[[noreturn]] void rethrow_with_episode(const E& e, std::size_t index) {
  throw E("episode " + std::to_string(index) + ": " + e.what());
}

Eigen::MatrixXd lower_part(const Eigen::MatrixXd& m) { return m.triangularView<Eigen::Lower>(); }

// Gradient of <G, L L^T> with respect to the lower factor L.
Eigen::MatrixXd chol_grad(const Eigen::MatrixXd& grad_cov, const Eigen::MatrixXd& chol) {
  return lower_part((grad_cov + grad_cov.transpose()) * chol.triangularView<Eigen::Lower>());
}

GaussianLogPdfGrad segment_term(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const SegmentBatch& batch,
                                int k, const NoiseModel& noise) {
  const auto& map = batch.maps[static_cast<std::size_t>(k)];
  const SegmentDistribution dist = segment_distribution(map, mean, cov, noise);
  return gaussian_log_pdf_grad(dist.mean, dist.cov, batch.observed.col(k), "segment covariance");
}

Eigen::MatrixXd initial_states(std::span<const SegmentBatch> batches) {
  if (batches.empty()) throw ArgumentError("update: empty batch");
  Eigen::MatrixXd s(batches.front().initial_state.size(), static_cast<Eigen::Index>(batches.size()));
  for (std::size_t b = 0; b < batches.size(); ++b) s.col(static_cast<Eigen::Index>(b)) = batches[b].initial_state;
  return s;
}

void check_finite(const SurrogateEval& ev, const char* what) {
  const bool ok = std::isfinite(ev.loss) && std::isfinite(ev.mean_ratio) && (ev.grad.size() == 0 || ev.grad.allFinite());
  if (!ok) {
    throw NumericalError(std::string(what) + ": non-finite surrogate (objective " + std::to_string(ev.objective) +
                         ", penalty " + std::to_string(ev.penalty) + ", mean ratio " + std::to_string(ev.mean_ratio) +
                         ")");
  }
}

void apply_gradient(EpisodicPolicy& policy, AdamState& adam, Eigen::VectorXd grad, const PolicyOptimizer& opt) {
  clip_grad_norm(grad, opt.max_grad_norm);
  Eigen::VectorXd params = policy.parameters();
  adam_step(params, grad, adam, opt.adam);
  policy.set_parameters(params);
}

void measure_violations(const EpisodicPolicy& policy, const Eigen::MatrixXd& states, std::span<const ParamGaussian> old,
                        const TrustRegionBounds& bounds, UpdateDiagnostics& diag) {
  const auto pred = policy.predict_batch(states);
  for (std::size_t b = 0; b < old.size(); ++b) {
    const auto& raw = pred.gaussians[b];
    const auto pm = project_mean(raw.mean, old[b].mean, old[b].chol, bounds.eps_mean);
    const double dc = (raw.covariance() - old[b].covariance()).squaredNorm();
    diag.max_mean_violation = std::max(diag.max_mean_violation, pm.dissimilarity / bounds.eps_mean);
    diag.max_cov_violation = std::max(diag.max_cov_violation, dc / bounds.eps_cov);
  }
}

// Shared tail of the episodic surrogates: projection, penalty and the chain back to the network.
struct ProjectedState {
  GaussianProjection proj;
  ParamGaussian pg;
  Eigen::MatrixXd cov;
};

ProjectedState project_state(const ParamGaussian& raw, const ParamGaussian& old, const TrustRegionBounds& bounds) {
  ProjectedState s{project(raw, old, bounds), {}, {}};
  s.pg = s.proj.gaussian();
  s.cov = s.pg.covariance();
  return s;
}

}  // namespace

void GaeConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ArgumentError("gae: gamma must lie in (0, 1]");
  if (!(lam >= 0.0 && lam <= 1.0)) throw ArgumentError("gae: lam must lie in [0, 1]");
}

std::vector<EpisodeRecord> collect_rollouts(const EnvFactory& env_factory, const EpisodicPolicy& policy,
                                            const MpKernel& kernel, int n_episodes,
                                            std::span<const std::uint64_t> seeds, const PdController& controller,
                                            bool deterministic) {
  if (n_episodes < 0) throw ArgumentError("collect_rollouts: negative episode count");
  if (seeds.size() < static_cast<std::size_t>(n_episodes)) throw ArgumentError("collect_rollouts: too few seeds");
  std::vector<EpisodeRecord> out;
  out.reserve(static_cast<std::size_t>(n_episodes));
  for (std::size_t i = 0; i < static_cast<std::size_t>(n_episodes); ++i) {
    try {
      auto env = env_factory();
      EpisodeRecord ep;
      ep.rng_seed = seeds[i];
      ep.initial_state = env->reset(seeds[i]);
      ep.boundary_pos = env->pos();
      ep.boundary_vel = env->vel();
      const ParamGaussian pg = policy.predict(ep.initial_state);
      ep.sampled_params = deterministic ? pg.mean : sample(pg, derive_seed(seeds[i], "explore"));
      ep.trajectory = compute_trajectory(kernel, ep.sampled_params, ep.boundary_pos, ep.boundary_vel);
      ExecutionRecord rec = execute_trajectory(*env, controller, ep.trajectory);
      ep.states = std::move(rec.value_states);
      ep.rewards = std::move(rec.rewards);
      ep.executed = {std::move(rec.positions), std::move(rec.velocities), env->options().dt};
      ep.success = rec.success;
      if (!ep.rewards.allFinite()) throw NumericalError("non-finite reward");
      out.push_back(std::move(ep));
    } catch (const ContractError& e) {
      rethrow_with_episode(e, i);
    } catch (const NumericalError& e) {
      rethrow_with_episode(e, i);
    } catch (const ArgumentError& e) {
      rethrow_with_episode(e, i);
    }
  }
  return out;
}

std::vector<TimePair> partition_pairs(int horizon, int num_segments) {
  if (num_segments < 1 || num_segments > horizon) {
    throw ArgumentError("partition_pairs: need 1 <= K <= T, got K = " + std::to_string(num_segments) +
                        ", T = " + std::to_string(horizon));
  }
  const int step = horizon / num_segments;
  std::vector<TimePair> pairs;
  pairs.reserve(static_cast<std::size_t>(num_segments));
  for (int k = 0; k < num_segments; ++k) {
    pairs.emplace_back(k * step, k + 1 == num_segments ? horizon : (k + 1) * step);
  }
  return pairs;
}

SegmentBatch make_segments(const EpisodeRecord& ep, const MpKernel& kernel, int num_segments, double gamma) {
  const int horizon = ep.horizon();
  if (ep.states.cols() != horizon + 1) throw ArgumentError("make_segments: state/reward length mismatch");
  SegmentBatch b;
  b.initial_state = ep.initial_state;
  b.boundary_pos = ep.boundary_pos;
  b.boundary_vel = ep.boundary_vel;
  b.horizon = horizon;
  b.pairs = partition_pairs(horizon, num_segments);
  const int k_count = b.num_segments();
  const Eigen::Index dim = ep.states.rows();
  b.start_states.resize(dim, k_count);
  b.end_states.resize(dim, k_count);
  b.returns.resize(k_count);
  b.observed.resize(2 * ep.trajectory.num_dof(), k_count);
  b.maps.reserve(b.pairs.size());
  for (int k = 0; k < k_count; ++k) {
    const auto [t0, t1] = b.pairs[static_cast<std::size_t>(k)];
    b.maps.push_back(segment_map(kernel, ep.boundary_pos, ep.boundary_vel, b.pairs[static_cast<std::size_t>(k)]));
    b.start_states.col(k) = ep.states.col(t0);
    b.end_states.col(k) = ep.states.col(t1);
    double ret = 0.0;
    double discount = 1.0;
    for (int t = t0; t < t1; ++t) {
      ret += discount * ep.rewards[t];
      discount *= gamma;
    }
    b.returns[k] = ret;
    b.observed.col(k) = segment_values(ep.trajectory, b.pairs[static_cast<std::size_t>(k)]);
  }
  b.old_log_likelihood = Eigen::VectorXd::Zero(k_count);
  b.advantages = Eigen::VectorXd::Zero(k_count);
  return b;
}

Eigen::VectorXd gae_advantages(const Eigen::VectorXd& values, const Eigen::VectorXd& rewards, const GaeConfig& cfg) {
  if (values.size() != rewards.size() + 1) {
    throw ArgumentError("gae_advantages: expected " + std::to_string(rewards.size() + 1) + " values, got " +
                        std::to_string(values.size()));
  }
  const Eigen::Index n = rewards.size();
  Eigen::VectorXd adv(n);
  double running = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double delta = rewards[t] + cfg.gamma * values[t + 1] - values[t];
    running = delta + cfg.gamma * cfg.lam * running;
    adv[t] = running;
  }
  return adv;
}

Eigen::VectorXd evaluate_values(const Mlp& value_fn, const Eigen::MatrixXd& states) {
  return value_fn.forward(states).row(0).transpose();
}

double segment_advantage(const SegmentBatch& batch, int k, const Mlp& value_fn, double gamma) {
  if (k < 0 || k >= batch.num_segments()) throw ArgumentError("segment_advantage: segment index out of range");
  const auto [t0, t1] = batch.pairs[static_cast<std::size_t>(k)];
  const double v0 = value_fn.forward(Eigen::VectorXd(batch.start_states.col(k)))[0];
  const double v1 = t1 == batch.horizon ? 0.0 : value_fn.forward(Eigen::VectorXd(batch.end_states.col(k)))[0];
  return batch.returns[k] + std::pow(gamma, t1 - t0) * v1 - v0;
}

Eigen::VectorXd segment_advantages(const SegmentBatch& batch, const Mlp& value_fn, double gamma) {
  const Eigen::VectorXd v0 = evaluate_values(value_fn, batch.start_states);
  const Eigen::VectorXd v1 = evaluate_values(value_fn, batch.end_states);
  Eigen::VectorXd adv(batch.num_segments());
  for (int k = 0; k < batch.num_segments(); ++k) {
    const auto [t0, t1] = batch.pairs[static_cast<std::size_t>(k)];
    const double end = t1 == batch.horizon ? 0.0 : v1[k];
    adv[k] = batch.returns[k] + std::pow(gamma, t1 - t0) * end - v0[k];
  }
  return adv;
}

Eigen::VectorXd segment_advantages_from_gae(const SegmentBatch& batch, const Eigen::VectorXd& step_advantages,
                                            const GaeConfig& cfg) {
  if (step_advantages.size() != batch.horizon) throw ArgumentError("segment_advantages_from_gae: length mismatch");
  Eigen::VectorXd adv(batch.num_segments());
  for (int k = 0; k < batch.num_segments(); ++k) {
    const auto [t0, t1] = batch.pairs[static_cast<std::size_t>(k)];
    double sum = 0.0;
    double w = 1.0;
    for (int t = t0; t < t1; ++t) {
      sum += w * step_advantages[t];
      w *= cfg.gamma * cfg.lam;
    }
    adv[k] = sum;
  }
  return adv;
}

void normalize(Eigen::VectorXd& values) {
  if (values.size() == 0) return;
  const double mean = values.mean();
  values.array() -= mean;
  if (values.size() < 2) return;
  const double sd = std::sqrt(values.squaredNorm() / static_cast<double>(values.size()));
  if (sd > 1e-12) values /= sd;
}

std::vector<double> fit_value(Mlp& value_fn, AdamState& adam, const Eigen::MatrixXd& states,
                              const Eigen::VectorXd& targets, int epochs, const AdamConfig& opt) {
  if (states.cols() != targets.size()) throw ArgumentError("fit_value: states/targets length mismatch");
  if (value_fn.output_size() != 1) throw ArgumentError("fit_value: value network must have one output");
  std::vector<double> losses;
  if (targets.size() == 0) return losses;
  const double n = static_cast<double>(targets.size());
  for (int e = 0; e < epochs; ++e) {
    GradientTape tape;
    const Eigen::RowVectorXd err = value_fn.forward(states, tape).row(0) - targets.transpose();
    losses.push_back(err.squaredNorm() / n);
    const Eigen::VectorXd grad = value_fn.backward(tape, (2.0 / n) * err);
    adam_step(value_fn.mutable_parameters(), grad, adam, opt);
  }
  return losses;
}

Eigen::VectorXd segment_log_likelihoods(const ParamGaussian& pg, const SegmentBatch& batch, const NoiseModel& noise) {
  const Eigen::MatrixXd cov = pg.covariance();
  Eigen::VectorXd ll(batch.num_segments());
  for (int k = 0; k < batch.num_segments(); ++k) ll[k] = segment_term(pg.mean, cov, batch, k, noise).value;
  return ll;
}

SurrogateEval tce_surrogate(const EpisodicPolicy& policy, std::span<const SegmentBatch> batches,
                            std::span<const ParamGaussian> old, const TrustRegionBounds& bounds,
                            const NoiseModel& noise, bool with_grad) {
  if (old.size() != batches.size()) throw ArgumentError("tce_surrogate: one old Gaussian per batch required");
  const auto pred = policy.predict_batch(initial_states(batches));
  const int m = policy.num_params();
  const auto n_states = static_cast<Eigen::Index>(batches.size());
  double n_segments = 0.0;
  for (const auto& b : batches) n_segments += b.num_segments();

  SurrogateEval ev;
  Eigen::MatrixXd d_mean = Eigen::MatrixXd::Zero(m, n_states);
  std::vector<Eigen::MatrixXd> d_chol(batches.size());
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const SegmentBatch& batch = batches[b];
    const ParamGaussian& raw = pred.gaussians[b];
    const ProjectedState ps = project_state(raw, old[b], bounds);
    Eigen::VectorXd g_mu = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd g_cov = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < batch.num_segments(); ++k) {
      const GaussianLogPdfGrad t = segment_term(ps.pg.mean, ps.cov, batch, k, noise);
      const double ratio = std::exp(t.value - batch.old_log_likelihood[k]);
      ev.mean_ratio += ratio / n_segments;
      ev.objective += ratio * batch.advantages[k] / n_segments;
      if (with_grad) {
        const double c = ratio * batch.advantages[k] / n_segments;
        const Eigen::MatrixXd& h = batch.maps[static_cast<std::size_t>(k)].map;
        g_mu.noalias() += c * (h * t.d_mean);
        g_cov.noalias() += c * (h * t.d_cov * h.transpose());
      }
    }
    ev.mean_kl += gauss_kl(ps.pg, old[b]) / static_cast<double>(n_states);
    const Eigen::MatrixXd raw_cov = raw.covariance();
    const PenaltyGrad pen = trust_region_penalty_grad(raw.mean, raw_cov, ps.pg.mean, ps.cov, bounds.reg_weight);
    ev.penalty += pen.value / static_cast<double>(n_states);
    if (with_grad) {
      const auto bi = static_cast<Eigen::Index>(b);
      d_mean.col(bi) = -ps.proj.mean.backward(g_mu) + pen.d_mean / static_cast<double>(n_states);
      const Eigen::MatrixXd g_raw = -ps.proj.cov.backward(g_cov) + pen.d_cov / static_cast<double>(n_states);
      d_chol[b] = chol_grad(g_raw, raw.chol);
    }
  }
  ev.loss = ev.penalty - ev.objective;
  if (with_grad) ev.grad = policy.backward(pred, d_mean, d_chol);
  return ev;
}

std::vector<ParamGaussian> cache_old_policy(const EpisodicPolicy& policy, std::vector<SegmentBatch>& batches,
                                            const NoiseModel& noise) {
  auto pred = policy.predict_batch(initial_states(batches));
  for (std::size_t b = 0; b < batches.size(); ++b) {
    batches[b].old_log_likelihood = segment_log_likelihoods(pred.gaussians[b], batches[b], noise);
  }
  return std::move(pred.gaussians);
}

UpdateDiagnostics tce_update(EpisodicPolicy& policy, AdamState& adam, std::vector<SegmentBatch>& batches,
                             const TrustRegionBounds& bounds, const NoiseModel& noise, const PolicyOptimizer& opt) {
  bounds.validate();
  const std::vector<ParamGaussian> old = cache_old_policy(policy, batches, noise);
  UpdateDiagnostics diag;
  for (int e = 0; e < opt.epochs; ++e) {
    SurrogateEval ev = tce_surrogate(policy, batches, old, bounds, noise, true);
    check_finite(ev, "tce_update");
    diag.mean_ratio = ev.mean_ratio;
    diag.mean_kl = ev.mean_kl;
    diag.objective = ev.objective;
    diag.penalty = ev.penalty;
    apply_gradient(policy, adam, std::move(ev.grad), opt);
  }
  measure_violations(policy, initial_states(batches), old, bounds, diag);
  return diag;
}

EpisodeBatch make_episode_batch(std::span<const EpisodeRecord> episodes, const Eigen::VectorXd& advantages) {
  if (episodes.empty()) throw ArgumentError("make_episode_batch: no episodes");
  if (advantages.size() != static_cast<Eigen::Index>(episodes.size())) {
    throw ArgumentError("make_episode_batch: one advantage per episode required");
  }
  const auto n = static_cast<Eigen::Index>(episodes.size());
  EpisodeBatch b;
  b.states.resize(episodes.front().initial_state.size(), n);
  b.params.resize(episodes.front().sampled_params.size(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.states.col(i) = episodes[static_cast<std::size_t>(i)].initial_state;
    b.params.col(i) = episodes[static_cast<std::size_t>(i)].sampled_params;
  }
  b.advantages = advantages;
  b.old_log_likelihood = Eigen::VectorXd::Zero(n);
  return b;
}

SurrogateEval bbrl_surrogate(const EpisodicPolicy& policy, const EpisodeBatch& batch,
                             std::span<const ParamGaussian> old, const TrustRegionBounds& bounds, bool with_grad) {
  const Eigen::Index n = batch.states.cols();
  if (static_cast<Eigen::Index>(old.size()) != n) throw ArgumentError("bbrl_surrogate: one old Gaussian per episode required");
  const auto pred = policy.predict_batch(batch.states);
  const int m = policy.num_params();
  const double dn = static_cast<double>(n);
  SurrogateEval ev;
  Eigen::MatrixXd d_mean = Eigen::MatrixXd::Zero(m, n);
  std::vector<Eigen::MatrixXd> d_chol(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const ParamGaussian& raw = pred.gaussians[ui];
    const ProjectedState ps = project_state(raw, old[ui], bounds);
    const GaussianLogPdfGrad t = gaussian_log_pdf_grad(ps.pg.mean, ps.cov, batch.params.col(i), "parameter covariance");
    const double ratio = std::exp(t.value - batch.old_log_likelihood[i]);
    ev.mean_ratio += ratio / dn;
    ev.objective += ratio * batch.advantages[i] / dn;
    ev.mean_kl += gauss_kl(ps.pg, old[ui]) / dn;
    const PenaltyGrad pen = trust_region_penalty_grad(raw.mean, raw.covariance(), ps.pg.mean, ps.cov, bounds.reg_weight);
    ev.penalty += pen.value / dn;
    if (with_grad) {
      const double c = ratio * batch.advantages[i] / dn;
      d_mean.col(i) = -ps.proj.mean.backward(c * t.d_mean) + pen.d_mean / dn;
      const Eigen::MatrixXd g_raw = -ps.proj.cov.backward(c * t.d_cov) + pen.d_cov / dn;
      d_chol[ui] = chol_grad(g_raw, raw.chol);
    }
  }
  ev.loss = ev.penalty - ev.objective;
  if (with_grad) ev.grad = policy.backward(pred, d_mean, d_chol);
  return ev;
}

std::vector<ParamGaussian> cache_old_policy(const EpisodicPolicy& policy, EpisodeBatch& batch) {
  auto pred = policy.predict_batch(batch.states);
  for (Eigen::Index i = 0; i < batch.states.cols(); ++i) {
    const ParamGaussian& pg = pred.gaussians[static_cast<std::size_t>(i)];
    batch.old_log_likelihood[i] =
        gaussian_log_pdf_grad(pg.mean, pg.covariance(), batch.params.col(i), "parameter covariance").value;
  }
  return std::move(pred.gaussians);
}

UpdateDiagnostics bbrl_update(EpisodicPolicy& policy, AdamState& adam, EpisodeBatch& batch,
                              const TrustRegionBounds& bounds, const PolicyOptimizer& opt) {
  bounds.validate();
  const std::vector<ParamGaussian> old = cache_old_policy(policy, batch);
  UpdateDiagnostics diag;
  for (int e = 0; e < opt.epochs; ++e) {
    SurrogateEval ev = bbrl_surrogate(policy, batch, old, bounds, true);
    check_finite(ev, "bbrl_update");
    diag.mean_ratio = ev.mean_ratio;
    diag.mean_kl = ev.mean_kl;
    diag.objective = ev.objective;
    diag.penalty = ev.penalty;
    apply_gradient(policy, adam, std::move(ev.grad), opt);
  }
  measure_violations(policy, batch.states, old, bounds, diag);
  return diag;
}

std::vector<StepEpisode> collect_step_rollouts(const EnvFactory& env_factory, const StepPolicy& policy,
                                               int n_episodes, std::span<const std::uint64_t> seeds,
                                               bool deterministic) {
  if (n_episodes < 0) throw ArgumentError("collect_step_rollouts: negative episode count");
  if (seeds.size() < static_cast<std::size_t>(n_episodes)) throw ArgumentError("collect_step_rollouts: too few seeds");
  std::vector<StepEpisode> out;
  out.reserve(static_cast<std::size_t>(n_episodes));
  for (std::size_t i = 0; i < static_cast<std::size_t>(n_episodes); ++i) {
    auto env = env_factory();
    env->reset(seeds[i]);
    Rng rng(derive_seed(seeds[i], "explore"));
    const int horizon = env->options().horizon;
    StepEpisode ep;
    ep.states.resize(env->value_state_dim(), horizon + 1);
    ep.actions.resize(env->num_dof(), horizon);
    ep.rewards.resize(horizon);
    ep.executed.pos.resize(env->num_dof(), horizon + 1);
    ep.executed.vel.resize(env->num_dof(), horizon + 1);
    ep.executed.dt = env->options().dt;
    ep.states.col(0) = env->value_state();
    ep.executed.pos.col(0) = env->pos();
    ep.executed.vel.col(0) = env->vel();
    for (int t = 0; t < horizon; ++t) {
      const Eigen::VectorXd s = ep.states.col(t);
      const Eigen::VectorXd a = deterministic ? policy.mean(s) : policy.sample(s, rng);
      const StepResult r = env->step(a);
      if (!std::isfinite(r.reward)) throw NumericalError("episode " + std::to_string(i) + ": non-finite reward");
      ep.actions.col(t) = a;
      ep.rewards[t] = r.reward;
      ep.states.col(t + 1) = env->value_state();
      ep.executed.pos.col(t + 1) = env->pos();
      ep.executed.vel.col(t + 1) = env->vel();
    }
    ep.success = env->success();
    out.push_back(std::move(ep));
  }
  return out;
}

PpoEval ppo_surrogate(const StepPolicy& policy, const StepTransitions& data, double clip_eps, bool with_grad) {
  const Eigen::Index n = data.states.cols();
  if (n == 0 || data.advantages.size() != n || data.old_log_prob.size() != n) {
    throw ArgumentError("ppo_surrogate: inconsistent transition batch");
  }
  const Eigen::VectorXd logp = policy.log_prob_batch(data.states, data.actions, nullptr, nullptr);
  const double dn = static_cast<double>(n);
  PpoEval ev;
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ratio = std::exp(logp[i] - data.old_log_prob[i]);
    const double a = data.advantages[i];
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const double unclipped_term = ratio * a;
    const double clipped_term = clipped * a;
    ev.objective += std::min(unclipped_term, clipped_term) / dn;
    ev.mean_ratio += ratio / dn;
    ev.approx_kl += (data.old_log_prob[i] - logp[i]) / dn;
    if (std::abs(ratio - 1.0) > clip_eps) ev.clip_fraction += 1.0 / dn;
    if (unclipped_term <= clipped_term) weights[i] = -unclipped_term / dn;
  }
  if (with_grad) policy.log_prob_batch(data.states, data.actions, &weights, &ev.grad);
  return ev;
}

UpdateDiagnostics ppo_step_update(StepPolicy& policy, AdamState& adam, StepTransitions& data, double clip_eps,
                                  const PolicyOptimizer& opt) {
  if (!(clip_eps > 0.0)) throw ArgumentError("ppo_step_update: clip_eps must be positive");
  data.old_log_prob = policy.log_prob_batch(data.states, data.actions, nullptr, nullptr);
  UpdateDiagnostics diag;
  for (int e = 0; e < opt.epochs; ++e) {
    PpoEval ev = ppo_surrogate(policy, data, clip_eps, true);
    if (!std::isfinite(ev.objective) || !ev.grad.allFinite()) {
      throw NumericalError("ppo_step_update: non-finite surrogate (objective " + std::to_string(ev.objective) + ")");
    }
    diag.mean_ratio = ev.mean_ratio;
    diag.mean_kl = ev.approx_kl;
    diag.objective = ev.objective;
    clip_grad_norm(ev.grad, opt.max_grad_norm);
    Eigen::VectorXd params = policy.parameters();
    adam_step(params, ev.grad, adam, opt.adam);
    policy.set_parameters(params);
  }
  return diag;
}

}  // namespace tce
