#include "tce/trainer.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "tce/csv.hpp"
#include "tce/errors.hpp"

namespace tce {
namespace {

std::vector<int> net_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  if (name == "tce") return Algorithm::tce;
  if (name == "bbrl") return Algorithm::bbrl;
  if (name == "bbrl-cov") return Algorithm::bbrl_cov;
  if (name == "ppo-step") return Algorithm::ppo_step;
  throw ConfigError("unknown algorithm '" + name + "' (expected tce, bbrl, bbrl-cov or ppo-step)");
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::tce: return "tce";
    case Algorithm::bbrl: return "bbrl";
    case Algorithm::bbrl_cov: return "bbrl-cov";
    case Algorithm::ppo_step: return "ppo-step";
  }
  return "unknown";
}

bool is_episodic(Algorithm algorithm) { return algorithm != Algorithm::ppo_step; }

void TrainerConfig::validate() const {
  require(env_options.horizon >= 2, "env.horizon must be at least 2");
  require(env_options.dt > 0.0, "env.dt must be positive");
  require(env_options.max_accel > 0.0, "env.max_accel must be positive");
  require(env_options.success_radius > 0.0, "env.success_radius must be positive");
  require(kp > 0.0 && kd > 0.0 && kd * kd >= 4.0 * kp, "env.kp/env.kd must be positive with kd^2 >= 4 kp");
  require(mp.num_basis >= 1, "mp.num_basis must be positive");
  require(mp.alpha > 0.0 && mp.alpha_x > 0.0, "mp.alpha and mp.alpha_x must be positive");
  require(mp.basis_overlap > 0.0, "mp.basis_overlap must be positive");
  require(mp.integration_substeps >= 1, "mp.integration_substeps must be positive");
  require(std::isfinite(mp.forcing_gain) && mp.forcing_gain > 0.0, "mp.forcing_gain must be positive");
  require(iterations >= 0, "run.iterations must be non-negative");
  require(episodes_per_iteration >= 1, "run.episodes_per_iteration must be positive");
  require(eval_episodes >= 1, "run.eval_episodes must be positive");
  require(bounds.eps_mean > 0.0 && bounds.eps_cov > 0.0, "trust_region.eps_mean/eps_cov must be positive");
  require(bounds.reg_weight >= 0.0, "trust_region.reg_weight must be non-negative");
  require(gae.gamma > 0.0 && gae.gamma <= 1.0 && gae.lam >= 0.0 && gae.lam <= 1.0, "gae.gamma/gae.lam out of range");
  require(step_gae.gamma > 0.0 && step_gae.gamma <= 1.0 && step_gae.lam >= 0.0 && step_gae.lam <= 1.0,
          "ppo.gamma/ppo.lam out of range");
  require(noise.noise_std > 0.0, "learner.noise_std must be positive");
  require(segments >= 1 && segments <= env_options.horizon, "learner.k must lie in [1, env.horizon]");
  require(reward_scale > 0.0, "learner.reward_scale must be positive");
  require(initial_std > 0.0 && weight_scale > 0.0, "policy.initial_std and policy.weight_scale must be positive");
  for (int h : policy_hidden) require(h >= 1, "policy.hidden entries must be positive");
  for (int h : value_hidden) require(h >= 1, "policy.value_hidden entries must be positive");
  require(policy_opt.adam.lr > 0.0 && value_adam.lr > 0.0, "learning rates must be positive");
  require(policy_opt.epochs >= 0 && value_epochs >= 0, "epoch counts must be non-negative");
  require(policy_opt.max_grad_norm >= 0.0, "learner.max_grad_norm must be non-negative");
  require(clip_eps > 0.0, "ppo.clip_eps must be positive");
}

MpConfig TrainerConfig::mp_config() const {
  MpConfig c = mp;
  c.num_dof = 2;
  c.num_steps = env_options.horizon;
  c.duration = env_options.horizon * env_options.dt;
  return c;
}

std::vector<std::string> progress_header() {
  return {"iteration", "env_steps", "mean_return", "success_rate", "mean_ratio", "mean_kl", "objective", "value_loss"};
}

std::vector<std::string> progress_fields(const ProgressRow& r) {
  return {std::to_string(r.iteration), std::to_string(r.env_steps), format_double(r.mean_return),
          format_double(r.success_rate), format_double(r.mean_ratio), format_double(r.mean_kl),
          format_double(r.objective), format_double(r.value_loss)};
}

Trainer::Trainer(const TrainerConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
  config_.validate();
  kernel_ = build_kernel(config_.mp_config());
  const auto env = make_environment();
  env->reset(0);
  const int state_dim = env->state_dim();
  const int value_dim = env->value_state_dim();
  Rng policy_rng(derive_seed(seed, "policy"));
  if (is_episodic(config_.algorithm)) {
    EpisodicPolicyConfig pc;
    pc.state_dim = state_dim;
    pc.num_params = kernel_.num_params();
    pc.hidden = config_.policy_hidden;
    pc.activation = config_.activation;
    pc.initial_std = config_.initial_std;
    pc.weight_scale = config_.weight_scale;
    pc.full_cov = config_.algorithm != Algorithm::bbrl;
    pc.state_dependent_cov = config_.state_dependent_cov;
    episodic_ = EpisodicPolicy(pc, policy_rng);
  } else {
    StepPolicyConfig sc;
    sc.state_dim = value_dim;
    sc.action_dim = env->num_dof();
    sc.hidden = config_.policy_hidden;
    sc.activation = config_.activation;
    sc.initial_std = config_.initial_std;
    step_ = StepPolicy(sc, policy_rng);
  }
  Rng value_rng(derive_seed(seed, "value"));
  value_ = Mlp::orthogonal(net_sizes(value_dim, config_.value_hidden, 1), config_.activation, value_rng, 1.0, 1.0);
}

std::unique_ptr<Env> Trainer::make_environment() const { return make_env(config_.env, config_.env_options); }

PolicyOptimizer Trainer::policy_optimizer() const {
  PolicyOptimizer opt = config_.policy_opt;
  if (config_.lr_decay && config_.iterations > 0) {
    opt.adam.lr *= 1.0 - static_cast<double>(iteration_) / static_cast<double>(config_.iterations);
  }
  return opt;
}

std::vector<std::uint64_t> Trainer::rollout_seeds() const {
  const int n = config_.episodes_per_iteration;
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    seeds[static_cast<std::size_t>(i)] =
        derive_seed(seed_, "rollout", static_cast<std::uint64_t>(iteration_) * static_cast<std::uint64_t>(n) + i);
  }
  return seeds;
}

ProgressRow Trainer::iterate() {
  ProgressRow row = is_episodic(config_.algorithm) ? iterate_episodic() : iterate_step();
  ++iteration_;
  row.iteration = iteration_;
  row.env_steps = env_steps_;
  const auto eval = evaluate(config_.eval_episodes);
  double successes = 0.0;
  for (const auto& e : eval) successes += e.success ? 1.0 : 0.0;
  row.success_rate = successes / static_cast<double>(eval.size());
  return row;
}

ProgressRow Trainer::iterate_episodic() {
  const EnvFactory factory = [this] { return make_environment(); };
  const auto seeds = rollout_seeds();
  const auto episodes = collect_rollouts(factory, episodic_, kernel_, config_.episodes_per_iteration, seeds,
                                         PdController(config_.kp, config_.kd));
  env_steps_ += static_cast<long long>(episodes.size()) * config_.env_options.horizon;
  const double scale = config_.reward_scale;

  ProgressRow row;
  std::vector<double> returns;
  for (const auto& ep : episodes) returns.push_back(ep.total_return());
  row.mean_return = mean_of(returns);

  // Advantages come from the value function as it stood before this iteration's fit.
  if (config_.algorithm == Algorithm::tce) {
    std::vector<SegmentBatch> batches;
    const Eigen::Index horizon = config_.env_options.horizon;
    // The value function is only queried at segment boundaries, so it is fitted there.
    const auto k_count = static_cast<Eigen::Index>(partition_pairs(config_.env_options.horizon, config_.segments).size());
    Eigen::MatrixXd fit_states(value_.input_size(), k_count * static_cast<Eigen::Index>(episodes.size()));
    Eigen::VectorXd fit_targets(fit_states.cols());
    Eigen::Index col = 0;
    for (const auto& ep : episodes) {
      EpisodeRecord scaled = ep;
      scaled.rewards *= scale;
      SegmentBatch b = make_segments(scaled, kernel_, config_.segments, config_.gae.gamma);
      Eigen::VectorXd values = evaluate_values(value_, scaled.states);
      values[horizon] = 0.0;
      const Eigen::VectorXd step_adv = gae_advantages(values, scaled.rewards, config_.gae);
      b.advantages = config_.segment_advantage == SegmentAdvantageMode::direct
                         ? segment_advantages(b, value_, config_.gae.gamma)
                         : segment_advantages_from_gae(b, step_adv, config_.gae);
      for (int k = 0; k < b.num_segments(); ++k) {
        const int t = b.pairs[static_cast<std::size_t>(k)].first;
        fit_states.col(col) = scaled.states.col(t);
        fit_targets[col] = values[t] + step_adv[t];
        ++col;
      }
      batches.push_back(std::move(b));
    }
    if (config_.normalize_advantages) {
      Eigen::Index total = 0;
      for (const auto& b : batches) total += b.num_segments();
      Eigen::VectorXd all(total);
      Eigen::Index at = 0;
      for (const auto& b : batches) {
        all.segment(at, b.num_segments()) = b.advantages;
        at += b.num_segments();
      }
      normalize(all);
      at = 0;
      for (auto& b : batches) {
        b.advantages = all.segment(at, b.num_segments());
        at += b.num_segments();
      }
    }
    const auto losses = fit_value(value_, value_adam_, fit_states, fit_targets, config_.value_epochs, config_.value_adam);
    row.value_loss = losses.empty() ? 0.0 : losses.back();
    const UpdateDiagnostics d =
        tce_update(episodic_, policy_adam_, batches, config_.bounds, config_.noise, policy_optimizer());
    row.mean_ratio = d.mean_ratio;
    row.mean_kl = d.mean_kl;
    row.objective = d.objective;
  } else {
    Eigen::MatrixXd s0(value_.input_size(), static_cast<Eigen::Index>(episodes.size()));
    Eigen::VectorXd targets(s0.cols());
    for (std::size_t i = 0; i < episodes.size(); ++i) {
      s0.col(static_cast<Eigen::Index>(i)) = episodes[i].states.col(0);
      targets[static_cast<Eigen::Index>(i)] = scale * episodes[i].total_return();
    }
    Eigen::VectorXd adv = targets - evaluate_values(value_, s0);
    if (config_.normalize_advantages) normalize(adv);
    const auto losses = fit_value(value_, value_adam_, s0, targets, config_.value_epochs, config_.value_adam);
    row.value_loss = losses.empty() ? 0.0 : losses.back();
    EpisodeBatch batch = make_episode_batch(episodes, adv);
    const UpdateDiagnostics d = bbrl_update(episodic_, policy_adam_, batch, config_.bounds, policy_optimizer());
    row.mean_ratio = d.mean_ratio;
    row.mean_kl = d.mean_kl;
    row.objective = d.objective;
  }
  return row;
}

ProgressRow Trainer::iterate_step() {
  const EnvFactory factory = [this] { return make_environment(); };
  const auto seeds = rollout_seeds();
  const auto episodes = collect_step_rollouts(factory, step_, config_.episodes_per_iteration, seeds);
  const Eigen::Index horizon = config_.env_options.horizon;
  env_steps_ += static_cast<long long>(episodes.size()) * horizon;

  ProgressRow row;
  std::vector<double> returns;
  const auto n = static_cast<Eigen::Index>(episodes.size()) * horizon;
  StepTransitions data;
  data.states.resize(value_.input_size(), n);
  data.actions.resize(step_.config().action_dim, n);
  data.advantages.resize(n);
  Eigen::VectorXd targets(n);
  Eigen::Index col = 0;
  for (const auto& ep : episodes) {
    returns.push_back(ep.total_return());
    const Eigen::VectorXd rewards = config_.reward_scale * ep.rewards;
    Eigen::VectorXd values = evaluate_values(value_, ep.states);
    values[horizon] = 0.0;
    const Eigen::VectorXd adv = gae_advantages(values, rewards, config_.step_gae);
    data.states.middleCols(col, horizon) = ep.states.leftCols(horizon);
    data.actions.middleCols(col, horizon) = ep.actions;
    data.advantages.segment(col, horizon) = adv;
    targets.segment(col, horizon) = values.head(horizon) + adv;
    col += horizon;
  }
  row.mean_return = mean_of(returns);
  if (config_.normalize_advantages) normalize(data.advantages);
  const auto losses = fit_value(value_, value_adam_, data.states, targets, config_.value_epochs, config_.value_adam);
  row.value_loss = losses.empty() ? 0.0 : losses.back();
  const UpdateDiagnostics d = ppo_step_update(step_, policy_adam_, data, config_.clip_eps, policy_optimizer());
  row.mean_ratio = d.mean_ratio;
  row.mean_kl = d.mean_kl;
  row.objective = d.objective;
  return row;
}

std::vector<EvalEpisode> Trainer::evaluate(int n_episodes) const {
  if (n_episodes < 1) throw ArgumentError("evaluate: need at least one episode");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_episodes));
  for (int i = 0; i < n_episodes; ++i) seeds[static_cast<std::size_t>(i)] = derive_seed(seed_, "eval", static_cast<std::uint64_t>(i));
  const EnvFactory factory = [this] { return make_environment(); };
  std::vector<EvalEpisode> out;
  if (is_episodic(config_.algorithm)) {
    const auto eps = collect_rollouts(factory, episodic_, kernel_, n_episodes, seeds,
                                      PdController(config_.kp, config_.kd), true);
    for (const auto& ep : eps) {
      out.push_back({ep.total_return(), ep.success, ep.trajectory, ep.executed, jerk_metrics(ep.trajectory)});
    }
  } else {
    const auto eps = collect_step_rollouts(factory, step_, n_episodes, seeds, true);
    for (const auto& ep : eps) {
      out.push_back({ep.total_return(), ep.success, ep.executed, ep.executed, jerk_metrics(ep.executed)});
    }
  }
  return out;
}

void Trainer::write_snapshot(std::ostream& out) const {
  out << "tce_snapshot " << to_string(config_.algorithm) << ' ' << iteration_ << ' ' << env_steps_ << '\n';
  if (is_episodic(config_.algorithm)) {
    episodic_.write(out);
  } else {
    step_.write(out);
  }
  write_mlp(out, value_);
}

void Trainer::read_snapshot(std::istream& in) {
  std::string tag, algo;
  if (!(in >> tag >> algo >> iteration_ >> env_steps_) || tag != "tce_snapshot") {
    throw ArgumentError("policy snapshot: missing 'tce_snapshot' header");
  }
  if (parse_algorithm(algo) != config_.algorithm) {
    throw ArgumentError("policy snapshot: algorithm '" + algo + "' does not match the configuration");
  }
  if (is_episodic(config_.algorithm)) {
    EpisodicPolicy p = EpisodicPolicy::read(in);
    if (p.config().num_params != episodic_.config().num_params || p.config().state_dim != episodic_.config().state_dim) {
      throw ArgumentError("policy snapshot: policy shape does not match the configuration");
    }
    episodic_ = std::move(p);
  } else {
    step_ = StepPolicy::read(in);
  }
  value_ = read_mlp(in);
}

}  // namespace tce
