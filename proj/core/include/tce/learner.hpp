#pragma once

// Rollouts, segment construction, advantage estimation and the policy updates
// for TCE, the episode-level BBRL variants and a step-based PPO-clip baseline.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tce/envs.hpp"
#include "tce/mlp.hpp"
#include "tce/policy.hpp"
#include "tce/prodmp.hpp"
#include "tce/traj_dist.hpp"
#include "tce/trust_region.hpp"

namespace tce {

struct GaeConfig {
  double gamma = 1.0;
  double lam = 0.95;

  void validate() const;
};

using EnvFactory = std::function<std::unique_ptr<Env>()>;

struct EpisodeRecord {
  Eigen::VectorXd initial_state;
  Eigen::VectorXd boundary_pos;
  Eigen::VectorXd boundary_vel;
  Eigen::VectorXd sampled_params;
  Eigen::MatrixXd states;    // value states, (T+1) columns
  Eigen::VectorXd rewards;   // T entries
  Trajectory trajectory;     // desired MP trajectory generated from sampled_params
  Trajectory executed;       // robot positions/velocities under the controller
  bool success = false;
  std::uint64_t rng_seed = 0;

  double total_return() const { return rewards.sum(); }
  int horizon() const { return static_cast<int>(rewards.size()); }
};

/// One episode per seed: the environment is reset with seeds[i] and the
/// parameter sample drawn from derive_seed(seeds[i], "explore").  With
/// deterministic set, the policy mean is executed instead of a sample.
std::vector<EpisodeRecord> collect_rollouts(const EnvFactory& env_factory, const EpisodicPolicy& policy,
                                            const MpKernel& kernel, int n_episodes,
                                            std::span<const std::uint64_t> seeds, const PdController& controller = {},
                                            bool deterministic = false);

/// Segments of one episode in the order of the contiguous time partition.
struct SegmentBatch {
  Eigen::VectorXd initial_state;
  Eigen::VectorXd boundary_pos;
  Eigen::VectorXd boundary_vel;
  std::vector<TimePair> pairs;
  std::vector<SegmentMap> maps;
  Eigen::MatrixXd start_states;  // value state at t_k, one column per segment
  Eigen::MatrixXd end_states;    // value state at t_k'
  Eigen::VectorXd returns;       // sum_{t_k <= t < t_k'} gamma^(t - t_k) r_t
  Eigen::MatrixXd observed;      // 2D positions at each pair (SegmentDistribution ordering)
  Eigen::VectorXd old_log_likelihood;
  Eigen::VectorXd advantages;
  int horizon = 0;

  int num_segments() const { return static_cast<int>(pairs.size()); }
};

/// Contiguous pairs (t_k, t_{k+1}) with t_k = k * floor(T / K); the last pair
/// ends at T and absorbs the remainder.  Throws ArgumentError for K < 1 or K > T.
std::vector<TimePair> partition_pairs(int horizon, int num_segments);

SegmentBatch make_segments(const EpisodeRecord& ep, const MpKernel& kernel, int num_segments, double gamma);

/// Backward recursion A_t = delta_t + gamma lam A_{t+1}.  values has T+1
/// entries; the last one is the bootstrap value (0 for finite-horizon episodes).
Eigen::VectorXd gae_advantages(const Eigen::VectorXd& values, const Eigen::VectorXd& rewards, const GaeConfig& cfg);

/// Value network outputs for states given as columns.
Eigen::VectorXd evaluate_values(const Mlp& value_fn, const Eigen::MatrixXd& states);

/// A_k = R_k + gamma^(t_k' - t_k) V(s_t_k') - V(s_t_k), with V = 0 at the episode end.
double segment_advantage(const SegmentBatch& batch, int k, const Mlp& value_fn, double gamma);
Eigen::VectorXd segment_advantages(const SegmentBatch& batch, const Mlp& value_fn, double gamma);

/// Segment advantages as the (gamma lam)-weighted sum of per-step GAE
/// advantages inside each segment.
Eigen::VectorXd segment_advantages_from_gae(const SegmentBatch& batch, const Eigen::VectorXd& step_advantages,
                                            const GaeConfig& cfg);

/// Standardizes to zero mean and unit standard deviation (only centred when the spread vanishes).
void normalize(Eigen::VectorXd& values);

/// Full-batch Adam regression of value_fn onto targets; returns the loss before each epoch.
std::vector<double> fit_value(Mlp& value_fn, AdamState& adam, const Eigen::MatrixXd& states,
                              const Eigen::VectorXd& targets, int epochs, const AdamConfig& opt);

/// Log likelihoods of a batch's observed segment positions under pg.
Eigen::VectorXd segment_log_likelihoods(const ParamGaussian& pg, const SegmentBatch& batch, const NoiseModel& noise);

struct SurrogateEval {
  double objective = 0.0;  // mean over segments of ratio * advantage
  double penalty = 0.0;
  double loss = 0.0;       // penalty - objective
  double mean_ratio = 0.0;
  double mean_kl = 0.0;    // KL(projected || old), averaged over states
  Eigen::VectorXd grad;    // d loss / d policy parameters (empty unless requested)
};

/// Importance-weighted segment objective under the projected policy.  Requires
/// old_log_likelihood and advantages to be filled; old holds the iteration-start
/// Gaussian of each batch.
SurrogateEval tce_surrogate(const EpisodicPolicy& policy, std::span<const SegmentBatch> batches,
                            std::span<const ParamGaussian> old, const TrustRegionBounds& bounds,
                            const NoiseModel& noise, bool with_grad);

struct UpdateDiagnostics {
  double mean_ratio = 1.0;
  double mean_kl = 0.0;
  double objective = 0.0;
  double penalty = 0.0;
  // Largest per-state dissimilarity of the raw policy after the update, relative to the bound.
  double max_mean_violation = 0.0;
  double max_cov_violation = 0.0;
};

struct PolicyOptimizer {
  AdamConfig adam;
  double max_grad_norm = 0.0;
  int epochs = 10;
};

/// Predicts the iteration-start Gaussians and caches old log likelihoods in the batches.
std::vector<ParamGaussian> cache_old_policy(const EpisodicPolicy& policy, std::vector<SegmentBatch>& batches,
                                            const NoiseModel& noise);

/// Caches old likelihoods, then runs full-batch epochs on the surrogate.
/// Throws NumericalError when the loss or gradient becomes non-finite.
UpdateDiagnostics tce_update(EpisodicPolicy& policy, AdamState& adam, std::vector<SegmentBatch>& batches,
                             const TrustRegionBounds& bounds, const NoiseModel& noise, const PolicyOptimizer& opt);

/// One data point per episode: the sampled parameter vector, its initial state and advantage.
struct EpisodeBatch {
  Eigen::MatrixXd states;   // initial states, one column per episode
  Eigen::MatrixXd params;   // sampled parameter vectors
  Eigen::VectorXd advantages;
  Eigen::VectorXd old_log_likelihood;
};

EpisodeBatch make_episode_batch(std::span<const EpisodeRecord> episodes, const Eigen::VectorXd& advantages);

/// Parameter-space ratio objective exp(log p(w*) - log p_old(w*)) * A.
SurrogateEval bbrl_surrogate(const EpisodicPolicy& policy, const EpisodeBatch& batch,
                             std::span<const ParamGaussian> old, const TrustRegionBounds& bounds, bool with_grad);

std::vector<ParamGaussian> cache_old_policy(const EpisodicPolicy& policy, EpisodeBatch& batch);

UpdateDiagnostics bbrl_update(EpisodicPolicy& policy, AdamState& adam, EpisodeBatch& batch,
                              const TrustRegionBounds& bounds, const PolicyOptimizer& opt);

struct StepEpisode {
  Eigen::MatrixXd states;   // value states, (T+1) columns; the policy sees columns 0..T-1
  Eigen::MatrixXd actions;  // sampled (unclipped) actions, T columns
  Eigen::VectorXd rewards;
  Trajectory executed;
  bool success = false;

  double total_return() const { return rewards.sum(); }
};

std::vector<StepEpisode> collect_step_rollouts(const EnvFactory& env_factory, const StepPolicy& policy,
                                               int n_episodes, std::span<const std::uint64_t> seeds,
                                               bool deterministic = false);

struct StepTransitions {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::VectorXd advantages;
  Eigen::VectorXd old_log_prob;
};

struct PpoEval {
  double objective = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  Eigen::VectorXd grad;  // d(-objective) / d parameters
};

PpoEval ppo_surrogate(const StepPolicy& policy, const StepTransitions& data, double clip_eps, bool with_grad);

UpdateDiagnostics ppo_step_update(StepPolicy& policy, AdamState& adam, StepTransitions& data, double clip_eps,
                                  const PolicyOptimizer& opt);

}  // namespace tce
