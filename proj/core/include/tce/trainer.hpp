#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tce/envs.hpp"
#include "tce/learner.hpp"
#include "tce/metrics.hpp"
#include "tce/mlp.hpp"
#include "tce/policy.hpp"
#include "tce/prodmp.hpp"
#include "tce/trust_region.hpp"

namespace tce {

enum class Algorithm { tce, bbrl, bbrl_cov, ppo_step };

Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm algorithm);
bool is_episodic(Algorithm algorithm);

enum class SegmentAdvantageMode { direct, gae };

struct TrainerConfig {
  Algorithm algorithm = Algorithm::tce;
  std::string env = "reacher-dense";
  EnvOptions env_options;
  double kp = 100.0;
  double kd = 20.0;
  MpConfig mp;  // num_dof, num_steps and duration follow the environment

  int iterations = 100;
  int episodes_per_iteration = 20;
  int eval_episodes = 10;

  TrustRegionBounds bounds;
  GaeConfig gae{1.0, 0.95};
  GaeConfig step_gae{0.99, 0.95};
  NoiseModel noise;
  int segments = 25;
  SegmentAdvantageMode segment_advantage = SegmentAdvantageMode::direct;
  bool normalize_advantages = true;
  double reward_scale = 1.0;  // applied to rewards before value fitting and advantages

  std::vector<int> policy_hidden{32, 32};
  std::vector<int> value_hidden{32, 32};
  Activation activation = Activation::tanh;
  double initial_std = 1.0;
  double weight_scale = 1.0;
  bool state_dependent_cov = true;

  PolicyOptimizer policy_opt{{3e-4, 0.9, 0.999, 1e-8}, 0.0, 10};
  bool lr_decay = false;  // policy learning rate decays linearly to zero over the run
  AdamConfig value_adam{1e-3, 0.9, 0.999, 1e-8};
  int value_epochs = 50;
  double clip_eps = 0.2;

  /// Throws ConfigError naming the first out-of-range field.
  void validate() const;
  /// MP configuration with the grid matched to the environment.
  MpConfig mp_config() const;
};

struct ProgressRow {
  int iteration = 0;
  long long env_steps = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  double mean_ratio = 0.0;
  double mean_kl = 0.0;
  double objective = 0.0;
  double value_loss = 0.0;
};

std::vector<std::string> progress_header();
std::vector<std::string> progress_fields(const ProgressRow& row);

struct EvalEpisode {
  double total_return = 0.0;
  bool success = false;
  Trajectory trajectory;  // mean MP trajectory (episodic) or executed trajectory (step-based)
  Trajectory executed;
  SmoothnessReport smoothness;
};

class Trainer {
 public:
  Trainer(const TrainerConfig& config, std::uint64_t seed);

  const TrainerConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  int iteration() const { return iteration_; }
  long long env_steps() const { return env_steps_; }

  /// Collects one batch, updates value function and policy, evaluates the mean policy.
  ProgressRow iterate();

  /// Deterministic episodes with the policy mean on the evaluation task stream.
  std::vector<EvalEpisode> evaluate(int n_episodes) const;

  const MpKernel& kernel() const { return kernel_; }
  const EpisodicPolicy& episodic_policy() const { return episodic_; }
  const StepPolicy& step_policy() const { return step_; }
  const Mlp& value_function() const { return value_; }
  std::unique_ptr<Env> make_environment() const;

  /// Policy snapshot: algorithm tag, policy and value network.
  void write_snapshot(std::ostream& out) const;
  void read_snapshot(std::istream& in);

 private:
  ProgressRow iterate_episodic();
  ProgressRow iterate_step();
  std::vector<std::uint64_t> rollout_seeds() const;
  PolicyOptimizer policy_optimizer() const;

  TrainerConfig config_;
  std::uint64_t seed_;
  MpKernel kernel_;
  EpisodicPolicy episodic_;
  StepPolicy step_;
  Mlp value_;
  AdamState policy_adam_;
  AdamState value_adam_;
  int iteration_ = 0;
  long long env_steps_ = 0;
};

}  // namespace tce
