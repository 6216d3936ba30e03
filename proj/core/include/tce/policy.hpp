#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "tce/mlp.hpp"
#include "tce/traj_dist.hpp"

namespace tce {

/// Inverse of softplus: softplus(inverse_softplus(y)) == y for y > 0.
double inverse_softplus(double y);

struct EpisodicPolicyConfig {
  int state_dim = 0;
  int num_params = 0;  // m = D (N + 1)
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::tanh;
  double initial_std = 1.0;
  double weight_scale = 1.0;
  bool full_cov = true;              // false: off-diagonal factor entries pinned to zero
  bool state_dependent_cov = true;   // false: factor entries are free parameters
};

/// Maps an initial state to N(mu_w, L L^T) over movement-primitive parameters.
///
/// The network's last layer holds two heads: rows [0, m) produce the mean
/// (multiplied by weight_scale) and rows [m, m + m(m+1)/2) produce the
/// unconstrained lower-triangular entries, packed row by row.  Diagonal
/// entries pass through softplus(raw + c) with softplus(c) = initial_std.
class EpisodicPolicy {
 public:
  EpisodicPolicy() = default;
  EpisodicPolicy(const EpisodicPolicyConfig& config, Rng& rng);
  /// All parameters zero: predicts mean 0 and L = initial_std * I.
  static EpisodicPolicy zeros(const EpisodicPolicyConfig& config);

  const EpisodicPolicyConfig& config() const { return config_; }
  int num_params() const { return config_.num_params; }
  int num_tril() const { return config_.num_params * (config_.num_params + 1) / 2; }

  ParamGaussian predict(const Eigen::VectorXd& state) const;

  /// Batched prediction (states are columns) retaining what backward needs.
  struct Batch {
    GradientTape tape;
    Eigen::MatrixXd raw_tril;  // num_tril x B, pre-map factor entries
    std::vector<ParamGaussian> gaussians;
  };
  Batch predict_batch(const Eigen::MatrixXd& states) const;

  /// Gradient of a scalar loss w.r.t. all policy parameters given its
  /// gradients w.r.t. every predicted mean (columns) and factor.
  Eigen::VectorXd backward(const Batch& batch, const Eigen::MatrixXd& d_mean,
                           const std::vector<Eigen::MatrixXd>& d_chol) const;

  /// Flat parameters: network parameters followed by free factor entries (if any).
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& params);
  Eigen::Index num_trainable() const;

  const Mlp& network() const { return net_; }
  Mlp& network() { return net_; }

  void write(std::ostream& out) const;
  static EpisodicPolicy read(std::istream& in);

 private:
  Eigen::MatrixXd build_chol(const Eigen::Ref<const Eigen::VectorXd>& raw) const;
  int head_rows() const;

  EpisodicPolicyConfig config_;
  Mlp net_;
  Eigen::VectorXd free_tril_;  // used when !state_dependent_cov
  double diag_offset_ = 0.0;
};

struct StepPolicyConfig {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::tanh;
  double initial_std = 1.0;
};

/// Factorized Gaussian over per-step actions with a state-independent log-std.
class StepPolicy {
 public:
  StepPolicy() = default;
  StepPolicy(const StepPolicyConfig& config, Rng& rng);

  const StepPolicyConfig& config() const { return config_; }
  Eigen::VectorXd mean(const Eigen::VectorXd& state) const;
  const Eigen::VectorXd& log_std() const { return log_std_; }

  Eigen::VectorXd sample(const Eigen::VectorXd& state, Rng& rng) const;

  double step_log_prob(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const;

  /// Log-probabilities of a batch (columns), with the gradient of
  /// sum_i weights_i * logp_i w.r.t. the flat parameters when grad != nullptr.
  Eigen::VectorXd log_prob_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                 const Eigen::VectorXd* weights, Eigen::VectorXd* grad) const;

  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& params);

  const Mlp& network() const { return net_; }

  void write(std::ostream& out) const;
  static StepPolicy read(std::istream& in);

 private:
  StepPolicyConfig config_;
  Mlp net_;
  Eigen::VectorXd log_std_;
};

/// Diagonal-Gaussian log density, the reference form used by StepPolicy.
double diag_gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                              const Eigen::VectorXd& x);

}  // namespace tce
