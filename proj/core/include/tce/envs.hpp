#pragma once

// Deterministic point-mass tasks on a double integrator, and the PD tracking
// controller that turns desired positions/velocities into accelerations.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tce/prodmp.hpp"
#include "tce/random.hpp"

namespace tce {

struct EnvOptions {
  double dt = 0.02;
  int horizon = 100;
  double max_accel = 10.0;
  bool random_initial_position = false;
  double success_radius = 0.05;
};

struct StepResult {
  Eigen::VectorXd state;
  double reward = 0.0;
  bool done = false;
};

class Env {
 public:
  explicit Env(EnvOptions options) : options_(options) {}
  virtual ~Env() = default;

  virtual std::string name() const = 0;
  /// Initial full observation (pos, vel, task parameters).  Seeds the task sampler.
  virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
  /// Exact double-integrator update; the action is clipped to [-max_accel, max_accel].
  StepResult step(const Eigen::VectorXd& action);

  /// Observation given to the episodic policy: the full state at t = 0.
  const Eigen::VectorXd& initial_observation() const { return initial_obs_; }
  /// Current full state.
  virtual Eigen::VectorXd state() const = 0;
  /// State for value functions: the full state plus normalized time t / T.
  Eigen::VectorXd value_state() const;
  virtual bool success() const = 0;

  int state_dim() const { return static_cast<int>(state().size()); }
  int value_state_dim() const { return state_dim() + 1; }
  int num_dof() const { return 2; }

  const Eigen::Vector2d& pos() const { return pos_; }
  const Eigen::Vector2d& vel() const { return vel_; }
  int time_step() const { return t_; }
  bool done() const { return t_ >= options_.horizon; }
  const EnvOptions& options() const { return options_; }

  Eigen::Vector2d clip_action(const Eigen::VectorXd& action) const;

 protected:
  void reset_dynamics(Rng& rng);
  virtual double reward(const Eigen::Vector2d& action) = 0;

  EnvOptions options_;
  Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel_ = Eigen::Vector2d::Zero();
  int t_ = 0;
  Eigen::VectorXd initial_obs_;
};

/// Dense reaching: r_t = -|pos - goal|^2 - 1e-3 |a|^2; success when the final
/// position is within success_radius of the goal.
class PointReacherEnv : public Env {
 public:
  explicit PointReacherEnv(EnvOptions options = {}) : Env(options) {}
  std::string name() const override { return "reacher-dense"; }
  Eigen::VectorXd reset(std::uint64_t seed) override;
  Eigen::VectorXd state() const override;
  bool success() const override;
  const Eigen::Vector2d& goal() const { return goal_; }
  void set_goal(const Eigen::Vector2d& goal) { goal_ = goal; }

 protected:
  double reward(const Eigen::Vector2d& action) override;

 private:
  Eigen::Vector2d goal_ = Eigen::Vector2d::Zero();
};

/// Sparse via-point task: reward only at t = T/2 (-|pos - via|^2) and at t = T
/// (-|pos - goal|^2 - 0.1 |vel|^2).  Success requires both distances below success_radius.
class ViaPointEnv : public Env {
 public:
  explicit ViaPointEnv(EnvOptions options = {}) : Env(options) {}
  std::string name() const override { return "viapoint-sparse"; }
  Eigen::VectorXd reset(std::uint64_t seed) override;
  Eigen::VectorXd state() const override;
  bool success() const override;
  const Eigen::Vector2d& goal() const { return goal_; }
  const Eigen::Vector2d& via() const { return via_; }

 protected:
  double reward(const Eigen::Vector2d& action) override;

 private:
  Eigen::Vector2d goal_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d via_ = Eigen::Vector2d::Zero();
  double via_distance_ = 0.0;
};

/// Registry: "reacher-dense", "viapoint-sparse".  Throws ConfigError for unknown names.
std::unique_ptr<Env> make_env(const std::string& name, const EnvOptions& options = {});
std::vector<std::string> env_names();

struct PdController {
  double kp = 100.0;
  double kd = 20.0;

  /// Throws ArgumentError unless kd^2 >= 4 kp (critically damped or overdamped double integrator).
  PdController(double kp_ = 100.0, double kd_ = 20.0);

  Eigen::VectorXd track(const Eigen::VectorXd& desired_pos, const Eigen::VectorXd& desired_vel,
                        const Eigen::VectorXd& pos, const Eigen::VectorXd& vel, double max_accel) const;
};

/// Step-by-step record of one executed episode.
struct ExecutionRecord {
  Eigen::MatrixXd value_states;  // value_state_dim x (T+1)
  Eigen::VectorXd rewards;       // T
  Eigen::MatrixXd positions;     // 2 x (T+1)
  Eigen::MatrixXd velocities;    // 2 x (T+1)
  Eigen::MatrixXd actions;       // 2 x T, after clipping
  bool success = false;

  double total_return() const { return rewards.sum(); }
};

/// Runs the controller along traj from the environment's current (freshly reset) state.
/// At step t the controller targets the desired state at t + 1.
/// Throws ContractError if traj does not start at the robot's position/velocity (1e-6).
ExecutionRecord execute_trajectory(Env& env, const PdController& controller, const Trajectory& traj);

}  // namespace tce
