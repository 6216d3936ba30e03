#include "tce/envs.hpp"

#include <cmath>
#include <string>

#include "tce/errors.hpp"

namespace tce {

Eigen::Vector2d Env::clip_action(const Eigen::VectorXd& action) const {
  if (action.size() != 2) throw ArgumentError("Env::step: action must have 2 entries");
  const double a = options_.max_accel;
  return action.cwiseMax(-a).cwiseMin(a);
}

StepResult Env::step(const Eigen::VectorXd& action) {
  if (done()) throw ContractError(name() + ": step called on a finished episode");
  const Eigen::Vector2d a = clip_action(action);
  const double dt = options_.dt;
  pos_ += vel_ * dt + 0.5 * a * dt * dt;
  vel_ += a * dt;
  ++t_;
  StepResult r;
  r.reward = reward(a);
  r.state = state();
  r.done = done();
  return r;
}

Eigen::VectorXd Env::value_state() const {
  const Eigen::VectorXd s = state();
  Eigen::VectorXd v(s.size() + 1);
  v << s, static_cast<double>(t_) / options_.horizon;
  return v;
}

void Env::reset_dynamics(Rng& rng) {
  t_ = 0;
  vel_.setZero();
  if (options_.random_initial_position) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    pos_ = Eigen::Vector2d(u(rng), u(rng));
  } else {
    pos_.setZero();
  }
}

Eigen::VectorXd PointReacherEnv::reset(std::uint64_t seed) {
  Rng rng(seed);
  reset_dynamics(rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  goal_ = Eigen::Vector2d(u(rng), u(rng));
  initial_obs_ = state();
  return initial_obs_;
}

Eigen::VectorXd PointReacherEnv::state() const {
  Eigen::VectorXd s(6);
  s << pos_, vel_, goal_;
  return s;
}

double PointReacherEnv::reward(const Eigen::Vector2d& action) {
  return -(pos_ - goal_).squaredNorm() - 1e-3 * action.squaredNorm();
}

bool PointReacherEnv::success() const { return done() && (pos_ - goal_).norm() < options_.success_radius; }

Eigen::VectorXd ViaPointEnv::reset(std::uint64_t seed) {
  Rng rng(seed);
  reset_dynamics(rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  goal_ = Eigen::Vector2d(u(rng), u(rng));
  via_ = Eigen::Vector2d(u(rng), u(rng));
  via_distance_ = std::numeric_limits<double>::infinity();
  initial_obs_ = state();
  return initial_obs_;
}

Eigen::VectorXd ViaPointEnv::state() const {
  Eigen::VectorXd s(8);
  s << pos_, vel_, goal_, via_;
  return s;
}

double ViaPointEnv::reward(const Eigen::Vector2d&) {
  if (t_ == options_.horizon / 2) {
    via_distance_ = (pos_ - via_).norm();
    return -(pos_ - via_).squaredNorm();
  }
  if (t_ == options_.horizon) return -(pos_ - goal_).squaredNorm() - 0.1 * vel_.squaredNorm();
  return 0.0;
}

bool ViaPointEnv::success() const {
  return done() && via_distance_ < options_.success_radius && (pos_ - goal_).norm() < options_.success_radius;
}

std::unique_ptr<Env> make_env(const std::string& name, const EnvOptions& options) {
  if (options.horizon < 2 || !(options.dt > 0.0) || !(options.max_accel > 0.0)) {
    throw ConfigError("environment options out of range");
  }
  if (name == "reacher-dense") return std::make_unique<PointReacherEnv>(options);
  if (name == "viapoint-sparse") return std::make_unique<ViaPointEnv>(options);
  throw ConfigError("unknown environment '" + name + "'");
}

std::vector<std::string> env_names() { return {"reacher-dense", "viapoint-sparse"}; }

PdController::PdController(double kp_, double kd_) : kp(kp_), kd(kd_) {
  if (!(kp > 0.0) || !(kd > 0.0)) throw ArgumentError("PdController: gains must be positive");
  if (kd * kd < 4.0 * kp) throw ArgumentError("PdController: kd^2 < 4 kp gives an underdamped loop");
}

Eigen::VectorXd PdController::track(const Eigen::VectorXd& desired_pos, const Eigen::VectorXd& desired_vel,
                                    const Eigen::VectorXd& pos, const Eigen::VectorXd& vel, double max_accel) const {
  Eigen::VectorXd a = kp * (desired_pos - pos) + kd * (desired_vel - vel);
  return a.cwiseMax(-max_accel).cwiseMin(max_accel);
}

ExecutionRecord execute_trajectory(Env& env, const PdController& controller, const Trajectory& traj) {
  const int horizon = env.options().horizon;
  if (traj.num_points() != horizon + 1 || traj.num_dof() != env.num_dof()) {
    throw ContractError("execute_trajectory: trajectory shape does not match the environment horizon");
  }
  const double mismatch = std::max((traj.pos.col(0) - env.pos()).cwiseAbs().maxCoeff(),
                                   (traj.vel.col(0) - env.vel()).cwiseAbs().maxCoeff());
  if (!(mismatch <= 1e-6)) {
    throw ContractError("execute_trajectory: trajectory starts " + std::to_string(mismatch) +
                        " away from the robot state");
  }
  ExecutionRecord rec;
  rec.value_states.resize(env.value_state_dim(), horizon + 1);
  rec.rewards.resize(horizon);
  rec.positions.resize(2, horizon + 1);
  rec.velocities.resize(2, horizon + 1);
  rec.actions.resize(2, horizon);
  rec.value_states.col(0) = env.value_state();
  rec.positions.col(0) = env.pos();
  rec.velocities.col(0) = env.vel();
  for (int t = 0; t < horizon; ++t) {
    const Eigen::VectorXd a =
        controller.track(traj.pos.col(t + 1), traj.vel.col(t + 1), env.pos(), env.vel(), env.options().max_accel);
    const StepResult r = env.step(a);
    rec.actions.col(t) = env.clip_action(a);
    rec.rewards[t] = r.reward;
    rec.value_states.col(t + 1) = env.value_state();
    rec.positions.col(t + 1) = env.pos();
    rec.velocities.col(t + 1) = env.vel();
  }
  rec.success = env.success();
  return rec;
}

}  // namespace tce
