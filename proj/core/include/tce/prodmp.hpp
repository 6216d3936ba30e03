#pragma once

// Probabilistic dynamic movement primitives (ProDMP) on a fixed time grid.
//
// A DMP  tau^2 y'' = alpha (beta (g - y) - tau y') + f(x)  with beta = alpha/4
// is critically damped, so its solution separates into complementary functions
// y1 = exp(-a t), y2 = t exp(-a t) (a = alpha / 2 tau) and a particular part that
// is linear in the forcing weights w and goal g.  Everything that does not depend
// on (w, g) or the boundary state is precomputed once in an MpKernel.

#include <iosfwd>
#include <utility>

#include <Eigen/Core>

namespace tce {

struct MpConfig {
  int num_dof = 2;
  int num_basis = 5;
  double duration = 2.0;  // tau, seconds
  int num_steps = 100;    // grid points beyond t = 0
  double alpha = 25.0;
  double alpha_x = 3.0;
  // Adjacent basis functions intersect at exp(-basis_overlap); ln 2 gives 0.5.
  double basis_overlap = 0.69314718055994530942;
  int integration_substeps = 10;
  // Multiplies the forcing term, f(x) = forcing_gain * x * phi(x)^T w.  With 1.0
  // this is the textbook DMP; alpha*beta expresses w in position units.
  double forcing_gain = 1.0;

  double beta() const { return alpha / 4.0; }
  double dt() const { return duration / num_steps; }
  int params_per_dof() const { return num_basis + 1; }
  int num_params() const { return num_dof * (num_basis + 1); }
};

/// Normalized forcing basis phi_x(t) (length N).  Gaussian bumps whose centers
/// are equidistant in time over [0, tau], evaluated through the phase variable.
Eigen::VectorXd forcing_basis(const MpConfig& config, double t);

/// Phase x(t) = exp(-alpha_x t / tau).
double phase(const MpConfig& config, double t);

struct MpKernel {
  MpConfig config;
  Eigen::VectorXd time;   // t_i = i tau / T
  Eigen::VectorXd phase;  // x(t_i)

  Eigen::VectorXd y1, y2, dy1, dy2;
  Eigen::VectorXd q1, q2, dq1, dq2;
  Eigen::MatrixXd p1, p2, dp1, dp2;  // N x (T+1)

  // Per-DoF basis, (N+1) x (T+1); the last row is the goal column.
  Eigen::MatrixXd pos_basis;
  Eigen::MatrixXd vel_basis;

  Eigen::VectorXd xi1, xi2, xi3, xi4;
  Eigen::VectorXd dxi1, dxi2, dxi3, dxi4;

  // Boundary-corrected basis xi3*Phi_b + xi4*dPhi_b + Phi, (N+1) x (T+1).
  // Column t maps one DoF's [w, g] block to its position at t_t.
  Eigen::MatrixXd pos_map;
  Eigen::MatrixXd vel_map;

  int num_steps() const { return config.num_steps; }
  int num_dof() const { return config.num_dof; }
  int num_params() const { return config.num_params(); }
  double dt() const { return config.dt(); }
};

struct Trajectory {
  Eigen::MatrixXd pos;  // D x (T+1)
  Eigen::MatrixXd vel;  // D x (T+1)
  double dt = 0.0;

  int num_dof() const { return static_cast<int>(pos.rows()); }
  int num_points() const { return static_cast<int>(pos.cols()); }
  double duration() const { return dt * (num_points() - 1); }
};

/// Throws ConstructionError for an invalid config or non-finite intermediates.
MpKernel build_kernel(const MpConfig& config);

/// params are per-DoF contiguous [w_1..w_N, g]; boundary is applied at t = 0.
Trajectory compute_trajectory(const MpKernel& kernel, const Eigen::Ref<const Eigen::VectorXd>& params,
                              const Eigen::Ref<const Eigen::VectorXd>& boundary_pos,
                              const Eigen::Ref<const Eigen::VectorXd>& boundary_vel);

/// order-th time derivative of traj.pos (1, 2 or 3): central differences in the
/// interior, one-sided stencils at the edges.
Eigen::MatrixXd finite_diff_derivatives(const Trajectory& traj, int order);

/// CSV with header `t,dof,pos,vel`, rows ordered by time then DoF, 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace tce
