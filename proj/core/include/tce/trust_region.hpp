#pragma once

// Per-state trust-region projections of a Gaussian onto a neighbourhood of the
// old policy's Gaussian.  Means are measured by the Mahalanobis distance under
// the old covariance, covariances by the squared Frobenius distance; both admit
// exact closed-form projections (a rescaling along the straight line to the old
// value), which keeps the operation differentiable almost everywhere.

#include <Eigen/Core>

#include "tce/traj_dist.hpp"

namespace tce {

struct TrustRegionBounds {
  double eps_mean = 0.05;
  double eps_cov = 1e-3;
  double reg_weight = 10.0;

  void validate() const;
};

struct MeanProjection {
  Eigen::VectorXd mean;       // projected mean
  double dissimilarity = 0.0;  // (mu_new - mu_old)^T Sigma_old^-1 (mu_new - mu_old)
  double scale = 1.0;          // sqrt(eps / d) when active
  bool active = false;
  Eigen::VectorXd delta;       // mu_new - mu_old
  Eigen::VectorXd whitened;    // Sigma_old^-1 delta

  /// Pulls a gradient w.r.t. the projected mean back to mu_new.
  Eigen::VectorXd backward(const Eigen::VectorXd& grad_projected) const;
};

MeanProjection project_mean(const Eigen::VectorXd& mu_new, const Eigen::VectorXd& mu_old,
                            const Eigen::MatrixXd& chol_old, double eps_mean);

struct CovProjection {
  Eigen::MatrixXd cov;         // projected covariance
  Eigen::MatrixXd chol;        // its lower factor (chol_new itself when inactive)
  double dissimilarity = 0.0;  // ||Sigma_new - Sigma_old||_F^2
  double eta = 1.0;
  bool active = false;
  Eigen::MatrixXd delta;       // Sigma_new - Sigma_old

  /// Pulls a symmetric gradient w.r.t. the projected covariance back to Sigma_new.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_projected) const;
};

/// Throws NumericalError if the combined covariance fails to factorize.
CovProjection project_cov(const Eigen::MatrixXd& chol_new, const Eigen::MatrixXd& chol_old, double eps_cov);

/// Projects both moments of `raw` around `old`.
struct GaussianProjection {
  MeanProjection mean;
  CovProjection cov;

  ParamGaussian gaussian() const { return {mean.mean, cov.chol}; }
};
GaussianProjection project(const ParamGaussian& raw, const ParamGaussian& old, const TrustRegionBounds& bounds);

/// reg_weight * (||mu_raw - mu_proj||^2 + ||Sigma_raw - Sigma_proj||_F^2).
double trust_region_penalty(const ParamGaussian& raw, const ParamGaussian& projected, double reg_weight);

/// Gradients of the penalty w.r.t. the raw mean and raw covariance, treating the
/// projected moments as constants.
struct PenaltyGrad {
  double value = 0.0;
  Eigen::VectorXd d_mean;
  Eigen::MatrixXd d_cov;
};
PenaltyGrad trust_region_penalty_grad(const Eigen::VectorXd& mu_raw, const Eigen::MatrixXd& cov_raw,
                                      const Eigen::VectorXd& mu_proj, const Eigen::MatrixXd& cov_proj,
                                      double reg_weight);

}  // namespace tce
