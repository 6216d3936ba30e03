#pragma once

// Parameter-space Gaussians mapped to trajectory space, restricted to pairs of
// time points so that likelihoods only ever factor 2D x 2D covariances.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tce/prodmp.hpp"
#include "tce/random.hpp"

namespace tce {

/// N(mean, chol * chol^T) with chol lower triangular and a strictly positive diagonal.
struct ParamGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;

  Eigen::Index dim() const { return mean.size(); }
  Eigen::MatrixXd covariance() const;
  double log_det() const;
  /// Throws ArgumentError if shapes disagree, chol is not lower triangular or its diagonal is not positive.
  void validate() const;
};

struct NoiseModel {
  double noise_std = 1e-2;
};

using TimePair = std::pair<int, int>;

/// Positions at two grid times for all DoF.  Entries are DoF-major:
/// index 2*d + j holds DoF d at time_pair.first (j = 0) or .second (j = 1).
struct SegmentDistribution {
  TimePair time_pair{0, 0};
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Linear map from parameters to the 2D positions at a time pair:
/// y = offset + map^T w, map is (D(N+1)) x 2D.
struct SegmentMap {
  TimePair time_pair{0, 0};
  Eigen::MatrixXd map;
  Eigen::VectorXd offset;
};

SegmentMap segment_map(const MpKernel& kernel, const Eigen::Ref<const Eigen::VectorXd>& boundary_pos,
                       const Eigen::Ref<const Eigen::VectorXd>& boundary_vel, TimePair pair);

/// Mean and covariance of a segment given a parameter mean/covariance.
SegmentDistribution segment_distribution(const SegmentMap& map, const Eigen::Ref<const Eigen::VectorXd>& mean,
                                         const Eigen::Ref<const Eigen::MatrixXd>& cov, const NoiseModel& noise);

SegmentDistribution segment_distribution(const MpKernel& kernel, const ParamGaussian& pg,
                                         const Eigen::Ref<const Eigen::VectorXd>& boundary_pos,
                                         const Eigen::Ref<const Eigen::VectorXd>& boundary_vel, TimePair pair,
                                         const NoiseModel& noise = {});

/// Observed positions of a trajectory at a pair, in SegmentDistribution ordering.
Eigen::VectorXd segment_values(const Trajectory& traj, TimePair pair);

/// Multivariate normal log density through a Cholesky factorization.
/// `what` names the matrix in the NumericalError raised on failure.
double gaussian_log_pdf(const Eigen::Ref<const Eigen::VectorXd>& mean, const Eigen::Ref<const Eigen::MatrixXd>& cov,
                        const Eigen::Ref<const Eigen::VectorXd>& x, const char* what = "covariance");

/// Log density together with its gradients with respect to mean and covariance.
struct GaussianLogPdfGrad {
  double value = 0.0;
  Eigen::VectorXd d_mean;  // Sigma^-1 (x - mu)
  Eigen::MatrixXd d_cov;   // (Sigma^-1 r r^T Sigma^-1 - Sigma^-1) / 2, symmetric
};
GaussianLogPdfGrad gaussian_log_pdf_grad(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                         const Eigen::Ref<const Eigen::MatrixXd>& cov,
                                         const Eigen::Ref<const Eigen::VectorXd>& x, const char* what = "covariance");

double log_pdf(const SegmentDistribution& dist, const Eigen::Ref<const Eigen::VectorXd>& observed);

/// Mean of the K pairwise log densities of observed positions.
double trajectory_log_likelihood(const MpKernel& kernel, const ParamGaussian& pg,
                                 const Eigen::Ref<const Eigen::VectorXd>& boundary_pos,
                                 const Eigen::Ref<const Eigen::VectorXd>& boundary_vel,
                                 std::span<const TimePair> pairs, const Trajectory& observed,
                                 const NoiseModel& noise = {});

/// mean + chol * z with z drawn from a generator seeded with rng_seed.
Eigen::VectorXd sample(const ParamGaussian& pg, std::uint64_t rng_seed);
Eigen::VectorXd sample(const ParamGaussian& pg, Rng& rng);

/// Closed-form KL(p || q).
double gauss_kl(const ParamGaussian& p, const ParamGaussian& q);

/// Entropy of N(mean, chol chol^T).
double gauss_entropy(const ParamGaussian& pg);

}  // namespace tce
