#pragma once

// Small synthetic learning problems shared by the learner tests and the
// acceptance binary.

#include <cstdint>
#include <vector>

#include "tce/learner.hpp"

namespace fixture {

struct SurrogateProblem {
  tce::MpKernel kernel;
  tce::EpisodicPolicy policy;  // perturbed away from the policy that produced `old`
  std::vector<tce::SegmentBatch> batches;
  std::vector<tce::ParamGaussian> old;
  tce::NoiseModel noise{0.05};
};

/// Episodes with random states, rewards and advantages whose segment positions
/// come from parameters sampled under `old`.
SurrogateProblem make_surrogate_problem(int num_dof, int num_basis, int segments, int episodes, std::uint64_t seed,
                                        double perturbation = 0.05);

struct BbrlProblem {
  tce::EpisodicPolicy policy;
  tce::EpisodeBatch batch;
  std::vector<tce::ParamGaussian> old;
};

BbrlProblem make_bbrl_problem(int num_params, int episodes, std::uint64_t seed, double perturbation = 0.05);

struct DenseTrajectory {
  Eigen::VectorXd mean;  // index d * (T+1) + t
  Eigen::MatrixXd cov;
};

/// Full trajectory Gaussian assembled from unit responses of compute_trajectory.
DenseTrajectory dense_trajectory(const tce::MpKernel& k, const tce::ParamGaussian& pg, const Eigen::VectorXd& yb,
                                 const Eigen::VectorXd& vb, double noise_std);

/// Indices of a time pair in DenseTrajectory ordering, matching SegmentDistribution.
std::vector<int> pair_indices(int dofs, int points, tce::TimePair p);

}  // namespace fixture
