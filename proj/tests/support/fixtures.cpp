#include "fixtures.hpp"

#include <random>

namespace fixture {
namespace {

constexpr int kStateDim = 3;

Eigen::VectorXd normal_vector(Eigen::Index n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

tce::EpisodicPolicy random_policy(int num_params, std::mt19937_64& rng) {
  tce::EpisodicPolicyConfig c;
  c.state_dim = kStateDim;
  c.num_params = num_params;
  c.hidden = {8};
  c.initial_std = 0.3;
  tce::Rng init(rng());
  tce::EpisodicPolicy p(c, init);
  p.set_parameters(normal_vector(p.num_trainable(), rng, 0.3));
  return p;
}

void perturb(tce::EpisodicPolicy& p, std::mt19937_64& rng, double scale) {
  p.set_parameters(p.parameters() + normal_vector(p.num_trainable(), rng, scale));
}

}  // namespace

SurrogateProblem make_surrogate_problem(int num_dof, int num_basis, int segments, int episodes, std::uint64_t seed,
                                        double perturbation) {
  std::mt19937_64 rng(seed);
  tce::MpConfig mc;
  mc.num_dof = num_dof;
  mc.num_basis = num_basis;
  mc.num_steps = 20;
  mc.duration = 0.4;
  mc.forcing_gain = 156.25;
  SurrogateProblem p;
  p.kernel = tce::build_kernel(mc);
  p.policy = random_policy(mc.num_params(), rng);
  for (int e = 0; e < episodes; ++e) {
    tce::EpisodeRecord ep;
    ep.initial_state = normal_vector(kStateDim, rng, 1.0);
    ep.boundary_pos = normal_vector(num_dof, rng, 0.5);
    ep.boundary_vel = normal_vector(num_dof, rng, 0.5);
    const tce::ParamGaussian pg = p.policy.predict(ep.initial_state);
    ep.sampled_params = tce::sample(pg, rng());
    ep.trajectory = tce::compute_trajectory(p.kernel, ep.sampled_params, ep.boundary_pos, ep.boundary_vel);
    ep.states = Eigen::MatrixXd::Zero(kStateDim + 1, mc.num_steps + 1);
    for (int t = 0; t <= mc.num_steps; ++t) ep.states.col(t) = normal_vector(kStateDim + 1, rng, 1.0);
    ep.rewards = normal_vector(mc.num_steps, rng, 1.0);
    tce::SegmentBatch b = tce::make_segments(ep, p.kernel, segments, 1.0);
    b.advantages = normal_vector(b.num_segments(), rng, 1.0);
    b.old_log_likelihood = tce::segment_log_likelihoods(pg, b, p.noise);
    p.old.push_back(pg);
    p.batches.push_back(std::move(b));
  }
  perturb(p.policy, rng, perturbation);
  return p;
}

BbrlProblem make_bbrl_problem(int num_params, int episodes, std::uint64_t seed, double perturbation) {
  std::mt19937_64 rng(seed);
  BbrlProblem p;
  p.policy = random_policy(num_params, rng);
  std::vector<tce::EpisodeRecord> eps(static_cast<std::size_t>(episodes));
  for (auto& ep : eps) {
    ep.initial_state = normal_vector(kStateDim, rng, 1.0);
    ep.sampled_params = tce::sample(p.policy.predict(ep.initial_state), rng());
  }
  p.batch = tce::make_episode_batch(eps, normal_vector(episodes, rng, 1.0));
  p.old = tce::cache_old_policy(p.policy, p.batch);
  perturb(p.policy, rng, perturbation);
  return p;
}

DenseTrajectory dense_trajectory(const tce::MpKernel& k, const tce::ParamGaussian& pg, const Eigen::VectorXd& yb,
                                 const Eigen::VectorXd& vb, double noise_std) {
  const int m = k.num_params();
  const int points = k.num_steps() + 1;
  const int dofs = k.num_dof();
  const auto flat = [&](const tce::Trajectory& tr) {
    Eigen::VectorXd v(dofs * points);
    for (int d = 0; d < dofs; ++d) v.segment(d * points, points) = tr.pos.row(d).transpose();
    return v;
  };
  const Eigen::VectorXd offset = flat(tce::compute_trajectory(k, Eigen::VectorXd::Zero(m), yb, vb));
  Eigen::MatrixXd h(m, dofs * points);
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(m, j);
    h.row(j) = (flat(tce::compute_trajectory(k, e, yb, vb)) - offset).transpose();
  }
  DenseTrajectory out;
  out.mean = offset + h.transpose() * pg.mean;
  out.cov = h.transpose() * pg.covariance() * h +
            noise_std * noise_std * Eigen::MatrixXd::Identity(dofs * points, dofs * points);
  return out;
}

std::vector<int> pair_indices(int dofs, int points, tce::TimePair p) {
  std::vector<int> idx;
  for (int d = 0; d < dofs; ++d) {
    idx.push_back(d * points + p.first);
    idx.push_back(d * points + p.second);
  }
  return idx;
}

}  // namespace fixture
