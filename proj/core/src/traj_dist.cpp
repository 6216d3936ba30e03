#include "tce/traj_dist.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

#include "tce/errors.hpp"

namespace tce {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2 pi)

std::string pair_name(TimePair p) {
  return "(" + std::to_string(p.first) + ", " + std::to_string(p.second) + ")";
}

void check_pair(const MpKernel& kernel, TimePair pair) {
  const int last = kernel.num_steps();
  if (pair.first < 0 || pair.second > last) {
    throw ArgumentError("time pair " + pair_name(pair) + " outside [0, " + std::to_string(last) + "]");
  }
  if (pair.first >= pair.second) throw ArgumentError("time pair " + pair_name(pair) + " must satisfy t_k < t_k'");
}

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::Ref<const Eigen::MatrixXd>& cov, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all() ||
      !llt.matrixLLT().allFinite()) {
    throw NumericalError(std::string("Cholesky factorization failed: ") + what + " is not positive definite");
  }
  return llt;
}

}  // namespace

Eigen::MatrixXd ParamGaussian::covariance() const {
  const Eigen::MatrixXd lower = chol.triangularView<Eigen::Lower>();
  return lower * lower.transpose();
}

double ParamGaussian::log_det() const { return 2.0 * chol.diagonal().array().log().sum(); }

void ParamGaussian::validate() const {
  if (chol.rows() != mean.size() || chol.cols() != mean.size()) {
    throw ArgumentError("ParamGaussian: factor is " + std::to_string(chol.rows()) + "x" +
                        std::to_string(chol.cols()) + " for a mean of length " + std::to_string(mean.size()));
  }
  for (Eigen::Index j = 1; j < chol.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      if (chol(i, j) != 0.0) throw ArgumentError("ParamGaussian: factor is not lower triangular");
    }
  }
  if (!(chol.diagonal().array() > 0.0).all()) throw ArgumentError("ParamGaussian: factor diagonal must be positive");
}

SegmentMap segment_map(const MpKernel& kernel, const Eigen::Ref<const Eigen::VectorXd>& boundary_pos,
                       const Eigen::Ref<const Eigen::VectorXd>& boundary_vel, TimePair pair) {
  check_pair(kernel, pair);
  const int dofs = kernel.num_dof();
  const int per_dof = kernel.config.params_per_dof();
  if (boundary_pos.size() != dofs || boundary_vel.size() != dofs) {
    throw ArgumentError("segment_map: boundary state must have one entry per DoF");
  }
  SegmentMap m;
  m.time_pair = pair;
  m.map = Eigen::MatrixXd::Zero(kernel.num_params(), 2 * dofs);
  m.offset.resize(2 * dofs);
  const int times[2] = {pair.first, pair.second};
  for (int d = 0; d < dofs; ++d) {
    for (int j = 0; j < 2; ++j) {
      const int t = times[j];
      m.map.col(2 * d + j).segment(d * per_dof, per_dof) = kernel.pos_map.col(t);
      m.offset[2 * d + j] = kernel.xi1[t] * boundary_pos[d] + kernel.xi2[t] * boundary_vel[d];
    }
  }
  return m;
}

SegmentDistribution segment_distribution(const SegmentMap& map, const Eigen::Ref<const Eigen::VectorXd>& mean,
                                         const Eigen::Ref<const Eigen::MatrixXd>& cov, const NoiseModel& noise) {
  if (mean.size() != map.map.rows() || cov.rows() != map.map.rows() || cov.cols() != map.map.rows()) {
    throw ArgumentError("segment_distribution: parameter dimension mismatch");
  }
  SegmentDistribution dist;
  dist.time_pair = map.time_pair;
  dist.mean = map.offset + map.map.transpose() * mean;
  Eigen::MatrixXd c = map.map.transpose() * cov * map.map;
  dist.cov = 0.5 * (c + c.transpose());
  dist.cov.diagonal().array() += noise.noise_std * noise.noise_std;
  return dist;
}

SegmentDistribution segment_distribution(const MpKernel& kernel, const ParamGaussian& pg,
                                         const Eigen::Ref<const Eigen::VectorXd>& boundary_pos,
                                         const Eigen::Ref<const Eigen::VectorXd>& boundary_vel, TimePair pair,
                                         const NoiseModel& noise) {
  if (pg.dim() != kernel.num_params()) throw ArgumentError("segment_distribution: parameter dimension mismatch");
  const SegmentMap m = segment_map(kernel, boundary_pos, boundary_vel, pair);
  SegmentDistribution dist;
  dist.time_pair = pair;
  dist.mean = m.offset + m.map.transpose() * pg.mean;
  // (H^T L)(H^T L)^T is symmetric positive semidefinite by construction.
  const Eigen::MatrixXd b = m.map.transpose() * pg.chol.triangularView<Eigen::Lower>();
  dist.cov = b * b.transpose();
  dist.cov.diagonal().array() += noise.noise_std * noise.noise_std;
  return dist;
}

Eigen::VectorXd segment_values(const Trajectory& traj, TimePair pair) {
  if (pair.first < 0 || pair.second >= traj.num_points()) throw ArgumentError("segment_values: pair out of range");
  Eigen::VectorXd y(2 * traj.num_dof());
  for (int d = 0; d < traj.num_dof(); ++d) {
    y[2 * d] = traj.pos(d, pair.first);
    y[2 * d + 1] = traj.pos(d, pair.second);
  }
  return y;
}

double gaussian_log_pdf(const Eigen::Ref<const Eigen::VectorXd>& mean, const Eigen::Ref<const Eigen::MatrixXd>& cov,
                        const Eigen::Ref<const Eigen::VectorXd>& x, const char* what) {
  if (x.size() != mean.size() || cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ArgumentError("gaussian_log_pdf: dimension mismatch");
  }
  const auto llt = factor(cov, what);
  const Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(mean.size()) * kLog2Pi + log_det + z.squaredNorm());
}

GaussianLogPdfGrad gaussian_log_pdf_grad(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                         const Eigen::Ref<const Eigen::MatrixXd>& cov,
                                         const Eigen::Ref<const Eigen::VectorXd>& x, const char* what) {
  if (x.size() != mean.size() || cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ArgumentError("gaussian_log_pdf_grad: dimension mismatch");
  }
  const auto llt = factor(cov, what);
  const Eigen::VectorXd r = x - mean;
  const Eigen::VectorXd z = llt.matrixL().solve(r);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  GaussianLogPdfGrad out;
  out.value = -0.5 * (static_cast<double>(mean.size()) * kLog2Pi + log_det + z.squaredNorm());
  out.d_mean = llt.solve(r);
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
  Eigen::MatrixXd g = 0.5 * (out.d_mean * out.d_mean.transpose() - inv);
  out.d_cov = 0.5 * (g + g.transpose());
  return out;
}

double log_pdf(const SegmentDistribution& dist, const Eigen::Ref<const Eigen::VectorXd>& observed) {
  const std::string what = "segment covariance at time pair " + pair_name(dist.time_pair);
  return gaussian_log_pdf(dist.mean, dist.cov, observed, what.c_str());
}

double trajectory_log_likelihood(const MpKernel& kernel, const ParamGaussian& pg,
                                 const Eigen::Ref<const Eigen::VectorXd>& boundary_pos,
                                 const Eigen::Ref<const Eigen::VectorXd>& boundary_vel,
                                 std::span<const TimePair> pairs, const Trajectory& observed,
                                 const NoiseModel& noise) {
  if (pairs.empty()) throw ArgumentError("trajectory_log_likelihood: need at least one time pair");
  double total = 0.0;
  for (const TimePair& pair : pairs) {
    const auto dist = segment_distribution(kernel, pg, boundary_pos, boundary_vel, pair, noise);
    total += log_pdf(dist, segment_values(observed, pair));
  }
  return total / static_cast<double>(pairs.size());
}

Eigen::VectorXd sample(const ParamGaussian& pg, Rng& rng) {
  const Eigen::VectorXd z = standard_normal(rng, pg.dim());
  return pg.mean + pg.chol.triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd sample(const ParamGaussian& pg, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return sample(pg, rng);
}

double gauss_kl(const ParamGaussian& p, const ParamGaussian& q) {
  if (p.dim() != q.dim()) {
    throw ArgumentError("gauss_kl: dimension mismatch (" + std::to_string(p.dim()) + " vs " +
                        std::to_string(q.dim()) + ")");
  }
  const auto lq = q.chol.triangularView<Eigen::Lower>();
  const Eigen::MatrixXd m = lq.solve(p.chol.triangularView<Eigen::Lower>().toDenseMatrix());
  const Eigen::VectorXd diff = lq.solve(q.mean - p.mean);
  const double k = static_cast<double>(p.dim());
  const double kl = 0.5 * (m.squaredNorm() + diff.squaredNorm() - k + q.log_det() - p.log_det());
  return std::max(kl, 0.0);
}

double gauss_entropy(const ParamGaussian& pg) {
  const double k = static_cast<double>(pg.dim());
  return 0.5 * k * (1.0 + kLog2Pi) + 0.5 * pg.log_det();
}

}  // namespace tce
