#include "tce/trust_region.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "tce/errors.hpp"

namespace tce {
namespace {

// Relative slack on the activation test: a point projected onto the boundary
// evaluates to eps up to a few ulps and must count as inside.
constexpr double kBoundarySlack = 1e-10;

bool violates(double d, double eps) { return d > eps * (1.0 + kBoundarySlack); }

}  // namespace

void TrustRegionBounds::validate() const {
  if (!(eps_mean > 0.0)) throw ArgumentError("trust region: eps_mean must be positive");
  if (!(eps_cov > 0.0)) throw ArgumentError("trust region: eps_cov must be positive");
  if (!(reg_weight >= 0.0)) throw ArgumentError("trust region: reg_weight must be non-negative");
}

MeanProjection project_mean(const Eigen::VectorXd& mu_new, const Eigen::VectorXd& mu_old,
                            const Eigen::MatrixXd& chol_old, double eps_mean) {
  if (mu_new.size() != mu_old.size() || chol_old.rows() != mu_old.size() || chol_old.cols() != mu_old.size()) {
    throw ArgumentError("project_mean: dimension mismatch");
  }
  if (!(chol_old.diagonal().array() > 0.0).all()) {
    throw NumericalError("project_mean: old covariance factor is not positive definite");
  }
  MeanProjection p;
  p.delta = mu_new - mu_old;
  const auto lower = chol_old.triangularView<Eigen::Lower>();
  const Eigen::VectorXd z = lower.solve(p.delta);
  p.whitened = lower.transpose().solve(z);
  p.dissimilarity = z.squaredNorm();
  p.active = violates(p.dissimilarity, eps_mean);
  if (p.active) {
    p.scale = std::sqrt(eps_mean / p.dissimilarity);
    p.mean = mu_old + p.scale * p.delta;
  } else {
    p.scale = 1.0;
    p.mean = mu_new;
  }
  return p;
}

Eigen::VectorXd MeanProjection::backward(const Eigen::VectorXd& grad_projected) const {
  if (!active) return grad_projected;
  return scale * grad_projected - (scale / dissimilarity) * grad_projected.dot(delta) * whitened;
}

CovProjection project_cov(const Eigen::MatrixXd& chol_new, const Eigen::MatrixXd& chol_old, double eps_cov) {
  if (chol_new.rows() != chol_old.rows() || chol_new.cols() != chol_old.cols() || chol_new.rows() != chol_new.cols()) {
    throw ArgumentError("project_cov: dimension mismatch");
  }
  const Eigen::MatrixXd ln = chol_new.triangularView<Eigen::Lower>();
  const Eigen::MatrixXd lo = chol_old.triangularView<Eigen::Lower>();
  const Eigen::MatrixXd cov_new = ln * ln.transpose();
  const Eigen::MatrixXd cov_old = lo * lo.transpose();
  CovProjection p;
  p.delta = cov_new - cov_old;
  p.dissimilarity = p.delta.squaredNorm();
  p.active = violates(p.dissimilarity, eps_cov);
  if (!p.active) {
    p.eta = 1.0;
    p.cov = cov_new;
    p.chol = chol_new;
    return p;
  }
  p.eta = std::sqrt(eps_cov / p.dissimilarity);
  p.cov = cov_old + p.eta * p.delta;
  Eigen::LLT<Eigen::MatrixXd> llt(p.cov);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all()) {
    throw NumericalError("project_cov: projected covariance (eta = " + std::to_string(p.eta) +
                         ") is not positive definite");
  }
  p.chol = llt.matrixL();
  return p;
}

Eigen::MatrixXd CovProjection::backward(const Eigen::MatrixXd& grad_projected) const {
  if (!active) return grad_projected;
  const double inner = (grad_projected.array() * delta.array()).sum();
  return eta * grad_projected - (eta / dissimilarity) * inner * delta;
}

GaussianProjection project(const ParamGaussian& raw, const ParamGaussian& old, const TrustRegionBounds& bounds) {
  return {project_mean(raw.mean, old.mean, old.chol, bounds.eps_mean),
          project_cov(raw.chol, old.chol, bounds.eps_cov)};
}

double trust_region_penalty(const ParamGaussian& raw, const ParamGaussian& projected, double reg_weight) {
  if (reg_weight == 0.0) return 0.0;
  return reg_weight * ((raw.mean - projected.mean).squaredNorm() +
                       (raw.covariance() - projected.covariance()).squaredNorm());
}

PenaltyGrad trust_region_penalty_grad(const Eigen::VectorXd& mu_raw, const Eigen::MatrixXd& cov_raw,
                                      const Eigen::VectorXd& mu_proj, const Eigen::MatrixXd& cov_proj,
                                      double reg_weight) {
  PenaltyGrad g;
  const Eigen::VectorXd dm = mu_raw - mu_proj;
  const Eigen::MatrixXd dc = cov_raw - cov_proj;
  g.value = reg_weight * (dm.squaredNorm() + dc.squaredNorm());
  g.d_mean = 2.0 * reg_weight * dm;
  g.d_cov = 2.0 * reg_weight * dc;
  return g;
}

}  // namespace tce
