#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tce/errors.hpp"
#include "tce/traj_dist.hpp"

namespace {

using tce::MpConfig;
using tce::ParamGaussian;

using fixture::dense_trajectory;
using fixture::pair_indices;

ParamGaussian random_gaussian(int m, std::mt19937_64& rng) {
  return {oracle::random_vector(m, rng), oracle::random_lower(m, rng, 0.05)};
}

TEST(SegmentDistribution, MatchesDenseSubBlock) {
  std::mt19937_64 rng(21);
  MpConfig c;
  c.num_dof = 2;
  c.num_basis = 4;
  c.forcing_gain = 156.25;
  const auto k = tce::build_kernel(c);
  const auto pg = random_gaussian(k.num_params(), rng);
  const Eigen::VectorXd yb = oracle::random_vector(2, rng);
  const Eigen::VectorXd vb = oracle::random_vector(2, rng);
  const tce::NoiseModel noise{0.01};
  const auto dense = dense_trajectory(k, pg, yb, vb, noise.noise_std);
  const auto seg = tce::segment_distribution(k, pg, yb, vb, {10, 30}, noise);
  const auto idx = pair_indices(2, k.num_steps() + 1, {10, 30});
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(seg.mean[i], dense.mean[idx[i]], 1e-10);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(seg.cov(i, j), dense.cov(idx[i], idx[j]), 1e-10);
  }
}

TEST(SegmentDistribution, DegenerateCovarianceLeavesNoise) {
  std::mt19937_64 rng(4);
  const auto k = tce::build_kernel(MpConfig{});
  ParamGaussian pg{oracle::random_vector(k.num_params(), rng),
                   1e-8 * Eigen::MatrixXd::Identity(k.num_params(), k.num_params())};
  const Eigen::VectorXd yb = oracle::random_vector(2, rng);
  const Eigen::VectorXd vb = oracle::random_vector(2, rng);
  const tce::NoiseModel noise{0.05};
  const auto seg = tce::segment_distribution(k, pg, yb, vb, {3, 70}, noise);
  EXPECT_LT((seg.cov - 0.0025 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  const auto traj = tce::compute_trajectory(k, pg.mean, yb, vb);
  EXPECT_LT((seg.mean - tce::segment_values(traj, {3, 70})).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SegmentDistribution, EigenvalueFloor) {
  std::mt19937_64 rng(6);
  const auto k = tce::build_kernel(MpConfig{});
  const tce::NoiseModel noise{0.02};
  for (int trial = 0; trial < 20; ++trial) {
    const auto pg = random_gaussian(k.num_params(), rng);
    const auto seg = tce::segment_distribution(k, pg, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), {0, 40}, noise);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(seg.cov);
    EXPECT_GE(es.eigenvalues().minCoeff(), 0.0004 * (1 - 1e-8));
  }
}

TEST(SegmentDistribution, InvalidPairRaises) {
  const auto k = tce::build_kernel(MpConfig{});
  ParamGaussian pg{Eigen::VectorXd::Zero(k.num_params()), Eigen::MatrixXd::Identity(k.num_params(), k.num_params())};
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(tce::segment_distribution(k, pg, z, z, {5, 5}), tce::ArgumentError);
  EXPECT_THROW(tce::segment_distribution(k, pg, z, z, {6, 5}), tce::ArgumentError);
  EXPECT_THROW(tce::segment_distribution(k, pg, z, z, {-1, 5}), tce::ArgumentError);
  EXPECT_THROW(tce::segment_distribution(k, pg, z, z, {0, 101}), tce::ArgumentError);
}

TEST(LogPdf, StandardNormalAtMode) {
  tce::SegmentDistribution d{{0, 1}, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  EXPECT_NEAR(tce::log_pdf(d, Eigen::VectorXd::Zero(2)), -std::log(2 * M_PI), 1e-14);
}

TEST(LogPdf, ModeValue) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd cov = oracle::random_spd(4, rng);
  const Eigen::VectorXd mu = oracle::random_vector(4, rng);
  tce::SegmentDistribution d{{0, 1}, mu, cov};
  EXPECT_NEAR(tce::log_pdf(d, mu), -0.5 * std::log(std::pow(2 * M_PI, 4) * cov.determinant()), 1e-10);
}

TEST(LogPdf, MatchesDenseOracle) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd cov = oracle::random_spd(4, rng);
    const Eigen::VectorXd mu = oracle::random_vector(4, rng);
    const Eigen::VectorXd x = oracle::random_vector(4, rng);
    EXPECT_NEAR(tce::gaussian_log_pdf(mu, cov, x), oracle::dense_log_pdf(mu, cov, x), 1e-10);
  }
}

TEST(LogPdf, IndefiniteCovarianceRaisesNamedError) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  cov(1, 1) = -1.0;
  try {
    tce::gaussian_log_pdf(Eigen::VectorXd::Zero(2), cov, Eigen::VectorXd::Zero(2), "test matrix");
    FAIL() << "expected NumericalError";
  } catch (const tce::NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("test matrix"), std::string::npos);
  }
}

TEST(LogPdf, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  const Eigen::MatrixXd cov = oracle::random_spd(3, rng);
  const Eigen::VectorXd mu = oracle::random_vector(3, rng);
  const Eigen::VectorXd x = oracle::random_vector(3, rng);
  const auto g = tce::gaussian_log_pdf_grad(mu, cov, x);
  const auto fd_mean = oracle::numeric_gradient([&](const Eigen::VectorXd& m) { return oracle::dense_log_pdf(m, cov, x); },
                                                mu, 1e-6);
  EXPECT_LT(oracle::max_rel_error(g.d_mean, fd_mean), 1e-6);
  // Symmetric perturbation of (i, j) and (j, i) together.
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double h = 1e-6;
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(3, 3);
      e(i, j) = e(j, i) = 1.0;
      const double fd = (oracle::dense_log_pdf(mu, cov + h * e, x) - oracle::dense_log_pdf(mu, cov - h * e, x)) / (2 * h);
      const double an = (g.d_cov.array() * e.array()).sum();
      EXPECT_NEAR(an, fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(TrajectoryLikelihood, MeanOfPairTerms) {
  std::mt19937_64 rng(31);
  MpConfig c;
  c.num_basis = 3;
  const auto k = tce::build_kernel(c);
  const auto pg = random_gaussian(k.num_params(), rng);
  const Eigen::VectorXd yb = oracle::random_vector(2, rng);
  const Eigen::VectorXd vb = Eigen::VectorXd::Zero(2);
  const tce::NoiseModel noise{0.03};
  const auto observed = tce::compute_trajectory(k, tce::sample(pg, 99), yb, vb);
  const std::vector<tce::TimePair> pairs{{0, 30}, {30, 60}, {60, 100}};
  const auto dense = dense_trajectory(k, pg, yb, vb, noise.noise_std);
  double expected = 0.0;
  for (const auto& p : pairs) {
    const auto idx = pair_indices(2, k.num_steps() + 1, p);
    Eigen::VectorXd m(4), x(4);
    Eigen::MatrixXd s(4, 4);
    for (int i = 0; i < 4; ++i) {
      m[i] = dense.mean[idx[i]];
      for (int j = 0; j < 4; ++j) s(i, j) = dense.cov(idx[i], idx[j]);
    }
    x = tce::segment_values(observed, p);
    expected += oracle::dense_log_pdf(m, s, x) / 3.0;
  }
  EXPECT_NEAR(tce::trajectory_log_likelihood(k, pg, yb, vb, pairs, observed, noise), expected, 1e-8);

  const std::vector<tce::TimePair> one{{10, 20}};
  const auto seg = tce::segment_distribution(k, pg, yb, vb, one[0], noise);
  EXPECT_DOUBLE_EQ(tce::trajectory_log_likelihood(k, pg, yb, vb, one, observed, noise),
                   tce::log_pdf(seg, tce::segment_values(observed, one[0])));
}

TEST(TrajectoryLikelihood, MeanGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(41);
  MpConfig c;
  c.num_dof = 1;
  c.num_basis = 3;
  c.num_steps = 20;
  c.forcing_gain = 156.25;
  const auto k = tce::build_kernel(c);
  const auto pg = random_gaussian(k.num_params(), rng);
  const Eigen::VectorXd yb = Eigen::VectorXd::Constant(1, 0.1);
  const Eigen::VectorXd vb = Eigen::VectorXd::Zero(1);
  const tce::NoiseModel noise{0.05};
  const auto observed = tce::compute_trajectory(k, tce::sample(pg, 5), yb, vb);
  const std::vector<tce::TimePair> pairs{{0, 10}, {10, 20}};
  auto f = [&](const Eigen::VectorXd& mu) {
    return tce::trajectory_log_likelihood(k, ParamGaussian{mu, pg.chol}, yb, vb, pairs, observed, noise);
  };
  // Analytic: mean over pairs of H Sigma_seg^-1 (x - mu_seg).
  Eigen::VectorXd analytic = Eigen::VectorXd::Zero(k.num_params());
  for (const auto& p : pairs) {
    const auto map = tce::segment_map(k, yb, vb, p);
    const auto seg = tce::segment_distribution(map, pg.mean, pg.covariance(), noise);
    const auto g = tce::gaussian_log_pdf_grad(seg.mean, seg.cov, tce::segment_values(observed, p));
    analytic += map.map * g.d_mean / 2.0;
  }
  EXPECT_LT(oracle::max_rel_error(analytic, oracle::numeric_gradient(f, pg.mean, 1e-5)), 1e-5);
}

TEST(Sample, DeterministicAndDegenerate) {
  std::mt19937_64 rng(3);
  const auto pg = random_gaussian(5, rng);
  EXPECT_EQ(tce::sample(pg, 42), tce::sample(pg, 42));
  EXPECT_NE(tce::sample(pg, 42), tce::sample(pg, 43));
  ParamGaussian tiny{pg.mean, 1e-12 * Eigen::MatrixXd::Identity(5, 5)};
  EXPECT_LT((tce::sample(tiny, 1) - pg.mean).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Sample, EmpiricalCovariance) {
  std::mt19937_64 rng(9);
  const auto pg = random_gaussian(4, rng);
  const int n = 100000;
  tce::Rng draw(123);
  Eigen::MatrixXd xs(4, n);
  for (int i = 0; i < n; ++i) xs.col(i) = tce::sample(pg, draw);
  const Eigen::VectorXd mean = xs.rowwise().mean();
  const Eigen::MatrixXd centred = xs.colwise() - mean;
  const Eigen::MatrixXd emp = centred * centred.transpose() / (n - 1);
  const Eigen::MatrixXd cov = pg.covariance();
  EXPECT_LT((emp - cov).norm() / cov.norm(), 0.05);
}

TEST(Kl, ZeroForIdenticalAndClosedForm) {
  std::mt19937_64 rng(12);
  const auto pg = random_gaussian(4, rng);
  EXPECT_NEAR(tce::gauss_kl(pg, pg), 0.0, 1e-12);
  const Eigen::VectorXd mu = oracle::random_vector(3, rng);
  ParamGaussian p{mu, Eigen::MatrixXd::Identity(3, 3)};
  ParamGaussian q{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
  EXPECT_NEAR(tce::gauss_kl(p, q), 0.5 * mu.squaredNorm(), 1e-12);
}

TEST(Kl, MatchesDenseFormulaAndMonteCarlo) {
  std::mt19937_64 rng(14);
  const auto p = random_gaussian(3, rng);
  const auto q = random_gaussian(3, rng);
  const double kl = tce::gauss_kl(p, q);
  EXPECT_NEAR(kl, oracle::dense_kl(p.mean, p.covariance(), q.mean, q.covariance()), 1e-10);

  const int n = 1000000;
  tce::Rng draw(7);
  double sum = 0.0, sum_sq = 0.0;
  const Eigen::MatrixXd sp = p.covariance(), sq = q.covariance();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = tce::sample(p, draw);
    const double v = tce::gaussian_log_pdf(p.mean, sp, x) - tce::gaussian_log_pdf(q.mean, sq, x);
    sum += v;
    sum_sq += v * v;
  }
  const double mc = sum / n;
  const double se = std::sqrt((sum_sq / n - mc * mc) / n);
  EXPECT_LT(std::abs(mc - kl), 3 * se);
}

TEST(Kl, DimensionMismatchRaises) {
  ParamGaussian a{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  ParamGaussian b{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
  EXPECT_THROW(tce::gauss_kl(a, b), tce::ArgumentError);
}

TEST(ParamGaussian, ValidateRejectsBadFactor) {
  ParamGaussian pg{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  EXPECT_NO_THROW(pg.validate());
  pg.chol(0, 1) = 0.3;
  EXPECT_THROW(pg.validate(), tce::ArgumentError);
  pg.chol(0, 1) = 0.0;
  pg.chol(1, 1) = 0.0;
  EXPECT_THROW(pg.validate(), tce::ArgumentError);
}

TEST(SamplingLikelihood, AverageMatchesExpectedValue) {
  std::mt19937_64 rng(50);
  MpConfig c;
  c.num_basis = 3;
  const auto k = tce::build_kernel(c);
  const auto pg = random_gaussian(k.num_params(), rng);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  const tce::NoiseModel noise{0.05};
  const tce::TimePair pair{20, 60};
  const auto seg = tce::segment_distribution(k, pg, z, z, pair, noise);
  const double expected = -0.5 * 4 * (1 + std::log(2 * M_PI)) - 0.5 * std::log(seg.cov.determinant());
  tce::Rng draw(3);
  std::normal_distribution<double> normal(0.0, noise.noise_std);
  const int n = 20000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto traj = tce::compute_trajectory(k, tce::sample(pg, draw), z, z);
    Eigen::VectorXd x = tce::segment_values(traj, pair);
    for (int j = 0; j < 4; ++j) x[j] += normal(draw);
    const double v = tce::log_pdf(seg, x);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - expected), 3 * se);
}

}  // namespace
