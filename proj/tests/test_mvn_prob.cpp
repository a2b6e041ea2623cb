#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rjmc/mvn_prob.hpp"

using namespace rjmc;

namespace {

RectProbRequest symmetric_request(const Matrix& cov, double xi) {
  RectProbRequest r;
  const Vector sd = cov.diagonal().cwiseSqrt();
  r.lower = -xi * sd;
  r.upper = xi * sd;
  r.mean = Vector::Zero(cov.rows());
  r.covariance = cov;
  return r;
}

Matrix random_pd(int m, RngStream& rng) {
  Matrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + 0.2 * Matrix::Identity(m, m);
}

}  // namespace

TEST(RectangleProb, IndependentProduct) {
  const Matrix cov = 1.7 * Matrix::Identity(3, 3);
  const RectProbResult r = mvn_rectangle_prob(symmetric_request(cov, 2.0));
  const double exact = std::pow(2.0 * norm_cdf(2.0) - 1.0, 3);
  EXPECT_NEAR(exact, 0.86956, 1e-4);  // quoted figure is rounded
  EXPECT_NEAR(r.probability, exact, 5e-4);
  EXPECT_GE(r.mc_error, 0.0);
}

TEST(RectangleProb, Univariate) {
  const RectProbResult r = mvn_rectangle_prob(symmetric_request(Matrix::Identity(1, 1), 1.96));
  EXPECT_NEAR(r.probability, 0.95, 5e-4);
}

TEST(RectangleProb, ComonotonePair) {
  Matrix cov = Matrix::Ones(2, 2);
  const RectProbResult r = mvn_rectangle_prob(symmetric_request(cov, 1.5));
  EXPECT_NEAR(r.probability, 2.0 * norm_cdf(1.5) - 1.0, 5e-4);
}

TEST(RectangleProb, ShiftedMean) {
  RectProbRequest req;
  req.lower = Vector::Constant(2, 0.0);
  req.upper = Vector::Constant(2, std::numeric_limits<double>::infinity());
  req.mean = Vector::Constant(2, 1.0);
  req.covariance = Matrix::Identity(2, 2);
  EXPECT_NEAR(mvn_rectangle_prob(req).probability, norm_cdf(1.0) * norm_cdf(1.0), 5e-4);
}

TEST(RectangleProb, AgreesWithQuadrature) {
  RngStream rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + trial % 3;
    const Matrix cov = random_pd(m, rng);
    Vector lo(m), hi(m);
    for (int i = 0; i < m; ++i) {
      const double s = std::sqrt(cov(i, i));
      lo(i) = -s * (0.2 + 2.0 * rng.uniform());
      hi(i) = s * (0.2 + 2.0 * rng.uniform());
    }
    RectProbRequest req{lo, hi, Vector::Zero(m), cov};
    const double ref = oracle::rect_prob_quadrature(cov, lo, hi);
    EXPECT_NEAR(mvn_rectangle_prob(req).probability, ref, 1e-3) << "trial " << trial;
  }
}

TEST(RectangleProb, MoreLatticePointsReduceError) {
  RngStream rng(7);
  std::vector<double> ratio;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix cov = random_pd(4, rng);
    RectProbRequest req = symmetric_request(cov, 1.8);
    req.seed = static_cast<std::uint64_t>(trial);
    req.n_points = 512;
    const double e1 = mvn_rectangle_prob(req).mc_error;
    req.n_points = 1024;
    const double e2 = mvn_rectangle_prob(req).mc_error;
    ratio.push_back(e2 / std::max(e1, 1e-300));
  }
  std::nth_element(ratio.begin(), ratio.begin() + 10, ratio.end());
  EXPECT_LT(ratio[10], 1.0);
}

TEST(RectangleProb, DeterministicForSeed) {
  RngStream rng(3);
  const Matrix cov = random_pd(3, rng);
  RectProbRequest req = symmetric_request(cov, 2.0);
  req.seed = 17;
  const RectProbResult a = mvn_rectangle_prob(req), b = mvn_rectangle_prob(req);
  EXPECT_EQ(a.probability, b.probability);
  EXPECT_EQ(a.mc_error, b.mc_error);
}

TEST(RectangleProb, Errors) {
  RectProbRequest req = symmetric_request(Matrix::Identity(2, 2), 1.0);
  req.mean = Vector::Zero(3);
  EXPECT_THROW(mvn_rectangle_prob(req), DomainError);
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  req = symmetric_request(Matrix::Identity(2, 2), 1.0);
  req.covariance = bad;
  EXPECT_THROW(mvn_rectangle_prob(req), NumericError);
  req = symmetric_request(Matrix::Identity(2, 2), 1.0);
  req.replicates = 4;
  EXPECT_THROW(mvn_rectangle_prob(req), DomainError);
  req = symmetric_request(Matrix::Identity(2, 2), 1.0);
  std::swap(req.lower, req.upper);
  EXPECT_THROW(mvn_rectangle_prob(req), DomainError);
}

TEST(RectangleQuantile, UnivariateIsNormalQuantile) {
  const QuantileSolution s = solve_rectangle_quantile(0.05, Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 2.0), 1e-6);
  EXPECT_NEAR(s.xi, 1.95996, 1e-5);
}

TEST(RectangleQuantile, IndependentClosedForm) {
  const Matrix cov = Matrix::Identity(4, 4) * 0.3;
  const QuantileSolution s = solve_rectangle_quantile(0.05, cov.diagonal(), cov, 1e-5);
  const double exact = norm_quantile((1.0 + std::pow(0.95, 0.25)) / 2.0);
  EXPECT_NEAR(exact, 2.4908, 2e-4);
  EXPECT_NEAR(s.xi, exact, 1e-3);
}

TEST(RectangleQuantile, BracketAndMonotoneTrace) {
  RngStream rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + trial % 4;
    const Matrix cov = random_pd(m, rng);
    for (double alpha : {0.01, 0.05, 0.2}) {
      const QuantileSolution s = solve_rectangle_quantile(alpha, cov.diagonal(), cov, 1e-4);
      EXPECT_GE(s.xi, norm_quantile(1.0 - alpha / 2.0));
      EXPECT_LE(s.xi, norm_quantile(1.0 - alpha / (2.0 * m)));
      auto t = s.trace;
      std::sort(t.begin(), t.end());
      for (std::size_t i = 1; i < t.size(); ++i) EXPECT_GE(t[i].second, t[i - 1].second);
    }
  }
}

TEST(RectangleQuantile, RejectsInconsistentDiagonal) {
  const Matrix cov = Matrix::Identity(2, 2);
  EXPECT_THROW(solve_rectangle_quantile(0.05, Vector::Constant(2, 2.0), cov, 1e-4), DomainError);
  EXPECT_THROW(solve_rectangle_quantile(1.5, cov.diagonal(), cov, 1e-4), DomainError);
}
