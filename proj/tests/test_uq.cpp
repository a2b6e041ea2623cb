#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rjmc/ensemble.hpp"
#include "rjmc/uq.hpp"

using namespace rjmc;

namespace {

Trace trace_from(const Matrix& f) {
  Trace t;
  t.f_values = f;
  return t;
}

Trace finite_chain_trace(const Matrix& p, const Matrix& f, Eigen::Index n, RngStream& rng) {
  const std::vector<Eigen::Index> path = simulate_finite_chain(p, 0, n, rng);
  Trace t;
  t.f_values.resize(n, f.cols());
  for (Eigen::Index i = 0; i < n; ++i) t.f_values.row(i) = f.row(path[static_cast<std::size_t>(i)]);
  return t;
}

Matrix two_state(double a, double b) { return (Matrix(2, 2) << 1.0 - a, a, b, 1.0 - b).finished(); }

// Gaussian AR(1) rows x_t = rho x_{t-1} + e_t, componentwise independent.
Trace ar1_trace(Eigen::Index n, Eigen::Index d, double rho, RngStream& rng) {
  Matrix f(n, d);
  Vector x = Vector::Zero(d);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < d; ++j) x(j) = rho * x(j) + rng.normal();
    f.row(t) = x.transpose();
  }
  return trace_from(f);
}

}  // namespace

TEST(ErgodicAverage, SimpleTraces) {
  EXPECT_EQ(ergodic_average(trace_from(Matrix::Constant(7, 2, 3.5))), Vector::Constant(2, 3.5));
  Matrix alt(10, 1);
  for (int i = 0; i < 10; ++i) alt(i, 0) = i % 2 ? -1.0 : 1.0;
  EXPECT_EQ(ergodic_average(trace_from(alt))(0), 0.0);
  RngStream rng(1);
  Matrix ind = Matrix::Zero(1000, 4);
  for (int i = 0; i < 1000; ++i) ind(i, static_cast<Eigen::Index>(rng.below(4))) = 1.0;
  EXPECT_NEAR(ergodic_average(trace_from(ind)).sum(), 1.0, 1e-15);
  EXPECT_THROW(ergodic_average(trace_from(Matrix(0, 2))), DomainError);
}

TEST(ErgodicAverage, CompensatedSummation) {
  // 1e8 followed by many 1e-8's: naive summation loses the small terms.
  const Eigen::Index n = 1000001;
  Matrix f = Matrix::Constant(n, 1, 1e-8);
  f(0, 0) = 1e8;
  const double expected = (1e8 + 1e-8 * (n - 1)) / static_cast<double>(n);
  EXPECT_NEAR(ergodic_average(trace_from(f))(0), expected, 1e-15 * expected);
}

TEST(BatchSize, Examples) {
  BatchGeometry g = batch_size_rule(10000, 0.5);
  EXPECT_EQ(g.b_n, 100);
  EXPECT_EQ(g.a_n, 100);
  g = batch_size_rule(100000, 0.6);
  EXPECT_EQ(g.b_n, 1000);
  EXPECT_EQ(g.a_n, 100);
  EXPECT_THROW(batch_size_rule(100, 1.0), DomainError);
  EXPECT_THROW(batch_size_rule(100, 0.0), DomainError);
}

TEST(BatchSize, MonotoneInN) {
  for (double v : {0.4, 0.5, 0.6, 0.75}) {
    BatchGeometry prev = batch_size_rule(1, v);
    for (Eigen::Index n = 2; n < 200000; n += 1 + n / 50) {
      const BatchGeometry g = batch_size_rule(n, v);
      EXPECT_GE(g.b_n, prev.b_n);
      EXPECT_LE(g.a_n * g.b_n, n);
      prev = g;
    }
  }
}

TEST(BatchMeans, ConstantTraceIsZero) {
  const BatchMeansEstimate e = batch_means_cov(trace_from(Matrix::Constant(1000, 3, 2.0)), 0.5);
  EXPECT_EQ(e.sigma_n, Matrix::Zero(3, 3));
  EXPECT_THROW(batch_means_cov(trace_from(Matrix::Constant(10, 1, 1.0)), 1, 10), DomainError);
  EXPECT_THROW(batch_means_cov(trace_from(Matrix::Constant(10, 1, 1.0)), 3, 4), DomainError);
}

TEST(BatchMeans, IidNormalRecoversIdentity) {
  RngStream rng(2);
  const Eigen::Index n = 1000000;
  Matrix f(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) f(i, j) = rng.normal();
  const BatchMeansEstimate e = batch_means_cov(trace_from(f), 0.5);
  EXPECT_LT((e.sigma_n - Matrix::Identity(3, 3)).norm() / std::sqrt(3.0), 0.10);
  EXPECT_GE(min_symmetric_eigenvalue(e.sigma_n), -1e-10);
}

TEST(BatchMeans, TwoStateChainMatchesExact) {
  const Matrix p = two_state(0.3, 0.1);
  const Vector pi = stationary_distribution(p);
  const Matrix f = (Matrix(2, 1) << 0.0, 1.0).finished();
  const Matrix exact = exact_asymptotic_cov_finite(p, pi, f);
  RngStream rng(3);
  const BatchMeansEstimate e = batch_means_cov(finite_chain_trace(p, f, 1000000, rng), 0.6);
  EXPECT_NEAR(e.sigma_n(0, 0) / exact(0, 0), 1.0, 0.10);
}

TEST(ExactCov, IndependentSamplingGivesVariance) {
  const Vector pi = (Vector(3) << 0.2, 0.5, 0.3).finished();
  const Matrix p = Vector::Ones(3) * pi.transpose();
  const Matrix f = (Matrix(3, 2) << 1, 0, 2, 1, 4, -1).finished();
  const Vector mean = f.transpose() * pi;
  const Matrix fc = f.rowwise() - mean.transpose();
  const Matrix cov = fc.transpose() * pi.asDiagonal() * fc;
  EXPECT_LT((exact_asymptotic_cov_finite(p, pi, f) - cov).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ExactCov, TwoStateClosedForm) {
  for (auto [a, b] : {std::pair{0.3, 0.1}, std::pair{0.9, 0.8}, std::pair{0.05, 0.02}}) {
    const Matrix p = two_state(a, b);
    const Vector pi = (Vector(2) << b / (a + b), a / (a + b)).finished();
    const Matrix f = (Matrix(2, 1) << 1.0, 0.0).finished();
    const double closed = pi(0) * pi(1) * (2.0 - a - b) / (a + b);
    EXPECT_NEAR(exact_asymptotic_cov_finite(p, pi, f)(0, 0), closed, 1e-12);
    EXPECT_NEAR(oracle::series_asymptotic_cov(p, pi, f, 10000)(0, 0), closed, 1e-12);
  }
}

TEST(ExactCov, MatchesTruncatedSeries) {
  RngStream rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(8));
    const Matrix p = random_stochastic_matrix(n, rng);
    const Vector pi = stationary_distribution(p);
    Matrix f(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) f.row(i) << rng.normal(), rng.normal();
    const Matrix a = exact_asymptotic_cov_finite(p, pi, f);
    const Matrix b = oracle::series_asymptotic_cov(p, pi, f, 10000);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10) << trial;
  }
}

TEST(ExactCov, PeriodicChainRejected) {
  const Matrix p = (Matrix(2, 2) << 0, 1, 1, 0).finished();
  const Vector pi = Vector::Constant(2, 0.5);
  EXPECT_THROW(exact_asymptotic_cov_finite(p, pi, Matrix::Identity(2, 2)), NumericError);
}

TEST(Delta, IdentityAndRankOne) {
  const Matrix s = (Matrix(2, 2) << 2.0, 0.3, 0.3, 1.0).finished();
  EXPECT_EQ(delta_cov(s, identity_spec(2), Vector::Zero(2)), s);
  DeltaSpec pair;
  pair.d = 1;
  pair.m = 2;
  pair.h = [](const Vector& e) { return Vector((Vector(2) << 1.0 - e(0), e(0)).finished()); };
  pair.jacobian = [](const Vector&) { return Matrix((Matrix(2, 1) << -1.0, 1.0).finished()); };
  const Matrix v = delta_cov(Matrix::Constant(1, 1, 0.7), pair, Vector::Constant(1, 0.3));
  EXPECT_EQ(v, (Matrix(2, 2) << 0.7, -0.7, -0.7, 0.7).finished());
  EXPECT_NEAR(v.determinant(), 0.0, 1e-15);
  DeltaSpec bad = pair;
  bad.jacobian = [](const Vector&) { return Matrix::Constant(2, 1, std::nan("")); };
  EXPECT_THROW(delta_cov(Matrix::Constant(1, 1, 0.7), bad, Vector::Constant(1, 0.3)), NumericError);
}

TEST(Delta, ArQuantities) {
  const DeltaSpec s = ar_h_spec();
  const Vector h = s.h((Vector(3) << 0.5, 0.0, 0.5).finished());
  EXPECT_EQ(h, (Vector(4) << 0.5, 0.5, 0.0, 1.0).finished());
  RngStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const double e1 = 0.05 + 0.9 * rng.uniform();
    const double a = rng.normal(), sd = 0.1 + rng.uniform();
    const Vector eta = (Vector(3) << e1, e1 * a, e1 * (a * a + sd * sd)).finished();
    const Vector out = s.h(eta);
    EXPECT_NEAR(out(0) + out(1), 1.0, 1e-15);
    EXPECT_NEAR(out(2), a, 1e-12);
    EXPECT_NEAR(out(3), sd, 1e-9);
    EXPECT_LT(jacobian_fd_discrepancy(s, eta), 1e-6) << trial;
  }
  EXPECT_THROW(s.h((Vector(3) << 0.5, 0.5, 0.5).finished()), DomainError);
  EXPECT_THROW(s.h((Vector(3) << 1.0, 0.0, 1.0).finished()), DomainError);
}

TEST(Noise, ZeroEpsilonAndScale) {
  RngStream rng(6);
  EXPECT_EQ(inject_noise(3, 0.0, Matrix::Identity(3, 3), 100, rng), Vector::Zero(3));
  const int draws = 100000;
  double sum2 = 0.0;
  for (int i = 0; i < draws; ++i) sum2 += inject_noise(2, 1.0, Matrix::Identity(2, 2), 10000, rng).squaredNorm();
  const double var = sum2 / (2.0 * draws);
  // The relative SE of a variance estimate from 2e5 normal draws is sqrt(2/2e5).
  EXPECT_NEAR(std::sqrt(var), 0.01, 3.0 * 0.01 * 0.5 * std::sqrt(2.0 / (2.0 * draws)));
  RngStream a(7), b(7);
  EXPECT_EQ(inject_noise(3, 0.5, Matrix::Identity(3, 3), 10, a), inject_noise(3, 0.5, Matrix::Identity(3, 3), 10, b));
  EXPECT_THROW(inject_noise(3, -1.0, Matrix::Identity(3, 3), 10, a), DomainError);
}

TEST(SimultaneousCI, SingleQuantityIsNormalInterval) {
  RngStream rng(8);
  const Trace t = ar1_trace(20000, 1, 0.5, rng);
  SimCIOptions opt;
  opt.epsilon = 0.0;
  const SimCIReport r = simultaneous_cis(t, identity_spec(1), opt, rng);
  EXPECT_NEAR(r.xi, 1.959964, 1e-4);
  EXPECT_TRUE(report_violations(r).empty());
  EXPECT_EQ(r.center()(0), ergodic_average(t)(0));
}

TEST(SimultaneousCI, LargeNoiseDominatesWidth) {
  RngStream rng(9);
  const Trace t = ar1_trace(10000, 3, 0.3, rng);
  SimCIOptions opt;
  opt.epsilon = 10.0;
  const SimCIReport r = simultaneous_cis(t, identity_spec(3), opt, rng);
  // The chain's own asymptotic variance (about 2) adds ~1% to eps^2 = 100.
  const double noise_only = 10.0 / std::sqrt(10000.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.half_width()(i) / (r.xi * noise_only), 1.0, 0.02);
    EXPECT_NEAR(r.half_width()(i), r.xi * std::sqrt(r.v_diag(i) / 10000.0), 1e-15);
  }
  EXPECT_TRUE(report_violations(r).empty());
  EXPECT_GE(r.xi, norm_quantile(0.975));
  EXPECT_LE(r.xi, norm_quantile(1.0 - 0.05 / 6.0));
}

TEST(SimultaneousCI, SingularCovarianceNeedsNoise) {
  RngStream rng(10);
  const Trace base = ar1_trace(5000, 1, 0.2, rng);
  Matrix f(5000, 3);
  for (Eigen::Index i = 0; i < 5000; ++i) {
    const double e1 = 0.3 + 0.05 * std::tanh(base.f_values(i, 0));
    f.row(i) << e1, 0.1 * e1, 0.2 * e1;
  }
  const Trace t = trace_from(f);
  SimCIOptions opt;
  opt.epsilon = 0.0;
  EXPECT_THROW(simultaneous_cis(t, ar_h_spec(), opt, rng), SingularityError);
  opt.epsilon = 1e-3;
  const SimCIReport r = simultaneous_cis(t, ar_h_spec(), opt, rng);
  EXPECT_EQ(r.intervals.rows(), 4);
  EXPECT_TRUE(report_violations(r).empty());
}

// Rows (p0, p1) of the AR map sum to a constant, so the delta covariance is
// singular whatever rounding does to its Cholesky pivots.
TEST(SimultaneousCI, ComplementaryRowsAlwaysSingular) {
  RngStream rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 500 + 250 * trial;
    Matrix f(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool in = rng.uniform() < 0.2;
      const double a = rng.normal();
      f.row(i) << (in ? 1.0 : 0.0), (in ? a : 0.0), (in ? a * a : 0.0);
    }
    SimCIOptions opt;
    opt.epsilon = 0.0;
    EXPECT_THROW(simultaneous_cis(trace_from(f), ar_h_spec(), opt, rng), SingularityError) << n;
  }
}

TEST(SimultaneousCI, InflateOnlyKeepsCenter) {
  RngStream rng(11);
  const Trace t = ar1_trace(4000, 2, 0.1, rng);
  SimCIOptions opt;
  opt.epsilon = 1.0;
  opt.inflate_only = true;
  const SimCIReport r = simultaneous_cis(t, identity_spec(2), opt, rng);
  EXPECT_EQ(r.center(), r.h_point);
  EXPECT_TRUE(report_violations(r).empty());
}

TEST(SimultaneousCI, RejectsBadInput) {
  RngStream rng(12);
  const Trace tiny = trace_from(Matrix::Constant(1, 1, 1.0));
  EXPECT_THROW(simultaneous_cis(tiny, identity_spec(1), SimCIOptions{}, rng), DomainError);
  const Trace t = ar1_trace(1000, 2, 0.1, rng);
  SimCIOptions opt;
  opt.alpha = 1.5;
  EXPECT_THROW(simultaneous_cis(t, identity_spec(2), opt, rng), DomainError);
  opt = SimCIOptions{};
  opt.v_star = Matrix::Identity(3, 3);
  EXPECT_THROW(simultaneous_cis(t, identity_spec(2), opt, rng), DomainError);
  opt = SimCIOptions{};
  opt.v_star = (Matrix(2, 2) << 1, 2, 2, 1).finished();
  EXPECT_THROW(simultaneous_cis(t, identity_spec(2), opt, rng), DomainError);
  DeltaSpec wrong = identity_spec(2);
  wrong.jacobian = [](const Vector&) { return Matrix(2.0 * Matrix::Identity(2, 2)); };
  EXPECT_THROW(simultaneous_cis(t, wrong, SimCIOptions{}, rng), InternalError);
}

TEST(SimultaneousCI, HalfWidthShrinksWithN) {
  std::vector<double> med;
  for (Eigen::Index n : {1000, 10000, 100000}) {
    std::vector<double> hw;
    for (int rep = 0; rep < 9; ++rep) {
      RngStream rng(100 + static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(n));
      const Trace t = ar1_trace(n, 2, 0.5, rng);
      const SimCIReport r = simultaneous_cis(t, identity_spec(2), SimCIOptions{}, rng);
      hw.push_back(r.half_width()(0));
    }
    std::nth_element(hw.begin(), hw.begin() + 4, hw.end());
    med.push_back(hw[4]);
  }
  EXPECT_GT(med[0], med[1]);
  EXPECT_GT(med[1], med[2]);
}

TEST(SimultaneousCI, CoversTruthAtNominalRate) {
  // Independent N(0, 1) rows: every interval set should contain 0 about 95%
  // of the time.
  int hits = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    RngStream rng(500 + static_cast<std::uint64_t>(rep));
    const Trace t = ar1_trace(4000, 2, 0.0, rng);
    SimCIOptions opt;
    opt.epsilon = 0.0;
    opt.quantile.n_points = 1024;
    hits += covers(simultaneous_cis(t, identity_spec(2), opt, rng), Vector::Zero(2));
  }
  EXPECT_GT(hits, 0.88 * reps);
  EXPECT_LE(hits, reps);
}
