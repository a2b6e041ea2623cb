#pragma once

// Monte Carlo error assessment: ergodic averages, batch means, exact
// asymptotic covariances for finite chains, the delta method, noise injection
// and simultaneous confidence intervals.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rjmc/distributions.hpp"
#include "rjmc/error.hpp"
#include "rjmc/finite_spectral.hpp"
#include "rjmc/linalg.hpp"
#include "rjmc/mvn_prob.hpp"
#include "rjmc/rng.hpp"

namespace rjmc {

struct TraceMeta {
  std::string sampler_id = "none";
  std::uint64_t seed = 0;
  std::string config_hash;
};

// Row t holds f(X(t)).
struct Trace {
  Matrix f_values;
  TraceMeta meta;

  Eigen::Index n() const { return f_values.rows(); }
  Eigen::Index d() const { return f_values.cols(); }
};

inline void validate_trace(const Trace& trace) {
  if (trace.n() < 1 || trace.d() < 1) throw DomainError("trace: need n >= 1 and d >= 1");
  if (!trace.f_values.allFinite()) throw NumericError("trace: non-finite f-values");
}

namespace detail {

// Compensated column sums over rows [begin, end).
inline Vector kahan_column_sums(const Matrix& x, Eigen::Index begin, Eigen::Index end) {
  const Eigen::Index d = x.cols();
  Vector sum = Vector::Zero(d), comp = Vector::Zero(d);
  for (Eigen::Index t = begin; t < end; ++t) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double y = x(t, j) - comp(j);
      const double s = sum(j) + y;
      comp(j) = (s - sum(j)) - y;
      sum(j) = s;
    }
  }
  return sum;
}

}  // namespace detail

inline Vector ergodic_average(const Trace& trace) {
  validate_trace(trace);
  return detail::kahan_column_sums(trace.f_values, 0, trace.n()) / static_cast<double>(trace.n());
}

struct BatchGeometry {
  Eigen::Index a_n = 0;  // number of batches
  Eigen::Index b_n = 0;  // batch length
};

// b_n = floor(n^v), a_n = floor(n / b_n). A power that lands within round-off
// below an integer is snapped up (10^5 at v = 0.6 is exactly 1000).
inline BatchGeometry batch_size_rule(Eigen::Index n, double v) {
  if (!(v > 0.0 && v < 1.0)) throw DomainError("batch_size_rule: v must lie in (0,1)");
  if (n < 1) throw DomainError("batch_size_rule: n must be positive");
  const double x = std::pow(static_cast<double>(n), v);
  double b = std::floor(x);
  if (x - b > 1.0 - 1e-9 * std::max(1.0, x)) b += 1.0;
  BatchGeometry g;
  g.b_n = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(b));
  g.a_n = n / g.b_n;
  return g;
}

struct BatchMeansEstimate {
  Matrix sigma_n;
  Eigen::Index a_n = 0;
  Eigen::Index b_n = 0;
  Vector mean;  // ergodic mean of the full trace
};

// Sigma_n = b_n / (a_n - 1) * sum_j (M_j - M)(M_j - M)^T over the first
// a_n * b_n rows, M the mean of that batched span.
inline BatchMeansEstimate batch_means_cov(const Trace& trace, Eigen::Index a_n, Eigen::Index b_n) {
  validate_trace(trace);
  if (a_n < 2) throw DomainError("batch_means_cov: need at least 2 batches");
  if (b_n < 1 || a_n * b_n > trace.n()) throw DomainError("batch_means_cov: batch geometry exceeds trace");
  const Eigen::Index d = trace.d();
  Matrix batch(a_n, d);
  for (Eigen::Index j = 0; j < a_n; ++j) {
    batch.row(j) = (detail::kahan_column_sums(trace.f_values, j * b_n, (j + 1) * b_n) /
                    static_cast<double>(b_n))
                       .transpose();
  }
  const Vector center = batch.colwise().mean().transpose();
  const Matrix dev = batch.rowwise() - center.transpose();
  BatchMeansEstimate est;
  est.sigma_n = static_cast<double>(b_n) / static_cast<double>(a_n - 1) * (dev.transpose() * dev);
  est.sigma_n = 0.5 * (est.sigma_n + est.sigma_n.transpose());
  est.a_n = a_n;
  est.b_n = b_n;
  est.mean = ergodic_average(trace);
  return est;
}

inline BatchMeansEstimate batch_means_cov(const Trace& trace, double v) {
  const BatchGeometry g = batch_size_rule(trace.n(), v);
  return batch_means_cov(trace, g.a_n, g.b_n);
}

// Asymptotic covariance of n^{1/2}(ergodic mean - pi f) for a finite chain,
// through the fundamental matrix Z = (I - P + 1 pi^T)^{-1}:
//   Sigma = F'^T D F' + F'^T D (Z - I) F' + [F'^T D (Z - I) F']^T,
// F' = F - 1 pi^T F. Requires the spectral radius of P - 1 pi^T below 1.
inline Matrix exact_asymptotic_cov_finite(const Matrix& p, const Vector& pi, const Matrix& f) {
  const Eigen::Index n = p.rows();
  if (p.cols() != n || pi.size() != n || f.rows() != n) {
    throw DomainError("exact_asymptotic_cov_finite: dimension mismatch");
  }
  const Matrix proj = Vector::Ones(n) * pi.transpose();
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(p - proj, false).eigenvalues();
  const double radius = ev.cwiseAbs().maxCoeff();
  if (!(radius < 1.0 - 1e-12)) {
    throw NumericError("exact_asymptotic_cov_finite: chain is periodic or not mixing (spectral radius " +
                       std::to_string(radius) + "); the covariance series does not converge");
  }
  const Matrix z = (Matrix::Identity(n, n) - p + proj).partialPivLu().inverse();
  const Matrix fc = f - Vector::Ones(n) * (pi.transpose() * f);
  const Matrix dfc = pi.asDiagonal() * fc;
  const Matrix cross = dfc.transpose() * (z - Matrix::Identity(n, n)) * fc;
  Matrix sigma = fc.transpose() * dfc + cross + cross.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

inline Matrix exact_asymptotic_cov_finite(const FiniteTransChain& chain, const Matrix& f) {
  return exact_asymptotic_cov_finite(chain.transition, chain.stationary, f);
}

// DeltaSpec
//
// A smooth map H: R^d -> R^m with its analytic jacobian.
struct DeltaSpec {
  std::function<Vector(const Vector&)> h;
  std::function<Matrix(const Vector&)> jacobian;
  Eigen::Index d = 0;
  Eigen::Index m = 0;
};

inline DeltaSpec identity_spec(Eigen::Index d) {
  DeltaSpec s;
  s.h = [](const Vector& x) { return x; };
  s.jacobian = [d](const Vector&) { return Matrix(Matrix::Identity(d, d)); };
  s.d = d;
  s.m = d;
  return s;
}

// Central differences of H with one Richardson step, entrywise; returns the
// largest relative discrepancy, measured against max(|J_ij|, 1e-3 * max|J|).
inline double jacobian_fd_discrepancy(const DeltaSpec& spec, const Vector& at) {
  const Matrix j = spec.jacobian(at);
  const double scale = std::max(max_abs(j), 1e-12);
  double worst = 0.0;
  auto central = [&](Eigen::Index c, double h) {
    Vector up = at, dn = at;
    up(c) += h;
    dn(c) -= h;
    return Vector((spec.h(up) - spec.h(dn)) / (2.0 * h));
  };
  for (Eigen::Index c = 0; c < at.size(); ++c) {
    const double h = 1e-4 * std::max(1e-3, std::fabs(at(c)));
    const Vector col = (4.0 * central(c, 0.5 * h) - central(c, h)) / 3.0;
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      const double denom = std::max(std::fabs(j(r, c)), 1e-3 * scale);
      worst = std::max(worst, std::fabs(col(r) - j(r, c)) / denom);
    }
  }
  return worst;
}

inline Matrix delta_cov(const Matrix& sigma, const DeltaSpec& spec, const Vector& at) {
  const Matrix j = spec.jacobian(at);
  if (!j.allFinite()) throw NumericError("delta_cov: jacobian has non-finite entries");
  if (j.cols() != sigma.rows()) throw DomainError("delta_cov: jacobian does not match sigma");
  const Matrix v = j * sigma * j.transpose();
  return 0.5 * (v + v.transpose());
}

// Toy-AR quantities (1 - eta1, eta1, eta2 / eta1, sqrt(eta3/eta1 - (eta2/eta1)^2))
// and their 4 x 3 derivative.
inline DeltaSpec ar_h_spec() {
  DeltaSpec s;
  s.d = 3;
  s.m = 4;
  auto check = [](const Vector& e) {
    if (e.size() != 3) throw DomainError("ar_h_spec: expected a 3-vector");
    if (!(e(0) > 0.0 && e(0) < 1.0)) throw DomainError("ar_h_spec: eta1 must lie in (0,1)");
    const double var = e(2) / e(0) - (e(1) / e(0)) * (e(1) / e(0));
    if (!(var > 0.0)) throw DomainError("ar_h_spec: conditional variance is not positive");
    return var;
  };
  s.h = [check](const Vector& e) {
    const double var = check(e);
    Vector out(4);
    out << 1.0 - e(0), e(0), e(1) / e(0), std::sqrt(var);
    return out;
  };
  s.jacobian = [check](const Vector& e) {
    const double sd2 = 2.0 * std::sqrt(check(e));
    const double e1 = e(0), e2 = e(1), e3 = e(2);
    Matrix j = Matrix::Zero(4, 3);
    j(0, 0) = -1.0;
    j(1, 0) = 1.0;
    j(2, 0) = -e2 / (e1 * e1);
    j(2, 1) = 1.0 / e1;
    j(3, 0) = (-e3 / (e1 * e1) + 2.0 * e2 * e2 / (e1 * e1 * e1)) / sd2;
    j(3, 1) = (-2.0 * e2 / (e1 * e1)) / sd2;
    j(3, 2) = (1.0 / e1) / sd2;
    return j;
  };
  return s;
}

// One draw of eps * G_n, G_n ~ N(0, V* / n).
inline Vector inject_noise(Eigen::Index m, double epsilon, const Matrix& v_star, Eigen::Index n,
                           RngStream& rng) {
  if (!(epsilon >= 0.0)) throw DomainError("inject_noise: epsilon must be >= 0");
  if (n < 1) throw DomainError("inject_noise: n must be positive");
  if (v_star.rows() != m || v_star.cols() != m) throw DomainError("inject_noise: V* has wrong size");
  if (epsilon == 0.0) return Vector::Zero(m);
  const Matrix l = cholesky_lower(v_star);
  const Vector draw = sample_mvn_factored(Vector::Zero(m), l, rng);
  return (epsilon / std::sqrt(static_cast<double>(n))) * draw;
}

struct SimCIOptions {
  double alpha = 0.05;
  double epsilon = 1e-3;
  Matrix v_star;  // empty means identity
  double v = 0.6;
  double tol = 1e-4;  // target accuracy of the rectangle probability
  QuantileOptions quantile;
  bool inflate_only = false;  // experimental: widen without shifting the center
};

struct SimCIReport {
  Vector h_point;
  Vector g_noise;  // eps * G_n
  Vector v_diag;
  double xi = 0.0;
  Matrix intervals;  // m x 2
  double alpha = 0.05;
  double epsilon = 0.0;
  Eigen::Index n = 0;
  Eigen::Index a_n = 0;
  Eigen::Index b_n = 0;
  double xi_probability = 0.0;
  double xi_mc_error = 0.0;
  bool inflate_only = false;

  Vector center() const { return inflate_only ? h_point : Vector(h_point + g_noise); }
  Vector half_width() const {
    return xi * (v_diag / static_cast<double>(n)).cwiseSqrt();
  }
};

// Invariant checks for a finished report; returns human-readable violations.
inline std::vector<std::string> report_violations(const SimCIReport& r) {
  std::vector<std::string> out;
  const Eigen::Index m = r.h_point.size();
  const double lo = norm_quantile(1.0 - r.alpha / 2.0);
  const double hi = norm_quantile(1.0 - r.alpha / (2.0 * static_cast<double>(m)));
  if (!(r.xi >= lo - 1e-12 && r.xi <= hi + 1e-12)) out.push_back("xi outside its bracket");
  const Vector c = r.center();
  const Vector hw = r.half_width();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(r.intervals(i, 0) <= r.intervals(i, 1))) out.push_back("interval " + std::to_string(i) + " has lo > hi");
    const double tol = 1e-12 * std::max(1.0, std::fabs(c(i)) + hw(i));
    if (std::fabs((r.intervals(i, 1) - r.intervals(i, 0)) / 2.0 - hw(i)) > tol ||
        std::fabs((r.intervals(i, 1) + r.intervals(i, 0)) / 2.0 - c(i)) > tol) {
      out.push_back("interval " + std::to_string(i) + " does not match xi * sqrt(v / n)");
    }
  }
  return out;
}

// Smallest correlation-matrix eigenvalue treated as non-singular.
inline constexpr double kSingularCorrelation = 1e-11;

// The full pipeline from a trace to simultaneous intervals for H(pi f).
inline SimCIReport simultaneous_cis(const Trace& trace, const DeltaSpec& spec, const SimCIOptions& opt,
                                    RngStream& rng) {
  validate_trace(trace);
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw DomainError("simultaneous_cis: alpha not in (0,1)");
  if (!(opt.epsilon >= 0.0)) throw DomainError("simultaneous_cis: epsilon must be >= 0");
  const BatchGeometry g = batch_size_rule(trace.n(), opt.v);
  if (g.a_n < 2) throw DomainError("simultaneous_cis: trace too short for two batches");
  const BatchMeansEstimate bm = batch_means_cov(trace, g.a_n, g.b_n);

  SimCIReport r;
  r.alpha = opt.alpha;
  r.epsilon = opt.epsilon;
  r.n = trace.n();
  r.a_n = g.a_n;
  r.b_n = g.b_n;
  r.inflate_only = opt.inflate_only;
  r.h_point = spec.h(bm.mean);
  const Eigen::Index m = r.h_point.size();
  const double fd = jacobian_fd_discrepancy(spec, bm.mean);
  if (!(fd <= 1e-6)) {
    throw InternalError("simultaneous_cis: analytic jacobian disagrees with finite differences (relative " +
                        std::to_string(fd) + ")");
  }
  const Matrix v_star = opt.v_star.size() == 0 ? Matrix(Matrix::Identity(m, m)) : opt.v_star;
  if (v_star.rows() != m || v_star.cols() != m) throw DomainError("simultaneous_cis: V* has wrong size");
  if (opt.epsilon > 0.0) {
    try {
      cholesky_lower(v_star);
    } catch (const FactorizationError&) {
      throw DomainError("simultaneous_cis: V* must be positive definite");
    }
  }

  Matrix cov = delta_cov(bm.sigma_n, spec, bm.mean) + opt.epsilon * opt.epsilon * v_star;
  cov = 0.5 * (cov + cov.transpose());
  // Noise draw comes first so the stream position does not depend on the
  // covariance.
  r.g_noise = inject_noise(m, opt.epsilon, v_star, trace.n(), rng);
  r.v_diag = cov.diagonal();
  // Judged on the correlation scale: rounding can leave an exactly singular
  // covariance with a tiny positive Cholesky pivot.
  bool singular = !(r.v_diag.minCoeff() > 0.0);
  if (!singular) {
    const Vector inv_sd = r.v_diag.cwiseSqrt().cwiseInverse();
    singular = !(min_symmetric_eigenvalue(inv_sd.asDiagonal() * cov * inv_sd.asDiagonal()) > kSingularCorrelation);
  }
  if (singular) {
    if (opt.epsilon == 0.0) {
      throw SingularityError(
          "simultaneous_cis: the delta-method covariance is singular; inject noise with epsilon > 0");
    }
    throw NumericError("simultaneous_cis: covariance with injected noise is not positive definite");
  }
  const QuantileSolution sol = solve_rectangle_quantile(opt.alpha, r.v_diag, cov, opt.tol, opt.quantile);
  r.xi = sol.xi;
  r.xi_probability = sol.probability;
  r.xi_mc_error = sol.mc_error;
  const Vector c = r.center();
  const Vector hw = r.half_width();
  r.intervals.resize(m, 2);
  r.intervals.col(0) = c - hw;
  r.intervals.col(1) = c + hw;
  return r;
}

inline bool covers(const SimCIReport& r, const Vector& truth) {
  for (Eigen::Index i = 0; i < truth.size(); ++i)
    if (truth(i) < r.intervals(i, 0) || truth(i) > r.intervals(i, 1)) return false;
  return true;
}

}  // namespace rjmc
