#pragma once

// Multivariate normal rectangle probabilities by randomized quasi-Monte Carlo
// over the separation-of-variables transform, and the symmetric-rectangle
// quantile solver used for simultaneous confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "rjmc/distributions.hpp"
#include "rjmc/error.hpp"
#include "rjmc/linalg.hpp"
#include "rjmc/rng.hpp"

namespace rjmc {

struct RectProbRequest {
  Vector lower;
  Vector upper;
  Vector mean;
  Matrix covariance;
  std::size_t n_points = 4096;  // lattice points per shift replicate
  std::uint64_t seed = 0;
  std::size_t replicates = 8;  // random shifts, at least 8
};

struct RectProbResult {
  double probability = 0.0;
  double mc_error = 0.0;  // standard error across shift replicates
};

namespace detail {

inline std::vector<double> richtmyer_generators(std::size_t dim) {
  std::vector<double> gen;
  gen.reserve(dim);
  for (std::uint64_t cand = 2; gen.size() < dim; ++cand) {
    bool prime = true;
    for (std::uint64_t f = 2; f * f <= cand; ++f) {
      if (cand % f == 0) {
        prime = false;
        break;
      }
    }
    if (prime) {
      const double r = std::sqrt(static_cast<double>(cand));
      gen.push_back(r - std::floor(r));
    }
  }
  return gen;
}

}  // namespace detail

// GenzIntegrator
//
// Holds the reordered Cholesky factor of a centered covariance. Ordering is
// fixed at construction (smallest expected conditional interval first, for
// the limits supplied there); evaluate() may then be called with any limits
// in the original variable order and reuses the same randomized lattice, so
// repeated calls are deterministic and monotone in nested rectangles.
class GenzIntegrator {
 public:
  GenzIntegrator(const Matrix& covariance, const Vector& lower, const Vector& upper,
                 std::size_t n_points, std::size_t replicates, std::uint64_t seed)
      : n_points_(n_points), replicates_(replicates) {
    const Eigen::Index m = covariance.rows();
    if (covariance.cols() != m || lower.size() != m || upper.size() != m) {
      throw DomainError("mvn_rectangle_prob: dimension mismatch");
    }
    if (m == 0) throw DomainError("mvn_rectangle_prob: empty dimension");
    if (replicates_ < 8) throw DomainError("mvn_rectangle_prob: need at least 8 replicates");
    if (n_points_ == 0) throw DomainError("mvn_rectangle_prob: need at least one point");
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!(lower(i) <= upper(i))) throw DomainError("mvn_rectangle_prob: lower > upper");
    }
    if (!is_symmetric(covariance, 1e-10)) {
      throw DomainError("mvn_rectangle_prob: covariance is not symmetric");
    }
    try {
      factor(covariance, lower, upper);
    } catch (const NumericError&) {
      Matrix jittered = covariance;
      jittered.diagonal().array() += 1e-10 * covariance.trace();
      factor(jittered, lower, upper);
    }
    const std::size_t dim = m > 1 ? static_cast<std::size_t>(m - 1) : 0;
    generators_ = detail::richtmyer_generators(dim);
    shifts_.resize(replicates_ * dim);
    for (std::size_t r = 0; r < replicates_; ++r) {
      RngStream rng(seed, r);
      for (std::size_t d = 0; d < dim; ++d) shifts_[r * dim + d] = rng.uniform();
    }
  }

  Eigen::Index dim() const { return chol_.rows(); }
  const std::vector<Eigen::Index>& order() const { return order_; }

  RectProbResult evaluate(const Vector& lower, const Vector& upper) const {
    const Eigen::Index m = dim();
    Vector a(m), b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      a(i) = lower(order_[i]);
      b(i) = upper(order_[i]);
    }
    const std::size_t d = static_cast<std::size_t>(m - 1);
    std::vector<double> w(d), y(static_cast<std::size_t>(m));
    std::vector<double> rep(replicates_);
    for (std::size_t r = 0; r < replicates_; ++r) {
      double sum = 0.0;
      for (std::size_t k = 1; k <= n_points_; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
          double t = static_cast<double>(k) * generators_[j] + shifts_[r * d + j];
          t -= std::floor(t);
          w[j] = std::fabs(2.0 * t - 1.0);
        }
        sum += 0.5 * (integrand(a, b, w, y, false) + integrand(a, b, w, y, true));
      }
      rep[r] = sum / static_cast<double>(n_points_);
    }
    const double mean = std::accumulate(rep.begin(), rep.end(), 0.0) / replicates_;
    double ss = 0.0;
    for (double v : rep) ss += (v - mean) * (v - mean);
    RectProbResult out;
    out.probability = std::clamp(mean, 0.0, 1.0);
    out.mc_error = std::sqrt(ss / (replicates_ * (replicates_ - 1.0)));
    return out;
  }

 private:
  void factor(const Matrix& cov_in, const Vector& lower, const Vector& upper) {
    const Eigen::Index m = cov_in.rows();
    Matrix c = cov_in;
    Vector a = lower, b = upper;
    order_.resize(static_cast<std::size_t>(m));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    Matrix l = Matrix::Zero(m, m);
    Vector y = Vector::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::Index best = i;
      double best_mass = 2.0;
      for (Eigen::Index j = i; j < m; ++j) {
        double v = c(j, j);
        double shift = 0.0;
        for (Eigen::Index k = 0; k < i; ++k) {
          v -= l(j, k) * l(j, k);
          shift += l(j, k) * y(k);
        }
        if (!(v > 0.0)) continue;
        const double s = std::sqrt(v);
        const double mass = norm_cdf((b(j) - shift) / s) - norm_cdf((a(j) - shift) / s);
        if (mass < best_mass) {
          best_mass = mass;
          best = j;
        }
      }
      if (best != i) {
        c.row(i).swap(c.row(best));
        c.col(i).swap(c.col(best));
        l.row(i).swap(l.row(best));
        std::swap(a(i), a(best));
        std::swap(b(i), b(best));
        std::swap(order_[static_cast<std::size_t>(i)], order_[static_cast<std::size_t>(best)]);
      }
      double v = c(i, i);
      double shift = 0.0;
      for (Eigen::Index k = 0; k < i; ++k) {
        v -= l(i, k) * l(i, k);
        shift += l(i, k) * y(k);
      }
      if (!(v > 1e-14 * std::max(c(i, i), 1e-300))) {
        throw NumericError("mvn_rectangle_prob: covariance is not positive definite");
      }
      const double lii = std::sqrt(v);
      l(i, i) = lii;
      for (Eigen::Index r = i + 1; r < m; ++r) {
        double s = c(r, i);
        for (Eigen::Index k = 0; k < i; ++k) s -= l(r, k) * l(i, k);
        l(r, i) = s / lii;
      }
      // Conditional mean of the standardized variable on its interval.
      const double lo = (a(i) - shift) / lii, hi = (b(i) - shift) / lii;
      const double mass = norm_cdf(hi) - norm_cdf(lo);
      const double pdf_lo = std::isfinite(lo) ? norm_pdf(lo) : 0.0;
      const double pdf_hi = std::isfinite(hi) ? norm_pdf(hi) : 0.0;
      if (mass > 1e-300) {
        y(i) = (pdf_lo - pdf_hi) / mass;
      } else {
        y(i) = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
      }
    }
    chol_ = l;
  }

  double integrand(const Vector& a, const Vector& b, const std::vector<double>& w,
                   std::vector<double>& y, bool antithetic) const {
    const Eigen::Index m = dim();
    double f = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      double shift = 0.0;
      for (Eigen::Index k = 0; k < i; ++k) shift += chol_(i, k) * y[static_cast<std::size_t>(k)];
      const double lii = chol_(i, i);
      const double d = norm_cdf((a(i) - shift) / lii);
      const double e = norm_cdf((b(i) - shift) / lii);
      f *= (e - d);
      if (!(f > 0.0)) return 0.0;
      if (i + 1 == m) break;
      const double wi = antithetic ? 1.0 - w[static_cast<std::size_t>(i)] : w[static_cast<std::size_t>(i)];
      double u = d + wi * (e - d);
      u = std::clamp(u, 1e-300, 1.0 - 1e-16);
      y[static_cast<std::size_t>(i)] = detail::ppnd16(u);
    }
    return f;
  }

  std::size_t n_points_;
  std::size_t replicates_;
  Matrix chol_;
  std::vector<Eigen::Index> order_;
  std::vector<double> generators_;
  std::vector<double> shifts_;
};

inline RectProbResult mvn_rectangle_prob(const RectProbRequest& req) {
  const Eigen::Index m = req.covariance.rows();
  if (req.mean.size() != m) throw DomainError("mvn_rectangle_prob: mean dimension mismatch");
  if (req.lower.size() != m || req.upper.size() != m) {
    throw DomainError("mvn_rectangle_prob: limit dimension mismatch");
  }
  const Vector lo = req.lower - req.mean;
  const Vector hi = req.upper - req.mean;
  GenzIntegrator integ(req.covariance, lo, hi, req.n_points, req.replicates, req.seed);
  return integ.evaluate(lo, hi);
}

struct QuantileOptions {
  std::size_t n_points = 4096;
  std::size_t replicates = 8;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 200;
};

struct QuantileSolution {
  double xi = 0.0;
  double probability = 0.0;  // N_m mass of the solved rectangle
  double mc_error = 0.0;
  std::vector<std::pair<double, double>> trace;  // (xi, probability) per evaluation
};

// Solves N_m(prod_i [-xi sqrt(v_i), xi sqrt(v_i)]; 0, covariance) = 1 - alpha
// by bisection between z_{1-alpha/2} and z_{1-alpha/(2m)}.
inline QuantileSolution solve_rectangle_quantile(double alpha, const Vector& v_diag,
                                                 const Matrix& covariance, double tol,
                                                 const QuantileOptions& opt = {}) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("solve_rectangle_quantile: alpha not in (0,1)");
  const Eigen::Index m = v_diag.size();
  if (m == 0 || covariance.rows() != m || covariance.cols() != m) {
    throw DomainError("solve_rectangle_quantile: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(v_diag(i) > 0.0)) throw DomainError("solve_rectangle_quantile: v_diag must be positive");
    if (std::fabs(covariance(i, i) - v_diag(i)) > 1e-9 * v_diag(i)) {
      throw DomainError("solve_rectangle_quantile: covariance diagonal differs from v_diag");
    }
  }
  const double target = 1.0 - alpha;
  double lo = norm_quantile(1.0 - alpha / 2.0);
  double hi = norm_quantile(1.0 - alpha / (2.0 * static_cast<double>(m)));
  QuantileSolution sol;
  if (m == 1) {
    sol.xi = lo;
    sol.probability = target;
    return sol;
  }

  // Standardize to the correlation matrix so the rectangle is [-xi, xi]^m.
  const Vector inv_sd = v_diag.cwiseSqrt().cwiseInverse();
  const Matrix corr = inv_sd.asDiagonal() * covariance * inv_sd.asDiagonal();
  const Vector ones = Vector::Ones(m);
  GenzIntegrator integ(corr, -lo * ones, lo * ones, opt.n_points, opt.replicates, opt.seed);
  auto prob = [&](double xi) {
    const RectProbResult r = integ.evaluate(-xi * ones, xi * ones);
    sol.trace.emplace_back(xi, r.probability);
    return r;
  };

  const RectProbResult at_lo = prob(lo);
  const RectProbResult at_hi = prob(hi);
  const double slack_lo = 3.0 * at_lo.mc_error + tol;
  const double slack_hi = 3.0 * at_hi.mc_error + tol;
  if (at_lo.probability > target + slack_lo || at_hi.probability < target - slack_hi) {
    throw SolverError("solve_rectangle_quantile: bracket does not straddle 1-alpha (p(lo)=" +
                      std::to_string(at_lo.probability) + ", p(hi)=" +
                      std::to_string(at_hi.probability) + ")");
  }
  if (at_lo.probability >= target) {
    sol.xi = lo;
    sol.probability = at_lo.probability;
    sol.mc_error = at_lo.mc_error;
    return sol;
  }
  if (at_hi.probability <= target) {
    sol.xi = hi;
    sol.probability = at_hi.probability;
    sol.mc_error = at_hi.mc_error;
    return sol;
  }
  double a = lo, b = hi;
  RectProbResult cur = at_lo;
  double mid = lo;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    mid = 0.5 * (a + b);
    cur = prob(mid);
    if (std::fabs(cur.probability - target) <= tol || b - a < 1e-12) break;
    if (cur.probability < target) {
      a = mid;
    } else {
      b = mid;
    }
  }
  sol.xi = mid;
  sol.probability = cur.probability;
  sol.mc_error = cur.mc_error;
  return sol;
}

}  // namespace rjmc
