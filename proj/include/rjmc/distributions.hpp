#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "rjmc/error.hpp"
#include "rjmc/linalg.hpp"
#include "rjmc/rng.hpp"

namespace rjmc {

// ---------------------------------------------------------------------------
// Standard normal
// ---------------------------------------------------------------------------

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x - kLogSqrt2Pi);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

// log density of N(mean, var) at x.
inline double normal_log_pdf(double x, double mean, double var) {
  const double z = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(var) - z * z / (2.0 * var);
}

// Mills ratio (1 - Phi(x)) / phi(x) for x >= 0. The continued fraction takes
// over where erfc / pdf would both underflow.
inline double mills_ratio(double x) {
  if (x < 8.0) return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0) / norm_pdf(x);
  double frac = 0.0;
  for (int k = 80; k >= 1; --k) frac = k / (x + frac);
  return 1.0 / (x + frac);
}

// log Phi(x), finite for every finite x.
inline double log_norm_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0));
  if (x > -8.0) return std::log(norm_cdf(x));
  return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio(-x));
}

// phi(x) / Phi(x), the derivative of log Phi.
inline double inverse_mills(double x) {
  if (x < 0.0) return 1.0 / mills_ratio(-x);
  return norm_pdf(x) / norm_cdf(x);
}

namespace detail {

// Wichura's AS241 (PPND16), about 1e-16 relative accuracy.
inline double ppnd16(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                0.24178072517745061177) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) * r + 0.14810397642748007459) * r +
              0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) * r + 0.026532189526576123093) * r +
              0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
              0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

}  // namespace detail

// Inverse of norm_cdf on (0, 1): rational approximation plus one Newton step,
// run on the lower tail so the residual keeps full relative precision.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("norm_quantile: p must lie in (0, 1)");
  if (p > 0.5) return -norm_quantile(1.0 - p);
  double x = detail::ppnd16(p);
  const double pdf = norm_pdf(x);
  if (pdf > 0.0) x -= (norm_cdf(x) - p) / pdf;
  return x;
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

// Inverse Gaussian IG(mu, lambda), density
//   sqrt(lambda / (2 pi u^3)) exp(-lambda (u - mu)^2 / (2 mu^2 u)).
// Chi-square transformation with root selection; the smaller root is written
// so that it stays finite (tending to lambda / chi2) as mu grows without bound.
inline double sample_inverse_gaussian(double mu, double lambda, RngStream& rng) {
  if (!(mu > 0.0) || !(lambda > 0.0)) {
    throw DomainError("sample_inverse_gaussian: mu and lambda must be positive");
  }
  const double z = rng.normal();
  const double y = z * z;
  const double c = y / (2.0 * lambda);
  const double inv_mu = 1.0 / mu;
  double x = 1.0 / (inv_mu + c + std::sqrt(c * (c + 2.0 * inv_mu)));
  if (!(x > 0.0)) x = std::numeric_limits<double>::min();
  const double accept = 1.0 / (1.0 + x * inv_mu);
  if (rng.uniform() <= accept) return x;
  const double other = (mu / x) * mu;
  return std::isfinite(other) ? other : std::numeric_limits<double>::max();
}

// N(mean, sd^2) restricted to (0, inf) when positive_side, else (-inf, 0).
// Inverse CDF unless the truncation point sits more than 4 sd beyond the
// mean, where an exponential-proposal rejection sampler is exact and fast.
inline double sample_truncated_normal_onesided(double mean, double sd, bool positive_side,
                                               RngStream& rng) {
  if (!(sd > 0.0)) throw DomainError("sample_truncated_normal_onesided: sd must be positive");
  // Work with the positive side: X = sign * Z * sd + mean, Z > a.
  const double m = positive_side ? mean : -mean;
  const double a = -m / sd;
  double z;
  if (a <= 4.0) {
    const double tail = norm_cdf(-a);  // P(Z > a)
    double u = rng.uniform() * tail;
    z = -norm_quantile(u);
    if (z <= a) z = std::nextafter(a, std::numeric_limits<double>::infinity());
  } else {
    const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      z = a + rng.exponential() / rate;
      const double d = z - rate;
      if (rng.uniform() <= std::exp(-0.5 * d * d)) break;
    }
  }
  const double x = m + sd * z;
  const double out = positive_side ? x : -x;
  // Round-off at the boundary must not leak onto the wrong side.
  if (positive_side && !(out > 0.0)) return std::numeric_limits<double>::denorm_min();
  if (!positive_side && !(out < 0.0)) return -std::numeric_limits<double>::denorm_min();
  return out;
}

// Inverse gamma: 1/X ~ Gamma(shape, rate = scale); density
// proportional to x^(-shape-1) exp(-scale / x).
inline double sample_inverse_gamma(double shape, double scale, RngStream& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw DomainError("sample_inverse_gamma: shape and scale must be positive");
  }
  return scale / rng.gamma(shape);
}

struct MvnParams {
  Vector mean;
  Matrix covariance;
};

// Lower factor of a validated MVN covariance.
inline Matrix mvn_factor(const MvnParams& params) {
  if (params.covariance.rows() != params.mean.size() ||
      params.covariance.cols() != params.mean.size()) {
    throw DomainError("mvn: covariance dimension does not match mean");
  }
  if (!is_symmetric(params.covariance)) throw DomainError("mvn: covariance is not symmetric");
  return cholesky_lower(params.covariance);
}

// mean + L * zeta with L the lower factor of the covariance.
inline Vector sample_mvn_factored(const Vector& mean, const Matrix& lower, RngStream& rng) {
  Vector zeta(mean.size());
  for (Eigen::Index i = 0; i < zeta.size(); ++i) zeta(i) = rng.normal();
  return mean + lower.triangularView<Eigen::Lower>() * zeta;
}

inline Vector sample_mvn(const MvnParams& params, RngStream& rng) {
  return sample_mvn_factored(params.mean, mvn_factor(params), rng);
}

}  // namespace rjmc
