#pragma once

// Reversible jump sampler for autoregression with Laplace errors and unknown
// order. Data augmentation turns each within-model update into a two-block
// Gibbs sweep (u, then (tau, beta, alpha)); birth/death moves add or drop the
// last AR coefficient.

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rjmc/distributions.hpp"
#include "rjmc/error.hpp"
#include "rjmc/linalg.hpp"
#include "rjmc/rng.hpp"
#include "rjmc/uq.hpp"

namespace rjmc {

// ARData
//
// y_start holds (y_{-k_max+1}, ..., y_0), oldest first. f_k is the prior mass
// on orders 0..k_max.
struct ARData {
  Vector y;
  Matrix x;  // N x p
  Vector y_start;
  int k_max = 0;
  double sigma = 1.0;
  Vector f_k;

  Eigen::Index n_obs() const { return y.size(); }
  Eigen::Index p() const { return x.cols(); }
};

// Value of y_t for 1-based t, reaching into the starting sequence for t <= 0.
inline double ar_lagged_value(const ARData& d, Eigen::Index t) {
  if (t >= 1) return d.y(t - 1);
  return d.y_start(d.k_max - 1 + t);
}

// Row i is (x_i^T, y_{i-1}, ..., y_{i-k}).
inline Matrix build_design(const ARData& d, int k) {
  if (k < 0 || k > d.k_max) throw DomainError("build_design: order " + std::to_string(k) + " out of range");
  const Eigen::Index n = d.n_obs(), p = d.p();
  Matrix w(n, p + k);
  w.leftCols(p) = d.x;
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 1; j <= k; ++j) w(i, p + j - 1) = ar_lagged_value(d, i + 1 - j);
  return w;
}

inline void validate_ar_data(const ARData& d) {
  if (d.n_obs() < 1) throw DomainError("ARData: need at least one observation");
  if (d.x.rows() != d.n_obs()) throw DomainError("ARData: x has wrong row count");
  if (d.k_max < 0) throw DomainError("ARData: k_max must be >= 0");
  if (d.y_start.size() != d.k_max) throw DomainError("ARData: y_start must have k_max entries");
  if (!(d.sigma > 0.0)) throw DomainError("ARData: sigma must be positive");
  if (d.f_k.size() != d.k_max + 1) throw DomainError("ARData: f_K must have k_max + 1 entries");
  if (!(d.f_k.minCoeff() > 0.0)) throw DomainError("ARData: f_K must be positive");
  if (std::fabs(d.f_k.sum() - 1.0) > 1e-9) throw DomainError("ARData: f_K must sum to 1");
  if (!d.y.allFinite() || !d.x.allFinite() || !d.y_start.allFinite()) {
    throw DomainError("ARData: non-finite values");
  }
}

struct P1Report {
  bool ok = true;
  int failing_k = -1;
  std::string reason;
};

// Full column rank of W(k) and y outside its column space, for every k.
inline P1Report check_p1(const ARData& d) {
  P1Report rep;
  for (int k = 0; k <= d.k_max; ++k) {
    const Matrix w = build_design(d, k);
    Eigen::ColPivHouseholderQR<Matrix> qr(w);
    if (qr.rank() != w.cols()) {
      rep = {false, k, "W(" + std::to_string(k) + ") is rank deficient"};
      return rep;
    }
    Matrix wy(w.rows(), w.cols() + 1);
    wy << w, d.y;
    Eigen::ColPivHouseholderQR<Matrix> qr2(wy);
    if (qr2.rank() != wy.cols()) {
      rep = {false, k, "y lies in the column space of W(" + std::to_string(k) + ")"};
      return rep;
    }
  }
  return rep;
}

// Validated data plus the design for the largest order; W(k) is its leading
// p + k columns.
class ARProblem {
 public:
  explicit ARProblem(ARData data) : data_(std::move(data)) {
    validate_ar_data(data_);
    w_full_ = build_design(data_, data_.k_max);
  }
  const ARData& data() const { return data_; }
  auto design(int k) const { return w_full_.leftCols(data_.p() + k); }
  const Matrix& design_full() const { return w_full_; }

 private:
  ARData data_;
  Matrix w_full_;
};

struct ARState {
  int k = 0;
  Vector alpha;
  Vector beta;
  double tau = 1.0;
  Vector u;
};

inline Vector ar_coefficients(const ARState& s) {
  Vector theta(s.beta.size() + s.alpha.size());
  theta << s.beta, s.alpha;
  return theta;
}

inline Vector ar_residuals(const ARProblem& pr, const ARState& s) {
  return pr.data().y - pr.design(s.k) * ar_coefficients(s);
}

inline void check_ar_state(const ARProblem& pr, const ARState& s) {
  const ARData& d = pr.data();
  if (s.k < 0 || s.k > d.k_max) throw DomainError("ARState: order out of range");
  if (s.alpha.size() != s.k) throw DomainError("ARState: alpha length differs from k");
  if (s.beta.size() != d.p()) throw DomainError("ARState: beta length differs from p");
  if (s.u.size() != d.n_obs()) throw DomainError("ARState: u length differs from N");
}

// log pi(k, alpha, beta, tau, u | y) up to a global constant: augmentation
// density, Laplace likelihood, priors and the 1/tau reference factor.
inline double log_unnorm_posterior(const ARProblem& pr, const ARState& s) {
  check_ar_state(pr, s);
  if (!(s.tau > 0.0) || !std::isfinite(s.tau)) return -std::numeric_limits<double>::infinity();
  if (!(s.u.minCoeff() > 0.0)) return -std::numeric_limits<double>::infinity();
  const ARData& d = pr.data();
  const double n = static_cast<double>(d.n_obs());
  const double sqrt_tau = std::sqrt(s.tau), log_tau = std::log(s.tau);
  const Vector r = ar_residuals(pr, s);
  double log_fu = 0.0, abs_sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double ui = s.u(i), ar = std::fabs(r(i));
    log_fu += -0.5 * std::log(8.0 * std::numbers::pi) - 1.5 * std::log(ui) - ui * r(i) * r(i) / (2.0 * s.tau) +
              ar / (2.0 * sqrt_tau) - 1.0 / (8.0 * ui);
    abs_sum += ar;
  }
  const double log_lik = -n * std::log(4.0) - 0.5 * n * log_tau - abs_sum / (2.0 * sqrt_tau);
  const double var = d.sigma * d.sigma * s.tau;
  auto log_normal = [&](const Vector& v) {
    return -0.5 * static_cast<double>(v.size()) * std::log(2.0 * std::numbers::pi * var) - v.squaredNorm() / (2.0 * var);
  };
  double lp = log_fu + log_lik + std::log(d.f_k(s.k)) + log_normal(s.beta) - log_tau;
  if (s.k >= 1) lp += log_normal(s.alpha);
  return lp;
}

// U move: u' | (k, beta, alpha, tau), then (tau', beta', alpha') | u' as one
// block.
inline ARState gibbs_update(const ARProblem& pr, const ARState& s, RngStream& rng) {
  const ARData& d = pr.data();
  const Eigen::Index n = d.n_obs();
  const auto w = pr.design(s.k);
  ARState out;
  out.k = s.k;
  out.u.resize(n);
  {
    const Vector r = ar_residuals(pr, s);
    const double sqrt_tau = std::sqrt(s.tau);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ar = std::max(std::fabs(r(i)), 1e-300);
      out.u(i) = sample_inverse_gaussian(sqrt_tau / (2.0 * ar), 0.25, rng);
    }
  }
  const Eigen::Index dim = w.cols();
  Matrix m = w.transpose() * out.u.asDiagonal() * w;
  m.diagonal().array() += 1.0 / (d.sigma * d.sigma);
  const Vector b = w.transpose() * out.u.cwiseProduct(d.y);
  const Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError("gibbs_update: W^T Q W + I / sigma^2 is not positive definite");
  const Vector mean = llt.solve(b);
  const Vector r_mean = d.y - w * mean;
  const double scale = 0.5 * (r_mean.cwiseAbs2().dot(out.u) + mean.squaredNorm() / (d.sigma * d.sigma));
  out.tau = sample_inverse_gamma(0.5 * static_cast<double>(n), scale, rng);
  Vector zeta(dim);
  for (Eigen::Index j = 0; j < dim; ++j) zeta(j) = rng.normal();
  const Vector theta = mean + std::sqrt(out.tau) * llt.matrixU().solve(zeta);
  out.beta = theta.head(d.p());
  out.alpha = theta.tail(s.k);
  return out;
}

struct ARMoveProbs {
  Vector q_u, q_b, q_d;
};

inline ARMoveProbs move_probs_green(const Vector& f_k) {
  const Eigen::Index kk = f_k.size();
  if (kk < 1 || !(f_k.minCoeff() > 0.0)) throw DomainError("move_probs_green: f_K must be positive");
  ARMoveProbs q;
  q.q_b = Vector::Zero(kk);
  q.q_d = Vector::Zero(kk);
  for (Eigen::Index k = 0; k < kk; ++k) {
    if (k + 1 < kk) q.q_b(k) = std::min(1.0, f_k(k + 1) / f_k(k)) / 3.0;
    if (k > 0) q.q_d(k) = std::min(1.0, f_k(k - 1) / f_k(k)) / 3.0;
  }
  q.q_u = Vector::Ones(kk) - q.q_b - q.q_d;
  return q;
}

struct NormalParams {
  double mean = 0.0;
  double var = 1.0;
};

inline double normal_log_density(double x, const NormalParams& g) { return normal_log_pdf(x, g.mean, g.var); }

// Conditional law of a_{k+1} under the order-(k+1) augmented posterior given
// every other coordinate: precision M / tau with M = W^T Q W + I / sigma^2,
// so a_{k+1} | rest ~ N((b_l - sum_{j != l} M_lj theta_j) / M_ll, tau / M_ll).
inline NormalParams birth_proposal_params(const ARProblem& pr, const ARState& s) {
  const ARData& d = pr.data();
  if (s.k >= d.k_max) throw DomainError("birth_proposal_params: already at k_max");
  const Eigen::Index l = d.p() + s.k;
  const Matrix& wf = pr.design_full();
  const Vector uw = s.u.cwiseProduct(wf.col(l));
  const double m_ll = uw.dot(wf.col(l)) + 1.0 / (d.sigma * d.sigma);
  const double b_l = uw.dot(d.y);
  const Vector theta = ar_coefficients(s);
  const double cross = (uw.transpose() * wf.leftCols(l)).dot(theta);
  return {(b_l - cross) / m_ll, s.tau / m_ll};
}

inline ARState ar_with_birth(const ARState& s, double a) {
  ARState big = s;
  big.k = s.k + 1;
  big.alpha.conservativeResize(s.k + 1);
  big.alpha(s.k) = a;
  return big;
}

inline ARState ar_with_death(const ARState& s) {
  ARState small = s;
  small.k = s.k - 1;
  small.alpha.conservativeResize(s.k - 1);
  return small;
}

// log of the birth acceptance ratio for adding `a` to `s`:
// [pi(k+1) - pi(k)] + [q_D(k+1) - q_B(k)] - g(a).
inline double ar_birth_log_ratio(const ARProblem& pr, const ARState& s, double a, const ARMoveProbs& q) {
  const ARState big = ar_with_birth(s, a);
  const double dpi = log_unnorm_posterior(pr, big) - log_unnorm_posterior(pr, s);
  const double dq = std::log(q.q_d(s.k + 1)) - std::log(q.q_b(s.k));
  const double lg = normal_log_density(a, birth_proposal_params(pr, s));
  return dpi + dq - lg;
}

// log of the death acceptance ratio for dropping the last coefficient of `s`:
// [pi(k-1) - pi(k)] + [q_B(k-1) - q_D(k)] + g(a_k | k-1, ...).
inline double ar_death_log_ratio(const ARProblem& pr, const ARState& s, const ARMoveProbs& q) {
  const ARState small = ar_with_death(s);
  const double dpi = log_unnorm_posterior(pr, small) - log_unnorm_posterior(pr, s);
  const double dq = std::log(q.q_b(s.k - 1)) - std::log(q.q_d(s.k));
  const double lg = normal_log_density(s.alpha(s.k - 1), birth_proposal_params(pr, small));
  return dpi + dq + lg;
}

enum class MoveType { Update, Birth, Death };

struct StepInfo {
  MoveType move = MoveType::Update;
  bool accepted = true;
};

inline ARState rj_step(const ARProblem& pr, const ARState& s, const ARMoveProbs& q, RngStream& rng,
                       StepInfo* info = nullptr) {
  const double pick = rng.uniform();
  StepInfo local;
  ARState out;
  if (pick < q.q_u(s.k)) {
    local.move = MoveType::Update;
    out = gibbs_update(pr, s, rng);
  } else if (pick < q.q_u(s.k) + q.q_b(s.k)) {
    local.move = MoveType::Birth;
    const NormalParams g = birth_proposal_params(pr, s);
    const double a = g.mean + std::sqrt(g.var) * rng.normal();
    const double lr = ar_birth_log_ratio(pr, s, a, q);
    local.accepted = std::log(rng.uniform()) < lr;
    out = local.accepted ? ar_with_birth(s, a) : s;
  } else {
    local.move = MoveType::Death;
    const double lr = ar_death_log_ratio(pr, s, q);
    local.accepted = std::log(rng.uniform()) < lr;
    out = local.accepted ? ar_with_death(s) : s;
  }
  if (info) *info = local;
  return out;
}

inline ARState ar_initial_state(const ARProblem& pr, int k = 0) {
  const ARData& d = pr.data();
  ARState s;
  s.k = k;
  s.alpha = Vector::Zero(k);
  s.beta = Vector::Zero(d.p());
  s.tau = 1.0;
  s.u = Vector::Ones(d.n_obs());
  check_ar_state(pr, s);
  return s;
}

enum class ARFunctions {
  ToyMoments,       // (1{k=1}, a_1 1{k=1}, a_1^2 1{k=1})
  OrderIndicators,  // 1{k = j}, j = 0..k_max
};

inline Vector ar_test_functions(const ARState& s, ARFunctions which, int k_max) {
  if (which == ARFunctions::ToyMoments) {
    Vector f = Vector::Zero(3);
    if (s.k == 1) f << 1.0, s.alpha(0), s.alpha(0) * s.alpha(0);
    return f;
  }
  Vector f = Vector::Zero(k_max + 1);
  f(s.k) = 1.0;
  return f;
}

// Runs burn_in discarded steps and then n recorded steps.
inline Trace run_ar_chain(const ARProblem& pr, ARState state, const ARMoveProbs& q, Eigen::Index n,
                          Eigen::Index burn_in, ARFunctions which, RngStream& rng,
                          std::vector<int>* orders = nullptr) {
  if (n < 1 || burn_in < 0) throw DomainError("run_ar_chain: need n >= 1 and burn_in >= 0");
  const int k_max = pr.data().k_max;
  for (Eigen::Index t = 0; t < burn_in; ++t) state = rj_step(pr, state, q, rng);
  Trace tr;
  tr.meta.sampler_id = "ar";
  tr.meta.seed = rng.seed();
  const Eigen::Index dim = which == ARFunctions::ToyMoments ? 3 : k_max + 1;
  tr.f_values.resize(n, dim);
  if (orders) orders->resize(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t) {
    state = rj_step(pr, state, q, rng);
    tr.f_values.row(t) = ar_test_functions(state, which, k_max).transpose();
    if (orders) (*orders)[static_cast<std::size_t>(t)] = state.k;
  }
  return tr;
}

// Prior masses on 0..k_max.
inline Vector ar_prior_masses(const std::string& kind, int k_max, double poisson_mean = 2.0) {
  Vector f(k_max + 1);
  if (kind == "uniform") {
    f.setConstant(1.0);
  } else if (kind == "poisson") {
    if (!(poisson_mean > 0.0)) throw DomainError("ar_prior_masses: Poisson mean must be positive");
    for (int k = 0; k <= k_max; ++k) f(k) = std::exp(k * std::log(poisson_mean) - std::lgamma(k + 1.0));
  } else {
    throw DomainError("ar_prior_masses: unknown prior '" + kind + "'");
  }
  return f / f.sum();
}

struct ARSimConfig {
  Eigen::Index n_obs = 5;
  Eigen::Index p = 1;
  int k_max = 1;
  int k_true = 0;
  Vector alpha_true;  // length k_true
  Vector beta_true;   // length p; empty means all ones
  double tau_true = 1.0;
  double sigma = 1.0;
  std::string prior = "uniform";
  double poisson_mean = 2.0;
  double x_scale = 1.0;  // predictors iid N(0, x_scale^2)
};

// Laplace error with density exp(-|e|/2)/4: twice a difference of unit
// exponentials.
inline double sample_laplace_error(RngStream& rng) { return 2.0 * (rng.exponential() - rng.exponential()); }

inline ARData simulate_ar_dataset(const ARSimConfig& c, RngStream& rng) {
  if (!(c.tau_true > 0.0)) throw DomainError("simulate_ar_dataset: tau_true must be positive");
  if (c.k_true < 0 || c.k_true > c.k_max) throw DomainError("simulate_ar_dataset: need 0 <= k_true <= k_max");
  if (c.alpha_true.size() != c.k_true) throw DomainError("simulate_ar_dataset: alpha_true must have k_true entries");
  if (c.n_obs < 1 || c.p < 0) throw DomainError("simulate_ar_dataset: bad dimensions");
  const Vector beta = c.beta_true.size() == 0 ? Vector(Vector::Ones(c.p)) : c.beta_true;
  if (beta.size() != c.p) throw DomainError("simulate_ar_dataset: beta_true must have p entries");
  const double sd = std::sqrt(c.tau_true);
  for (int attempt = 0; attempt < 10; ++attempt) {
    ARData d;
    d.k_max = c.k_max;
    d.sigma = c.sigma;
    d.f_k = ar_prior_masses(c.prior, c.k_max, c.poisson_mean);
    d.y_start.resize(c.k_max);
    for (int j = 0; j < c.k_max; ++j) d.y_start(j) = sd * sample_laplace_error(rng);
    d.x.resize(c.n_obs, c.p);
    for (Eigen::Index i = 0; i < c.n_obs; ++i)
      for (Eigen::Index j = 0; j < c.p; ++j) d.x(i, j) = c.x_scale * rng.normal();
    d.y.resize(c.n_obs);
    for (Eigen::Index i = 0; i < c.n_obs; ++i) {
      double v = d.x.row(i).dot(beta) + sd * sample_laplace_error(rng);
      for (int j = 1; j <= c.k_true; ++j) v += c.alpha_true(j - 1) * ar_lagged_value(d, i + 1 - j);
      d.y(i) = v;
    }
    if (check_p1(d).ok) return d;
  }
  throw GenerationError("simulate_ar_dataset: condition (P1) failed after 10 draws of x");
}

// Exact posterior summaries for the toy configuration k_max = p = 1.
struct ToyTruth {
  double p0 = 0.0;
  double p1 = 0.0;
  double mean_a = 0.0;
  double sd_a = 0.0;
  double rel_error = 0.0;  // largest relative quadrature error estimate

  Vector as_vector() const { return (Vector(4) << p0, p1, mean_a, sd_a).finished(); }
};

namespace detail {

// Integral over [lo, hi] of s^m exp(-(a s + b)); the exponent is the
// piecewise-linear -g(s) restricted to one piece.
inline double power_exp_piece(int m, double a, double b, double lo, double hi) {
  static const std::vector<std::pair<double, double>> gl = [] {
    // 30-point Gauss-Legendre on [-1, 1] via Newton on P_n.
    const int n = 30;
    std::vector<std::pair<double, double>> nodes;
    for (int i = 1; i <= n; ++i) {
      double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::fabs(dx) < 1e-16) break;
      }
      nodes.emplace_back(x, 2.0 / ((1.0 - x * x) * dp * dp));
    }
    return nodes;
  }();
  const double len = hi - lo;
  if (len <= 0.0) return 0.0;
  if (std::fabs(a) * len <= 20.0) {
    double s = 0.0;
    const double c = 0.5 * (hi + lo), h = 0.5 * len;
    for (const auto& [x, w] : gl) {
      const double t = c + h * x;
      s += w * std::pow(t, m) * std::exp(-(a * t + b));
    }
    return s * h;
  }
  // Antiderivative -exp(-(a s + b)) sum_j m!/(m-j)! s^{m-j} / a^{j+1}; the
  // two endpoint values differ by more than e^20, so no cancellation.
  auto anti = [&](double s) {
    double sum = 0.0, coef = 1.0;
    for (int j = 0; j <= m; ++j) {
      sum += coef * std::pow(s, m - j) / std::pow(a, j + 1);
      coef *= (m - j);
    }
    return -std::exp(-(a * s + b)) * sum;
  };
  return anti(hi) - anti(lo);
}

// Integral over s > 0 of s^m exp(-0.5 sum_i |y_i s - c_i|).
inline double toy_inner_integral(int m, const Vector& y, const Vector& c) {
  const Eigen::Index n = y.size();
  std::vector<double> cuts{0.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) != 0.0) {
      const double bp = c(i) / y(i);
      if (bp > 0.0) cuts.push_back(bp);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  auto slope_intercept = [&](double mid, double& a, double& b) {
    a = 0.0;
    b = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sgn = (y(i) * mid - c(i)) >= 0.0 ? 1.0 : -1.0;
      a += 0.5 * sgn * y(i);
      b -= 0.5 * sgn * c(i);
    }
  };
  double total = 0.0, a = 0.0, b = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    if (cuts[j + 1] <= cuts[j]) continue;
    slope_intercept(0.5 * (cuts[j] + cuts[j + 1]), a, b);
    total += power_exp_piece(m, a, b, cuts[j], cuts[j + 1]);
  }
  const double lo = cuts.back();
  slope_intercept(lo + 1.0, a, b);
  if (!(a > 0.0)) throw NumericError("toy_quadrature_oracle: posterior is improper (all y = 0)");
  // Tail: exp(-(a lo + b)) sum_j m!/(m-j)! lo^{m-j} / a^{j+1}.
  double sum = 0.0, coef = 1.0;
  for (int j = 0; j <= m; ++j) {
    sum += coef * std::pow(lo, m - j) / std::pow(a, j + 1);
    coef *= (m - j);
  }
  total += std::exp(-(a * lo + b)) * sum;
  return total;
}

}  // namespace detail

// Integrates the un-augmented posterior per model. With s = tau^{-1/2} and
// phi = s (beta, alpha), model k contributes
//   f_K(k) 4^{-N} (2 pi sigma^2)^{-(1+k)/2} 2 int dphi e^{-|phi|^2/(2 sigma^2)}
//     int_0^inf s^{N-1} exp(-0.5 sum_i |y_i s - w_i^T phi|) ds,
// and a = phi_a / s for the moments of the AR coefficient.
inline ToyTruth toy_quadrature_oracle(const ARData& d, double tol = 1e-10) {
  validate_ar_data(d);
  if (d.k_max != 1 || d.p() != 1) throw DomainError("toy_quadrature_oracle: needs k_max = p = 1");
  if (d.n_obs() > 5) throw DomainError("toy_quadrature_oracle: needs N <= 5");
  const int n = static_cast<int>(d.n_obs());
  const Matrix w1 = build_design(d, 1);
  const double s2 = d.sigma * d.sigma;
  // The Gaussian factor exp(-|phi|^2 / (2 sigma^2)) is below e^-98 past
  // 14 sigma, which swamps the polynomial growth of the inner integral.
  const double lim = 14.0 * d.sigma;
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double worst = 0.0;
  auto track = [&](double value, double err) {
    if (value != 0.0) worst = std::max(worst, std::fabs(err / value));
    return value;
  };

  // Model 0: phi = phi_beta only.
  auto f0 = [&](double pb) {
    const Vector c = w1.col(0) * pb;
    return std::exp(-pb * pb / (2.0 * s2)) * detail::toy_inner_integral(n - 1, d.y, c);
  };
  double err = 0.0;
  const double i0 = track(GK::integrate(f0, -lim, lim, 25, tol, &err), err);

  // Model 1: outer over phi_a, inner over phi_beta; m = N-1-j carries a^j.
  auto model1 = [&](int j) {
    auto outer = [&](double pa) {
      auto inner = [&](double pb) {
        const Vector c = w1.col(0) * pb + w1.col(1) * pa;
        return std::exp(-(pa * pa + pb * pb) / (2.0 * s2)) * detail::toy_inner_integral(n - 1 - j, d.y, c);
      };
      double e = 0.0;
      const double v = GK::integrate(inner, -lim, lim, 25, tol, &e);
      return std::pow(pa, j) * v;
    };
    double e = 0.0;
    const double v = GK::integrate(outer, -lim, lim, 25, tol, &e);
    return track(v, e);
  };
  const double i1 = model1(0), m1 = model1(1), m2 = model1(2);

  const double common = std::pow(4.0, -n) * 2.0;
  const double z0 = d.f_k(0) * common * std::pow(2.0 * std::numbers::pi * s2, -0.5) * i0;
  const double z1 = d.f_k(1) * common * std::pow(2.0 * std::numbers::pi * s2, -1.0) * i1;
  ToyTruth t;
  t.p1 = z1 / (z0 + z1);
  t.p0 = 1.0 - t.p1;
  t.mean_a = m1 / i1;
  const double var = m2 / i1 - t.mean_a * t.mean_a;
  if (!(var > 0.0)) throw NumericError("toy_quadrature_oracle: non-positive conditional variance");
  t.sd_a = std::sqrt(var);
  t.rel_error = worst;
  if (!(worst <= 1e-6) || !std::isfinite(t.p1)) {
    throw NumericError("toy_quadrature_oracle: quadrature did not converge (relative error " + std::to_string(worst) +
                       ")");
  }
  return t;
}

}  // namespace rjmc
