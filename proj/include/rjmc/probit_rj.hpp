#pragma once

// Reversible jump sampler for probit regression with spike-and-slab variable
// selection. The within-model move is Albert-Chib data augmentation; births
// propose the new coefficient from a Laplace approximation of its conditional.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rjmc/distributions.hpp"
#include "rjmc/error.hpp"
#include "rjmc/linalg.hpp"
#include "rjmc/rng.hpp"
#include "rjmc/uq.hpp"

namespace rjmc {

struct ProbitData {
  Vector y;  // 0/1
  Matrix x;  // N x r
  double sigma = 1.0;
  double p_slab = 0.5;

  Eigen::Index n_obs() const { return y.size(); }
  Eigen::Index r() const { return x.cols(); }
};

inline void validate_probit_data(const ProbitData& d) {
  if (d.r() < 1) throw DomainError("ProbitData: need at least one predictor");
  if (d.x.rows() != d.n_obs()) throw DomainError("ProbitData: x has wrong row count");
  if (!(d.sigma > 0.0)) throw DomainError("ProbitData: sigma must be positive");
  if (!(d.p_slab > 0.0 && d.p_slab < 1.0)) throw DomainError("ProbitData: p_slab must lie in (0,1)");
  for (Eigen::Index i = 0; i < d.n_obs(); ++i)
    if (d.y(i) != 0.0 && d.y(i) != 1.0) throw DomainError("ProbitData: responses must be 0 or 1");
  if (!d.x.allFinite()) throw DomainError("ProbitData: non-finite predictors");
}

// k(j) = 1 when predictor j is included; z = (intercept, coefficients of the
// included predictors in increasing index order).
struct ProbitState {
  std::vector<int> k;
  Vector z;

  int size() const { return static_cast<int>(std::count(k.begin(), k.end(), 1)); }
};

inline std::vector<int> included_indices(const std::vector<int>& k) {
  std::vector<int> out;
  for (std::size_t j = 0; j < k.size(); ++j)
    if (k[j] == 1) out.push_back(static_cast<int>(j));
  return out;
}

inline std::vector<int> excluded_indices(const std::vector<int>& k) {
  std::vector<int> out;
  for (std::size_t j = 0; j < k.size(); ++j)
    if (k[j] == 0) out.push_back(static_cast<int>(j));
  return out;
}

// Position of predictor j inside z (1-based because of the intercept) once j
// is included.
inline Eigen::Index coefficient_slot(const std::vector<int>& k, int j) {
  Eigen::Index slot = 1;
  for (int l = 0; l < j; ++l) slot += k[static_cast<std::size_t>(l)];
  return slot;
}

// Validated data with the intercept-augmented design X* = (1, x) and its
// Gram matrix cached; X(k) and X(k)^T X(k) are column/row selections.
class ProbitProblem {
 public:
  explicit ProbitProblem(ProbitData data) : data_(std::move(data)) {
    validate_probit_data(data_);
    xs_.resize(data_.n_obs(), data_.r() + 1);
    xs_.col(0).setOnes();
    xs_.rightCols(data_.r()) = data_.x;
    gram_ = xs_.transpose() * xs_;
    sign_ = 2.0 * data_.y.array() - 1.0;
  }
  const ProbitData& data() const { return data_; }
  const Matrix& design_star() const { return xs_; }
  const Matrix& gram() const { return gram_; }
  const Vector& sign() const { return sign_; }

  // Columns of X* used by model k: 0 for the intercept, j + 1 for predictor j.
  std::vector<Eigen::Index> columns(const std::vector<int>& k) const {
    std::vector<Eigen::Index> cols{0};
    for (int j : included_indices(k)) cols.push_back(j + 1);
    return cols;
  }
  Matrix design(const std::vector<int>& k) const { return xs_(Eigen::all, columns(k)); }

  // Linear predictor x_i*(k)^T z for every i.
  Vector linear_predictor(const ProbitState& s) const {
    Vector mu = Vector::Constant(data_.n_obs(), s.z(0));
    Eigen::Index slot = 1;
    for (std::size_t j = 0; j < s.k.size(); ++j)
      if (s.k[j] == 1) mu.noalias() += s.z(slot++) * xs_.col(static_cast<Eigen::Index>(j) + 1);
    return mu;
  }

 private:
  ProbitData data_;
  Matrix xs_;
  Matrix gram_;
  Vector sign_;
};

inline void check_probit_state(const ProbitProblem& pr, const ProbitState& s) {
  if (static_cast<Eigen::Index>(s.k.size()) != pr.data().r()) throw DomainError("ProbitState: k has wrong length");
  for (int v : s.k)
    if (v != 0 && v != 1) throw DomainError("ProbitState: k must be binary");
  if (s.z.size() != s.size() + 1) throw DomainError("ProbitState: z length must be 1 + |I_k|");
}

// sum_i log F(s_i mu_i) with s_i = 2 y_i - 1.
inline double probit_log_likelihood(const Vector& mu, const Vector& sign) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) ll += log_norm_cdf(sign(i) * mu(i));
  return ll;
}

inline double log_unnorm_posterior(const ProbitProblem& pr, const ProbitState& s) {
  check_probit_state(pr, s);
  const ProbitData& d = pr.data();
  const double size = static_cast<double>(s.size());
  const double log_norm = kLogSqrt2Pi + std::log(d.sigma);
  return size * std::log(d.p_slab) - (size + 1.0) * log_norm - s.z.squaredNorm() / (2.0 * d.sigma * d.sigma) +
         probit_log_likelihood(pr.linear_predictor(s), pr.sign());
}

inline ProbitState probit_empty_state(const ProbitProblem& pr) {
  ProbitState s;
  s.k.assign(static_cast<std::size_t>(pr.data().r()), 0);
  s.z = Vector::Zero(1);
  return s;
}

// U move: latent u_i ~ N(mu_i, 1) truncated to the side matching y_i, then
// z' ~ N(M^{-1} X^T u, M^{-1}) with M = X^T X + I / sigma^2.
inline ProbitState da_update(const ProbitProblem& pr, const ProbitState& s, RngStream& rng) {
  check_probit_state(pr, s);
  const ProbitData& d = pr.data();
  const Vector mu = pr.linear_predictor(s);
  Vector u(d.n_obs());
  for (Eigen::Index i = 0; i < d.n_obs(); ++i)
    u(i) = sample_truncated_normal_onesided(mu(i), 1.0, d.y(i) == 1.0, rng);
  const std::vector<Eigen::Index> cols = pr.columns(s.k);
  Matrix m = pr.gram()(cols, cols);
  m.diagonal().array() += 1.0 / (d.sigma * d.sigma);
  const Vector b = pr.design_star()(Eigen::all, cols).transpose() * u;
  const Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError("da_update: X^T X + I / sigma^2 is not positive definite");
  Vector zeta(static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index j = 0; j < zeta.size(); ++j) zeta(j) = rng.normal();
  ProbitState out;
  out.k = s.k;
  out.z = llt.solve(b) + llt.matrixU().solve(zeta);
  return out;
}

struct Concave1D {
  double value = 0.0;
  double grad = 0.0;
  double hess = 0.0;
};

struct ModeResult {
  double mode = 0.0;
  double variance = 1.0;
  int iterations = 0;
  bool used_bisection = false;
};

namespace detail {

// Maximizes a strictly concave C^2 function. Newton with step halving; if
// that has not converged after max_iter steps, bisection on the gradient.
inline ModeResult maximize_concave_1d(const std::function<Concave1D(double)>& f, double x0 = 0.0,
                                      double grad_tol = 1e-10, int max_iter = 50) {
  ModeResult res;
  double x = x0;
  Concave1D cur = f(x);
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    if (std::fabs(cur.grad) < grad_tol) break;
    if (!(cur.hess < 0.0) || !std::isfinite(cur.hess)) break;
    double step = -cur.grad / cur.hess;
    Concave1D next = f(x + step);
    int halvings = 0;
    while (!(next.value >= cur.value) && halvings < 60) {
      step *= 0.5;
      next = f(x + step);
      ++halvings;
    }
    if (x + step == x) break;
    x += step;
    cur = next;
  }
  if (!(std::fabs(cur.grad) < grad_tol)) {
    // Bracket the root of the decreasing gradient, then bisect.
    double lo = x, hi = x, width = 1.0;
    if (cur.grad > 0.0) {
      for (int i = 0; i < 200 && f(hi).grad > 0.0; ++i, width *= 2.0) hi = x + width;
    } else {
      for (int i = 0; i < 200 && f(lo).grad < 0.0; ++i, width *= 2.0) lo = x - width;
    }
    if (!(f(lo).grad >= 0.0 && f(hi).grad <= 0.0)) throw SolverError("maximize_concave_1d: gradient has no root");
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::fabs(lo)); ++i) {
      const double mid = 0.5 * (lo + hi);
      (f(mid).grad > 0.0 ? lo : hi) = mid;
    }
    x = 0.5 * (lo + hi);
    cur = f(x);
    res.used_bisection = true;
  }
  if (!(cur.hess < 0.0)) throw NumericError("maximize_concave_1d: curvature at the mode is not negative");
  res.mode = x;
  res.variance = -1.0 / cur.hess;
  return res;
}

}  // namespace detail

// Laplace approximation of b -> pi(k_new, z_b | y), where z_b is z_partial
// with b inserted at predictor j's slot. z_partial holds the coefficients of
// k_new without j.
inline ModeResult mode_and_curvature(const ProbitProblem& pr, const std::vector<int>& k_new, const Vector& z_partial,
                                     int j) {
  const ProbitData& d = pr.data();
  if (j < 0 || j >= d.r() || k_new[static_cast<std::size_t>(j)] != 1) {
    throw DomainError("mode_and_curvature: j must be included in k_new");
  }
  ProbitState base;
  base.k = k_new;
  base.k[static_cast<std::size_t>(j)] = 0;
  base.z = z_partial;
  check_probit_state(pr, base);
  const Vector offset = pr.linear_predictor(base);
  const auto xj = pr.design_star().col(j + 1);
  const Vector& sgn = pr.sign();
  const double prec = 1.0 / (d.sigma * d.sigma);
  auto f = [&](double b) {
    Concave1D c;
    c.value = -0.5 * b * b * prec;
    c.grad = -b * prec;
    c.hess = -prec;
    for (Eigen::Index i = 0; i < offset.size(); ++i) {
      const double t = sgn(i) * (offset(i) + xj(i) * b);
      const double lam = inverse_mills(t);
      c.value += log_norm_cdf(t);
      c.grad += sgn(i) * xj(i) * lam;
      c.hess -= xj(i) * xj(i) * lam * (t + lam);
    }
    return c;
  };
  return detail::maximize_concave_1d(f, 0.0);
}

struct ProbitMoveProbs {
  double q_u = 1.0, q_b = 0.0, q_d = 0.0;
};

inline ProbitMoveProbs move_probs_spike_slab(double p, int r, int size) {
  if (size < 0 || size > r) throw DomainError("move_probs_spike_slab: size out of range");
  ProbitMoveProbs q;
  const double pr = p * (r - size), ps = p * (r - size + 1);
  q.q_b = size < r ? std::min(1.0, pr / (size + 1.0)) / 3.0 : 0.0;
  q.q_d = size > 0 ? std::min(1.0, size / ps) / 3.0 : 0.0;
  q.q_u = 1.0 - q.q_b - q.q_d;
  return q;
}

inline ProbitState probit_with_birth(const ProbitState& s, int j, double b) {
  ProbitState out;
  out.k = s.k;
  out.k[static_cast<std::size_t>(j)] = 1;
  const Eigen::Index slot = coefficient_slot(s.k, j);
  out.z.resize(s.z.size() + 1);
  out.z << s.z.head(slot), b, s.z.tail(s.z.size() - slot);
  return out;
}

inline ProbitState probit_with_death(const ProbitState& s, int j, double* removed = nullptr) {
  ProbitState out;
  out.k = s.k;
  out.k[static_cast<std::size_t>(j)] = 0;
  const Eigen::Index slot = coefficient_slot(s.k, j);
  if (removed) *removed = s.z(slot);
  out.z.resize(s.z.size() - 1);
  out.z << s.z.head(slot), s.z.tail(s.z.size() - slot - 1);
  return out;
}

// Selection terms log q_D(k') - log(|I_k|+1) and log q_B(k) - log(r - |I_k|)
// for the pair (k, k') with |I_k'| = |I_k| + 1.
inline void probit_pair_terms(const ProbitData& d, int small_size, double& big_side, double& small_side) {
  const int r = static_cast<int>(d.r());
  big_side = std::log(move_probs_spike_slab(d.p_slab, r, small_size + 1).q_d) - std::log(small_size + 1.0);
  small_side = std::log(move_probs_spike_slab(d.p_slab, r, small_size).q_b) - std::log(double(r - small_size));
}

// log of the birth ratio for inserting b at predictor j into s.
inline double probit_birth_log_ratio(const ProbitProblem& pr, const ProbitState& s, int j, double b) {
  const ProbitState big = probit_with_birth(s, j, b);
  const double dpi = log_unnorm_posterior(pr, big) - log_unnorm_posterior(pr, s);
  double big_side = 0.0, small_side = 0.0;
  probit_pair_terms(pr.data(), s.size(), big_side, small_side);
  const ModeResult g = mode_and_curvature(pr, big.k, s.z, j);
  const double lg = normal_log_pdf(b, g.mode, g.variance);
  return dpi + (big_side - small_side) - lg;
}

// log of the death ratio for removing predictor j from s.
inline double probit_death_log_ratio(const ProbitProblem& pr, const ProbitState& s, int j) {
  double b = 0.0;
  const ProbitState small = probit_with_death(s, j, &b);
  const double dpi = log_unnorm_posterior(pr, small) - log_unnorm_posterior(pr, s);
  double big_side = 0.0, small_side = 0.0;
  probit_pair_terms(pr.data(), small.size(), big_side, small_side);
  const ModeResult g = mode_and_curvature(pr, s.k, small.z, j);
  const double lg = normal_log_pdf(b, g.mode, g.variance);
  return dpi + (small_side - big_side) + lg;
}

struct ProbitStepInfo {
  int move = 0;  // 0 update, 1 birth, 2 death
  bool accepted = true;
  int index = -1;
};

inline ProbitState rj_step(const ProbitProblem& pr, const ProbitState& s, RngStream& rng,
                           ProbitStepInfo* info = nullptr) {
  const ProbitData& d = pr.data();
  const int size = s.size();
  const ProbitMoveProbs q = move_probs_spike_slab(d.p_slab, static_cast<int>(d.r()), size);
  const double pick = rng.uniform();
  ProbitStepInfo local;
  ProbitState out;
  if (pick < q.q_u) {
    out = da_update(pr, s, rng);
  } else if (pick < q.q_u + q.q_b) {
    local.move = 1;
    const std::vector<int> ex = excluded_indices(s.k);
    const int j = ex[rng.below(ex.size())];
    ProbitState big = s;
    big.k[static_cast<std::size_t>(j)] = 1;
    const ModeResult g = mode_and_curvature(pr, big.k, s.z, j);
    const double b = g.mode + std::sqrt(g.variance) * rng.normal();
    const double lr = probit_birth_log_ratio(pr, s, j, b);
    local.index = j;
    local.accepted = std::log(rng.uniform()) < lr;
    out = local.accepted ? probit_with_birth(s, j, b) : s;
  } else {
    local.move = 2;
    const std::vector<int> in = included_indices(s.k);
    const int j = in[rng.below(in.size())];
    const double lr = probit_death_log_ratio(pr, s, j);
    local.index = j;
    local.accepted = std::log(rng.uniform()) < lr;
    out = local.accepted ? probit_with_death(s, j) : s;
  }
  if (info) *info = local;
  return out;
}

// Burn-in steps discarded, then n rows of inclusion indicators 1{k_j = 1}.
inline Trace run_probit_chain(const ProbitProblem& pr, ProbitState state, Eigen::Index n, Eigen::Index burn_in,
                              RngStream& rng) {
  if (n < 1 || burn_in < 0) throw DomainError("run_probit_chain: need n >= 1 and burn_in >= 0");
  for (Eigen::Index t = 0; t < burn_in; ++t) state = rj_step(pr, state, rng);
  Trace tr;
  tr.meta.sampler_id = "probit";
  tr.meta.seed = rng.seed();
  tr.f_values.resize(n, pr.data().r());
  for (Eigen::Index t = 0; t < n; ++t) {
    state = rj_step(pr, state, rng);
    for (std::size_t j = 0; j < state.k.size(); ++j) tr.f_values(t, static_cast<Eigen::Index>(j)) = state.k[j];
  }
  return tr;
}

// Synthetic data: x iid N(0,1), y_i = 1{alpha + x_i^T beta + e_i > 0}.
inline ProbitData simulate_probit_dataset(Eigen::Index n, double alpha, const Vector& beta, RngStream& rng,
                                          double sigma = 1.0, double p_slab = 0.5) {
  if (n < 0 || beta.size() < 1) throw DomainError("simulate_probit_dataset: need n >= 0 and r >= 1");
  ProbitData d;
  d.sigma = sigma;
  d.p_slab = p_slab;
  d.x.resize(n, beta.size());
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < beta.size(); ++j) d.x(i, j) = rng.normal();
    d.y(i) = (alpha + d.x.row(i).dot(beta) + rng.normal() > 0.0) ? 1.0 : 0.0;
  }
  return d;
}

// Centers every column and scales it to unit sample standard deviation.
// Constant columns are only centered.
inline void standardize_columns(Matrix& x) {
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    x.col(j).array() -= mean;
    if (x.rows() > 1) {
      const double sd = std::sqrt(x.col(j).squaredNorm() / (n - 1.0));
      if (sd > 0.0) x.col(j) /= sd;
    }
  }
}

// Comma-separated rows of features followed by a 0/1 label. expected_cols is
// the feature count (0 accepts whatever the first row has).
inline ProbitData load_probit_csv(std::istream& in, bool standardize = true, Eigen::Index expected_cols = 0) {
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = expected_cols > 0 ? static_cast<std::size_t>(expected_cols) + 1 : 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ParseError("load_probit_csv: non-numeric field '" + cell + "'", lineno);
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos) {
        throw ParseError("load_probit_csv: non-numeric field '" + cell + "'", lineno);
      }
      vals.push_back(v);
    }
    if (width == 0) width = vals.size();
    if (vals.size() != width || width < 2) {
      throw ParseError("load_probit_csv: expected " + std::to_string(width) + " fields, found " +
                           std::to_string(vals.size()),
                       lineno);
    }
    const double label = vals.back();
    if (label != 0.0 && label != 1.0) throw ParseError("load_probit_csv: label must be 0 or 1", lineno);
    vals.pop_back();
    labels.push_back(label);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ParseError("load_probit_csv: no data rows", lineno + 1);
  ProbitData d;
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  d.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.y(static_cast<Eigen::Index>(i)) = labels[i];
    for (std::size_t j = 0; j + 1 < width; ++j)
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  if (standardize) standardize_columns(d.x);
  return d;
}

inline ProbitData load_probit_csv(const std::string& path, bool standardize = true, Eigen::Index expected_cols = 0) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  return load_probit_csv(in, standardize, expected_cols);
}

// The spam corpus: 4601 rows of 57 features plus the label.
inline ProbitData load_spambase(const std::string& path, bool standardize = true) {
  ProbitData d = load_probit_csv(path, standardize, 57);
  if (d.n_obs() != 4601) {
    throw ParseError("load_spambase: expected 4601 rows, found " + std::to_string(d.n_obs()),
                     static_cast<std::size_t>(d.n_obs()) + 1);
  }
  return d;
}

}  // namespace rjmc
