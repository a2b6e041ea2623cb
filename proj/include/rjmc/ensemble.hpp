#pragma once

// Random finite trans-dimensional chains built so that every within-model
// minorization holds by construction:
//   P = sum_k 1_{Y_k} [c_k P_k + (1 - c_k) J],
// where P_k preserves the normalized restriction of pi to model k and J is a
// Metropolis kernel reversible for nu = sum_k (1 - c_k) pi|_{Y_k}.

#include <algorithm>
#include <cmath>
#include <vector>

#include "rjmc/finite_spectral.hpp"
#include "rjmc/rng.hpp"

namespace rjmc {

struct EnsembleOptions {
  int min_models = 2;
  int max_models = 4;
  int max_states = 60;
};

struct GeneratedChain {
  FiniteTransChain chain;
  WithinKernelSet within;
};

namespace detail {

// Metropolis kernel for target `w` (positive) with a random symmetric-support
// proposal restricted to entries where `allowed(i, j)` is true.
inline Matrix random_metropolis(const Vector& w, const std::vector<std::vector<char>>& allowed,
                                RngStream& rng) {
  const Eigen::Index n = w.size();
  Matrix q = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (allowed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) q(i, j) = 0.05 + rng.uniform();
    }
    const double s = q.row(i).sum();
    if (s > 0.0) q.row(i) /= s;
  }
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j || q(i, j) == 0.0) continue;
      const double ratio = (w(j) * q(j, i)) / (w(i) * q(i, j));
      p(i, j) = q(i, j) * std::min(1.0, ratio);
      off += p(i, j);
    }
    p(i, i) = std::max(0.0, 1.0 - off);
  }
  return p;
}

// Non-reversible kernel preserving phi: Sinkhorn-scale a random positive flow
// matrix to have row and column sums phi, then divide rows by phi.
inline Matrix random_flow_kernel(const Vector& phi, RngStream& rng) {
  const Eigen::Index n = phi.size();
  Matrix f(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) f(i, j) = 0.02 + std::pow(rng.uniform(), 3.0);
  for (int it = 0; it < 5000; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) f.row(i) *= phi(i) / f.row(i).sum();
    double err = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = f.col(j).sum();
      err = std::max(err, std::fabs(s - phi(j)));
      f.col(j) *= phi(j) / s;
    }
    if (err < 1e-15) break;
  }
  Matrix p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) p.row(i) = f.row(i) / f.row(i).sum();
  return p;
}

inline Vector random_weights(Eigen::Index n, RngStream& rng) {
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = 0.05 + rng.exponential();
  return w / w.sum();
}

inline std::vector<std::vector<char>> full_pattern(Eigen::Index n) {
  return std::vector<std::vector<char>>(static_cast<std::size_t>(n),
                                        std::vector<char>(static_cast<std::size_t>(n), 1));
}

}  // namespace detail

// One random within-model kernel preserving phi: Metropolis, non-reversible
// flow, or an independence sampler.
inline Matrix random_within_kernel(const Vector& phi, RngStream& rng) {
  const std::uint64_t kind = rng.below(5);
  const Eigen::Index n = phi.size();
  if (kind == 0) return Vector::Ones(n) * phi.transpose();
  if (kind <= 2) return detail::random_metropolis(phi, detail::full_pattern(n), rng);
  return detail::random_flow_kernel(phi, rng);
}

inline GeneratedChain random_decomposable_chain(RngStream& rng, const EnsembleOptions& opt = {}) {
  const int n_models =
      opt.min_models + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_models - opt.min_models + 1)));
  const int per_model_cap = std::max(1, opt.max_states / n_models);
  std::vector<int> model_of;
  for (int k = 0; k < n_models; ++k) {
    const int size = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(per_model_cap, 15))));
    for (int i = 0; i < size; ++i) model_of.push_back(k);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(model_of.size());
  const Vector pi = detail::random_weights(n, rng);
  const auto groups = states_by_model(model_of, n_models);

  GeneratedChain out;
  Vector c(n_models);
  for (int k = 0; k < n_models; ++k) {
    const auto& idx = groups[static_cast<std::size_t>(k)];
    const Vector phi = detail::restricted_normalized(pi, idx);
    out.within.kernels.push_back(random_within_kernel(phi, rng));
    c(k) = 0.05 + 0.9 * rng.uniform();
    out.within.c.push_back(c(k));
  }

  // Model-jump kernel: full proposal, or only between adjacent models so that
  // Gamma_P is tridiagonal.
  const bool adjacent_only = rng.below(2) == 0;
  std::vector<std::vector<char>> pattern = detail::full_pattern(n);
  if (adjacent_only) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        pattern[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            std::abs(model_of[static_cast<std::size_t>(i)] - model_of[static_cast<std::size_t>(j)]) <= 1;
  }
  Vector nu(n);
  for (Eigen::Index z = 0; z < n; ++z) nu(z) = (1.0 - c(model_of[static_cast<std::size_t>(z)])) * pi(z);
  const Matrix jump = detail::random_metropolis(nu, pattern, rng);

  Matrix p = Matrix::Zero(n, n);
  for (int k = 0; k < n_models; ++k) {
    const auto& idx = groups[static_cast<std::size_t>(k)];
    const Matrix& pk = out.within.kernels[static_cast<std::size_t>(k)];
    for (std::size_t a = 0; a < idx.size(); ++a) {
      p.row(idx[a]) = (1.0 - c(k)) * jump.row(idx[a]);
      for (std::size_t b = 0; b < idx.size(); ++b)
        p(idx[a], idx[b]) += c(k) * pk(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  // Remove the last ulp-level drift in row sums.
  for (Eigen::Index i = 0; i < n; ++i) p.row(i) /= p.row(i).sum();
  out.chain = make_chain(std::move(p), std::move(model_of), pi);
  return out;
}

// A pi-preserving Metropolis kernel on all states (a generic second kernel S
// for the decomposition inequality).
inline Matrix random_pi_kernel(const Vector& pi, RngStream& rng) {
  return detail::random_metropolis(pi, detail::full_pattern(pi.size()), rng);
}

// Random chain with n states (no model structure), for covariance oracles.
inline Matrix random_stochastic_matrix(Eigen::Index n, RngStream& rng) {
  Matrix p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) p(i, j) = 0.05 + rng.uniform();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace rjmc
