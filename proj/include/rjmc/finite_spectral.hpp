#pragma once

// Dense linear-algebra checks of the decomposition bounds on finite
// trans-dimensional chains: stationary distributions, L^2_0 operator norms,
// model reachability, the model-level jump matrix and the quantitative bound.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rjmc/error.hpp"
#include "rjmc/linalg.hpp"
#include "rjmc/rng.hpp"

namespace rjmc {

// FiniteTransChain
//
// Explicit stochastic matrix over enumerated states, partitioned into models
// by `model_of` (values 0..n_models-1).
struct FiniteTransChain {
  Matrix transition;
  std::vector<int> model_of;
  Vector stationary;
  int n_models = 0;

  Eigen::Index n_states() const { return transition.rows(); }
};

// Per-model within kernels P_k (indexed in increasing global state order)
// and minorization constants c_k with P((k,z), {k} x A) >= c_k P_k(z, A).
struct WithinKernelSet {
  std::vector<Matrix> kernels;
  std::vector<double> c;
};

inline std::vector<std::vector<Eigen::Index>> states_by_model(const std::vector<int>& model_of,
                                                              int n_models) {
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(n_models));
  for (std::size_t z = 0; z < model_of.size(); ++z) {
    out[static_cast<std::size_t>(model_of[z])].push_back(static_cast<Eigen::Index>(z));
  }
  return out;
}

inline void check_row_stochastic(const Matrix& p, double tol, const char* who) {
  if (p.rows() != p.cols()) throw DomainError(std::string(who) + ": matrix is not square");
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (p.row(i).minCoeff() < 0.0) {
      throw DomainError(std::string(who) + ": negative entry in row " + std::to_string(i));
    }
    if (std::fabs(p.row(i).sum() - 1.0) > tol) {
      throw DomainError(std::string(who) + ": row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

namespace detail {

// Boolean reachability closure (including the state itself).
inline std::vector<std::vector<char>> reachability(const Matrix& p) {
  const Eigen::Index n = p.rows();
  std::vector<std::vector<char>> reach(static_cast<std::size_t>(n),
                                       std::vector<char>(static_cast<std::size_t>(n), 0));
  for (Eigen::Index s = 0; s < n; ++s) {
    auto& seen = reach[static_cast<std::size_t>(s)];
    std::vector<Eigen::Index> stack{s};
    seen[static_cast<std::size_t>(s)] = 1;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v) {
        if (p(u, v) > 0.0 && !seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
  }
  return reach;
}

}  // namespace detail

// Stationary distribution of a chain with exactly one closed communicating
// class; states outside it get mass zero. Multiple closed classes make the
// stationary law non-unique and raise StructureError naming them.
inline Vector stationary_distribution(const Matrix& p) {
  check_row_stochastic(p, 1e-10, "stationary_distribution");
  const Eigen::Index n = p.rows();
  const auto reach = detail::reachability(p);
  // A state is recurrent iff every state it reaches reaches it back.
  std::vector<std::vector<Eigen::Index>> closed;
  std::vector<char> assigned(static_cast<std::size_t>(n), 0);
  for (Eigen::Index s = 0; s < n; ++s) {
    if (assigned[static_cast<std::size_t>(s)]) continue;
    bool recurrent = true;
    for (Eigen::Index v = 0; v < n && recurrent; ++v) {
      if (reach[static_cast<std::size_t>(s)][static_cast<std::size_t>(v)] &&
          !reach[static_cast<std::size_t>(v)][static_cast<std::size_t>(s)]) {
        recurrent = false;
      }
    }
    if (!recurrent) continue;
    std::vector<Eigen::Index> cls;
    for (Eigen::Index v = 0; v < n; ++v) {
      if (reach[static_cast<std::size_t>(s)][static_cast<std::size_t>(v)]) {
        cls.push_back(v);
        assigned[static_cast<std::size_t>(v)] = 1;
      }
    }
    closed.push_back(std::move(cls));
  }
  if (closed.size() != 1) {
    std::string msg = "stationary_distribution: chain has " + std::to_string(closed.size()) +
                      " closed classes:";
    for (const auto& cls : closed) {
      msg += " {";
      for (std::size_t i = 0; i < cls.size(); ++i) msg += (i ? "," : "") + std::to_string(cls[i]);
      msg += "}";
    }
    throw StructureError(msg);
  }
  const auto& cls = closed.front();
  const Eigen::Index m = static_cast<Eigen::Index>(cls.size());
  Matrix sub(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = p(cls[i], cls[j]);
  // pi (I - P + 1 1^T) = 1^T has the stationary law as unique solution.
  const Matrix a = (Matrix::Identity(m, m) - sub + Matrix::Ones(m, m)).transpose();
  Eigen::FullPivLU<Matrix> lu(a);
  const Vector ones = Vector::Ones(m);
  Vector x = lu.solve(ones);
  for (int refine = 0; refine < 2; ++refine) x += lu.solve(ones - a * x);
  x = x.cwiseMax(0.0);
  x /= x.sum();
  Vector pi = Vector::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) pi(cls[i]) = x(i);
  return pi;
}

// Builds and validates a chain: rows sum to 1 within 1e-12, pi P = pi within
// 1e-10, every model carries positive mass.
inline FiniteTransChain make_chain(Matrix p, std::vector<int> model_of,
                                   std::optional<Vector> stationary = std::nullopt) {
  check_row_stochastic(p, 1e-12, "make_chain");
  if (static_cast<Eigen::Index>(model_of.size()) != p.rows()) {
    throw DomainError("make_chain: model map length differs from state count");
  }
  FiniteTransChain chain;
  chain.n_models = 0;
  for (int k : model_of) {
    if (k < 0) throw DomainError("make_chain: negative model index");
    chain.n_models = std::max(chain.n_models, k + 1);
  }
  chain.stationary = stationary ? *stationary : stationary_distribution(p);
  if (chain.stationary.size() != p.rows()) throw DomainError("make_chain: pi has wrong length");
  const Vector drift = (chain.stationary.transpose() * p).transpose() - chain.stationary;
  if (drift.cwiseAbs().maxCoeff() > 1e-10) throw DomainError("make_chain: pi P != pi");
  Vector mass = Vector::Zero(chain.n_models);
  for (std::size_t z = 0; z < model_of.size(); ++z) mass(model_of[z]) += chain.stationary(static_cast<Eigen::Index>(z));
  for (int k = 0; k < chain.n_models; ++k) {
    if (!(mass(k) > 0.0)) {
      throw StructureError("make_chain: model " + std::to_string(k) + " has zero stationary mass");
    }
  }
  chain.transition = std::move(p);
  chain.model_of = std::move(model_of);
  return chain;
}

// sup over f in L^2_0(pi) of ||P f|| / ||f||: the largest singular value of
// D^{1/2} P D^{-1/2} after projecting out sqrt(pi). States with pi = 0 are
// dropped (they are null in L^2(pi)).
inline double l20_operator_norm(const Matrix& p, const Vector& pi) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < pi.size(); ++i)
    if (pi(i) > 0.0) support.push_back(i);
  const Eigen::Index m = static_cast<Eigen::Index>(support.size());
  if (m <= 1) return 0.0;
  Vector q(m);
  for (Eigen::Index i = 0; i < m; ++i) q(i) = std::sqrt(pi(support[i]));
  q /= q.norm();
  Matrix a(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) a(i, j) = q(i) * p(support[i], support[j]) / q(j);
  const Matrix proj = Matrix::Identity(m, m) - q * q.transpose();
  const Matrix restricted = proj * a * proj;
  Eigen::JacobiSVD<Matrix> svd(restricted);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

// Adjoint in L^2(pi): D^{-1} P^T D.
inline Matrix pi_adjoint(const Matrix& p, const Vector& pi) {
  Matrix out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      out(i, j) = pi(i) > 0.0 ? p(j, i) * pi(j) / pi(i) : (i == j ? 1.0 : 0.0);
  return out;
}

// Sample path X(1..n) from X(0) = start; out[t] is the state after t + 1
// steps.
inline std::vector<Eigen::Index> simulate_finite_chain(const Matrix& p, Eigen::Index start, Eigen::Index n,
                                                       RngStream& rng) {
  const Eigen::Index m = p.rows();
  if (p.cols() != m || start < 0 || start >= m || n < 0) throw DomainError("simulate_finite_chain: bad arguments");
  Matrix cum(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) cum(i, j) = (acc += p(i, j));
  }
  std::vector<Eigen::Index> out(static_cast<std::size_t>(n));
  Eigen::Index x = start;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double u = rng.uniform() * cum(x, m - 1);
    Eigen::Index next = m - 1;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (u < cum(x, j)) {
        next = j;
        break;
      }
    }
    x = next;
    out[static_cast<std::size_t>(t)] = x;
  }
  return out;
}

inline Matrix matrix_power(const Matrix& p, int t) {
  Matrix out = Matrix::Identity(p.rows(), p.cols());
  for (int i = 0; i < t; ++i) out = out * p;
  return out;
}

using BoolMatrix = std::vector<std::vector<char>>;

// Probability of landing in each model after `s` steps, integrated against pi
// within the starting model: mass(k, k') = sum_{z in k} pi(z) P^s(z, Y_k').
inline Matrix model_mass(const FiniteTransChain& chain, int s) {
  const Matrix ps = matrix_power(chain.transition, s);
  const Eigen::Index n = chain.n_states();
  Matrix to_model = Matrix::Zero(n, chain.n_models);
  for (Eigen::Index z = 0; z < n; ++z)
    for (Eigen::Index w = 0; w < n; ++w) to_model(z, chain.model_of[static_cast<std::size_t>(w)]) += ps(z, w);
  Matrix mass = Matrix::Zero(chain.n_models, chain.n_models);
  for (Eigen::Index z = 0; z < n; ++z)
    mass.row(chain.model_of[static_cast<std::size_t>(z)]) += chain.stationary(z) * to_model.row(z);
  return mass;
}

inline BoolMatrix build_gamma(const FiniteTransChain& chain) {
  const Matrix mass = model_mass(chain, 1);
  BoolMatrix gamma(static_cast<std::size_t>(chain.n_models),
                   std::vector<char>(static_cast<std::size_t>(chain.n_models), 0));
  for (int k = 0; k < chain.n_models; ++k)
    for (int j = 0; j < chain.n_models; ++j)
      gamma[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = mass(k, j) > 0.0;
  return gamma;
}

inline BoolMatrix bool_power(const BoolMatrix& g, int s) {
  const std::size_t n = g.size();
  BoolMatrix out(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) out[i][i] = 1;
  for (int step = 0; step < s; ++step) {
    BoolMatrix next(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (out[i][k])
          for (std::size_t j = 0; j < n; ++j)
            if (g[k][j]) next[i][j] = 1;
    out = std::move(next);
  }
  return out;
}

// True iff every entry of gamma^s is positive.
inline bool check_h2_via_gamma(const BoolMatrix& gamma, int s) {
  if (s < 1) throw DomainError("check_h2_via_gamma: s must be >= 1");
  const BoolMatrix pw = bool_power(gamma, s);
  for (const auto& row : pw)
    for (char v : row)
      if (!v) return false;
  return true;
}

struct H2Witness {
  bool holds = false;
  Matrix mass;  // s-step model masses
  int first_zero_from = -1;
  int first_zero_to = -1;
};

// s-step positivity test. Whenever it holds, gamma^s must be positive as
// well; a counterexample raises InternalError.
inline H2Witness check_h2_via_s_step(const FiniteTransChain& chain, int s) {
  if (s < 1) throw DomainError("check_h2_via_s_step: s must be >= 1");
  H2Witness w;
  w.mass = model_mass(chain, s);
  w.holds = true;
  for (int k = 0; k < chain.n_models && w.holds; ++k) {
    for (int j = 0; j < chain.n_models; ++j) {
      if (!(w.mass(k, j) > 0.0)) {
        w.holds = false;
        w.first_zero_from = k;
        w.first_zero_to = j;
        break;
      }
    }
  }
  if (w.holds && !check_h2_via_gamma(build_gamma(chain), s)) {
    throw InternalError("check_h2_via_s_step: s-step positivity holds but gamma^s has a zero");
  }
  return w;
}

struct ModelJumpMatrix {
  Matrix m;       // row-stochastic, models x models
  Vector pi_bar;  // model masses
};

// M[k,k'] = (1/pi_bar(k)) sum_z pi(z) P(z, Y_k) P(z, Y_k').
inline ModelJumpMatrix build_model_jump_matrix(const FiniteTransChain& chain) {
  const Eigen::Index n = chain.n_states();
  const int nm = chain.n_models;
  Matrix to_model = Matrix::Zero(n, nm);
  for (Eigen::Index z = 0; z < n; ++z)
    for (Eigen::Index w = 0; w < n; ++w)
      to_model(z, chain.model_of[static_cast<std::size_t>(w)]) += chain.transition(z, w);
  ModelJumpMatrix out;
  out.pi_bar = Vector::Zero(nm);
  for (Eigen::Index z = 0; z < n; ++z) out.pi_bar(chain.model_of[static_cast<std::size_t>(z)]) += chain.stationary(z);
  out.m = to_model.transpose() * chain.stationary.asDiagonal() * to_model;
  for (int k = 0; k < nm; ++k) out.m.row(k) /= out.pi_bar(k);
  return out;
}

// Eigenvalues of M_P in ascending order, via the symmetric similarity
// transform D^{1/2} M D^{-1/2}.
inline Vector model_jump_eigenvalues(const ModelJumpMatrix& mj) {
  const Vector s = mj.pi_bar.cwiseSqrt();
  Matrix sym = s.asDiagonal() * mj.m * s.cwiseInverse().asDiagonal();
  sym = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Second largest eigenvalue of M_P (0 for a single model). The matrix is
// positive semi-definite by construction; an eigenvalue below -1e-8 flags a
// construction bug.
inline double lambda1(const ModelJumpMatrix& mj) {
  const Vector ev = model_jump_eigenvalues(mj);
  if (ev.minCoeff() < -1e-8) {
    throw InternalError("lambda1: model jump matrix has a negative eigenvalue " +
                        std::to_string(ev.minCoeff()));
  }
  if (ev.size() < 2) return 0.0;
  return std::clamp(ev(ev.size() - 2), 0.0, 1.0);
}

namespace detail {

inline Matrix block(const Matrix& p, const std::vector<Eigen::Index>& idx) {
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  Matrix out(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = p(idx[i], idx[j]);
  return out;
}

inline Vector restricted_normalized(const Vector& pi, const std::vector<Eigen::Index>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = pi(idx[i]);
  return out / out.sum();
}

// Kernel preserves its target and is dominated (up to c) by the big matrix
// on its block.
inline void check_within_kernel(const Matrix& big, const Matrix& kernel, double c,
                                const Vector& phi, const std::vector<Eigen::Index>& idx,
                                const std::string& who) {
  if (kernel.rows() != static_cast<Eigen::Index>(idx.size())) {
    throw DomainError(who + ": within kernel has wrong size");
  }
  if (!(c >= 0.0 && c <= 1.0)) throw DomainError(who + ": constant outside [0,1]");
  check_row_stochastic(kernel, 1e-10, who.c_str());
  const Vector drift = (phi.transpose() * kernel).transpose() - phi;
  if (drift.cwiseAbs().maxCoeff() > 1e-10) throw DomainError(who + ": within kernel does not preserve its target");
  const Matrix b = block(big, idx);
  if ((b - c * kernel).minCoeff() < -1e-12) throw DomainError(who + ": minorization fails");
}

}  // namespace detail

struct BoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  // Ingredients, for reporting.
  double main_norm = 0.0;    // ||P^t|| (spectral bound) or ||T S*|| (decomposition)
  double within_norm = 0.0;  // max / sup of the within-kernel norms
  double global_term = 0.0;  // lambda1(M_P) or ||S-bar||
  double c_term = 0.0;       // (min c_k^t) or c
};

inline constexpr double kBoundSlack = 1e-9;

// 1 - ||P^t||^4 >= (min_k c_k^t)^2 (1 - max_k ||P_k^t||^2) (1 - lambda1(M_P)).
inline BoundReport spectral_bound_check(const FiniteTransChain& chain, const WithinKernelSet& kernels,
                                        int t) {
  if (t < 1) throw DomainError("spectral_bound_check: t must be >= 1");
  if (static_cast<int>(kernels.kernels.size()) != chain.n_models ||
      static_cast<int>(kernels.c.size()) != chain.n_models) {
    throw DomainError("spectral_bound_check: need one kernel and constant per model");
  }
  const auto groups = states_by_model(chain.model_of, chain.n_models);
  double min_ct = 1.0, max_norm = 0.0;
  for (int k = 0; k < chain.n_models; ++k) {
    const auto& idx = groups[static_cast<std::size_t>(k)];
    const Vector phi = detail::restricted_normalized(chain.stationary, idx);
    detail::check_within_kernel(chain.transition, kernels.kernels[static_cast<std::size_t>(k)],
                                kernels.c[static_cast<std::size_t>(k)], phi, idx,
                                "spectral_bound_check");
    min_ct = std::min(min_ct, std::pow(kernels.c[static_cast<std::size_t>(k)], t));
    max_norm = std::max(max_norm,
                        l20_operator_norm(matrix_power(kernels.kernels[static_cast<std::size_t>(k)], t), phi));
  }
  BoundReport r;
  r.main_norm = l20_operator_norm(matrix_power(chain.transition, t), chain.stationary);
  r.within_norm = max_norm;
  r.global_term = lambda1(build_model_jump_matrix(chain));
  r.c_term = min_ct;
  r.lhs = 1.0 - std::pow(r.main_norm, 4);
  r.rhs = min_ct * min_ct * (1.0 - max_norm * max_norm) * (1.0 - r.global_term);
  r.holds = r.lhs >= r.rhs - kBoundSlack;
  return r;
}

// Decomposition inequality for kernels T, S preserving omega, with T >= c T_k
// on each block:
//   1 - ||T S*||^2 >= c^2 (1 - sup_k ||T_k||^2) (1 - ||S-bar||).
inline BoundReport decomposition_inequality_check(const Matrix& t_mat, const Matrix& s_mat,
                                                  const std::vector<Matrix>& within, double c,
                                                  const Vector& omega,
                                                  const std::vector<int>& model_of) {
  const char* who = "decomposition_inequality_check";
  check_row_stochastic(t_mat, 1e-10, who);
  check_row_stochastic(s_mat, 1e-10, who);
  if (t_mat.rows() != omega.size() || s_mat.rows() != omega.size() ||
      static_cast<Eigen::Index>(model_of.size()) != omega.size()) {
    throw DomainError(std::string(who) + ": dimension mismatch");
  }
  for (const Matrix* k : {&t_mat, &s_mat}) {
    const Vector drift = (omega.transpose() * *k).transpose() - omega;
    if (drift.cwiseAbs().maxCoeff() > 1e-10) throw DomainError(std::string(who) + ": kernel does not preserve omega");
  }
  const FiniteTransChain s_chain = make_chain(s_mat, model_of, omega);
  if (static_cast<int>(within.size()) != s_chain.n_models) {
    throw DomainError(std::string(who) + ": need one within kernel per block");
  }
  const auto groups = states_by_model(model_of, s_chain.n_models);
  double sup_norm = 0.0;
  for (int k = 0; k < s_chain.n_models; ++k) {
    const auto& idx = groups[static_cast<std::size_t>(k)];
    const Vector phi = detail::restricted_normalized(omega, idx);
    detail::check_within_kernel(t_mat, within[static_cast<std::size_t>(k)], c, phi, idx, who);
    sup_norm = std::max(sup_norm, l20_operator_norm(within[static_cast<std::size_t>(k)], phi));
  }
  const ModelJumpMatrix sbar = build_model_jump_matrix(s_chain);
  BoundReport r;
  r.main_norm = l20_operator_norm(t_mat * pi_adjoint(s_mat, omega), omega);
  r.within_norm = sup_norm;
  r.global_term = l20_operator_norm(sbar.m, sbar.pi_bar);
  r.c_term = c;
  r.lhs = 1.0 - r.main_norm * r.main_norm;
  r.rhs = c * c * (1.0 - sup_norm * sup_norm) * (1.0 - r.global_term);
  r.holds = r.lhs >= r.rhs - kBoundSlack;
  return r;
}

}  // namespace rjmc
