// Acceptance suite: one PASS/FAIL line per criterion. Exit status 0 when every
// selected criterion passes, 1 otherwise, 77 when everything selected was
// skipped (missing external data).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "rjmc/rjmc.hpp"

using namespace rjmc;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Result {
  Outcome outcome = Outcome::Fail;
  std::string detail;
};

Result verdict(bool ok, const std::string& detail) { return {ok ? Outcome::Pass : Outcome::Fail, detail}; }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// 1 and 2 share the ensemble.
Result ac1_spectral_bounds() {
  RngStream rng(101);
  int violations = 0, checked = 0;
  double min_margin = 1e300;
  for (int i = 0; i < 100; ++i) {
    const GeneratedChain g = random_decomposable_chain(rng);
    if (g.chain.n_states() > 60 || g.chain.n_models < 2 || g.chain.n_models > 4) ++violations;
    for (int t = 1; t <= 3; ++t) {
      const BoundReport r = spectral_bound_check(g.chain, g.within, t);
      ++checked;
      if (!r.holds) ++violations;
      min_margin = std::min(min_margin, r.lhs - r.rhs);
    }
    const double c = *std::min_element(g.within.c.begin(), g.within.c.end());
    const Matrix s = i % 2 ? g.chain.transition : random_pi_kernel(g.chain.stationary, rng);
    const BoundReport d =
        decomposition_inequality_check(g.chain.transition, s, g.within.kernels, c, g.chain.stationary, g.chain.model_of);
    ++checked;
    if (!d.holds) ++violations;
    min_margin = std::min(min_margin, d.lhs - d.rhs);
  }
  return verdict(violations == 0, std::to_string(checked) + " inequalities, " + std::to_string(violations) +
                                      " violations, smallest lhs - rhs " + fmt(min_margin));
}

Result ac2_lemma_consistency() {
  RngStream rng(101);
  int counterexamples = 0, passes = 0;
  for (int i = 0; i < 100; ++i) {
    const GeneratedChain g = random_decomposable_chain(rng);
    if (i % 2 == 0) random_pi_kernel(g.chain.stationary, rng);  // keep the stream aligned with AC1
    const BoolMatrix gamma = build_gamma(g.chain);
    for (int s = 1; s <= 4; ++s) {
      H2Witness w;
      try {
        w = check_h2_via_s_step(g.chain, s);
      } catch (const InternalError&) {
        ++counterexamples;
        continue;
      }
      if (w.holds) {
        ++passes;
        if (!check_h2_via_gamma(gamma, s)) ++counterexamples;
      }
    }
  }
  return verdict(counterexamples == 0,
                 std::to_string(passes) + " passing mass tests, " + std::to_string(counterexamples) + " counterexamples");
}

Result ac3_covariance_oracle() {
  RngStream rng(103);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(8));
    const Matrix p = random_stochastic_matrix(n, rng);
    const Vector pi = stationary_distribution(p);
    Matrix f(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) f.row(i) << rng.normal(), rng.normal();
    const Matrix a = exact_asymptotic_cov_finite(p, pi, f);
    const Matrix b = oracle::series_asymptotic_cov(p, pi, f, 10000);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  double worst_closed = 0.0;
  for (auto [a, b] : {std::pair{0.3, 0.1}, std::pair{0.9, 0.8}, std::pair{0.05, 0.02}, std::pair{0.5, 0.5}}) {
    const Matrix p = (Matrix(2, 2) << 1.0 - a, a, b, 1.0 - b).finished();
    const Vector pi = (Vector(2) << b / (a + b), a / (a + b)).finished();
    const Matrix f = (Matrix(2, 1) << 1.0, 0.0).finished();
    const double closed = pi(0) * pi(1) * (2.0 - a - b) / (a + b);
    worst_closed = std::max(worst_closed, std::fabs(exact_asymptotic_cov_finite(p, pi, f)(0, 0) - closed));
  }
  return verdict(worst <= 1e-10 && worst_closed <= 1e-12,
                 "series gap " + fmt(worst) + ", two-state closed-form gap " + fmt(worst_closed));
}

Result ac4_batch_means() {
  const Matrix p = (Matrix(3, 3) << 0.5, 0.3, 0.2, 0.2, 0.6, 0.2, 0.3, 0.3, 0.4).finished();
  const Vector pi = stationary_distribution(p);
  const Matrix f = (Matrix(3, 2) << 1.0, 0.0, 0.0, 1.0, 2.0, -1.0).finished();
  const Matrix exact = exact_asymptotic_cov_finite(p, pi, f);
  const Eigen::Index n = 1000000;
  std::vector<double> errs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(400 + seed);
    const std::vector<Eigen::Index> path = simulate_finite_chain(p, 0, n, rng);
    Trace tr;
    tr.f_values.resize(n, 2);
    for (Eigen::Index t = 0; t < n; ++t) tr.f_values.row(t) = f.row(path[static_cast<std::size_t>(t)]);
    const BatchMeansEstimate e = batch_means_cov(tr, 0.6);
    errs.push_back((e.sigma_n - exact).norm() / exact.norm());
  }
  std::sort(errs.begin(), errs.end());
  const double median = 0.5 * (errs[9] + errs[10]);
  return verdict(median <= 0.10, "median relative Frobenius error " + fmt(median) + " over 20 seeds");
}

Result ac5_xi_solver() {
  RngStream rng(105);
  int solves = 0, outside = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const int m = 2 + trial % 5;
    Matrix a(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) a(i, j) = rng.normal();
    const Matrix cov = a * a.transpose() + 0.2 * Matrix::Identity(m, m);
    for (double alpha : {0.01, 0.05, 0.2}) {
      const QuantileSolution s = solve_rectangle_quantile(alpha, cov.diagonal(), cov, 1e-4);
      ++solves;
      if (s.xi < norm_quantile(1.0 - alpha / 2.0) || s.xi > norm_quantile(1.0 - alpha / (2.0 * m))) ++outside;
    }
  }
  const Matrix ind = Matrix::Identity(4, 4);
  const QuantileSolution s = solve_rectangle_quantile(0.05, ind.diagonal(), ind, 1e-5);
  ++solves;
  if (s.xi < norm_quantile(0.975) || s.xi > norm_quantile(1.0 - 0.05 / 8.0)) ++outside;
  const bool close = std::fabs(s.xi - 2.4908) <= 1e-3;
  return verdict(outside == 0 && close, std::to_string(solves) + " solves, " + std::to_string(outside) +
                                            " outside the bracket; independent m=4 xi " + fmt(s.xi));
}

ARData toy_dataset() {
  RngStream rng(1);
  return simulate_ar_dataset(ARSimConfig{}, rng);
}

Result ac6_ar_toy() {
  const ARData d = toy_dataset();
  const ToyTruth truth = toy_quadrature_oracle(d);
  const ARProblem pr(d);
  RngStream rng(606);
  const Trace tr = run_ar_chain(pr, ar_initial_state(pr), move_probs_green(d.f_k), 1000000, 100000,
                                ARFunctions::ToyMoments, rng);
  const Vector est = ar_h_spec().h(ergodic_average(tr));
  const Vector gap = (est - truth.as_vector()).cwiseAbs();
  std::ostringstream s;
  s << "estimate (" << fmt(est(0)) << ", " << fmt(est(1)) << ", " << fmt(est(2)) << ", " << fmt(est(3))
    << ") oracle (" << fmt(truth.p0) << ", " << fmt(truth.p1) << ", " << fmt(truth.mean_a) << ", " << fmt(truth.sd_a)
    << "), largest gap " << fmt(gap.maxCoeff());
  return verdict(gap.maxCoeff() <= 0.01, s.str());
}

Result ac7_coverage() {
  Settings s = default_settings("coverage");
  std::ostringstream log;
  const CoverageResult res = run_coverage(s, log);
  auto row = [&](double eps) -> const CoverageRow& {
    for (const CoverageRow& r : res.rows)
      if (r.epsilon == eps) return r;
    throw InternalError("coverage grid lacks epsilon " + fmt(eps));
  };
  bool ok = true;
  std::ostringstream detail;
  detail << "coverage";
  for (double eps : {10.0, 1.0, 0.1, 0.01, 0.001}) {
    const double c = row(eps).coverage;
    detail << ' ' << fmt(eps) << ':' << fmt(c);
    if (eps != 0.01 && !(c >= 0.87 && c <= 0.98)) ok = false;
  }
  const Vector w10 = row(10).mean_width, w1 = row(1).mean_width, w01 = row(0.1).mean_width;
  for (Eigen::Index i = 0; i < 4; ++i) {
    if (!(w10(i) > w1(i) && w1(i) > w01(i))) ok = false;
    for (double eps : {0.01, 0.001})
      if (std::fabs(row(eps).mean_width(i) / w01(i) - 1.0) > 0.05) ok = false;
  }
  detail << "; widths eps=10 " << fmt(w10(0)) << ", eps=0.1 " << fmt(w01(0)) << ", eps=0.001 "
         << fmt(row(0.001).mean_width(0));
  return verdict(ok, detail.str());
}

Result ac8_probit() {
  RngStream data_rng(808);
  const ProbitData d = simulate_probit_dataset(30, 0.3, (Vector(3) << 0.8, 0.0, -0.5).finished(), data_rng);
  const ProbitProblem pr(d);
  std::vector<double> post(8);
  double mx = -1e300;
  for (int c = 0; c < 8; ++c) {
    std::vector<int> k(3);
    for (int j = 0; j < 3; ++j) k[static_cast<std::size_t>(j)] = (c >> j) & 1;
    post[static_cast<std::size_t>(c)] = std::count(k.begin(), k.end(), 1) * std::log(d.p_slab) +
                                        oracle::probit_gaussian_integral(pr.design(k), d.y, d.sigma).log_value;
    mx = std::max(mx, post[static_cast<std::size_t>(c)]);
  }
  double tot = 0.0;
  for (double& v : post) tot += (v = std::exp(v - mx));
  for (double& v : post) v /= tot;
  RngStream rng(809);
  ProbitState s = probit_empty_state(pr);
  for (int t = 0; t < 10000; ++t) s = rj_step(pr, s, rng);
  const int n = 1000000;
  std::vector<double> freq(8, 0.0);
  for (int t = 0; t < n; ++t) {
    s = rj_step(pr, s, rng);
    int c = 0;
    for (std::size_t j = 0; j < 3; ++j) c |= s.k[j] << j;
    freq[static_cast<std::size_t>(c)] += 1.0 / n;
  }
  double worst = 0.0;
  for (int c = 0; c < 8; ++c) worst = std::max(worst, std::fabs(freq[static_cast<std::size_t>(c)] - post[static_cast<std::size_t>(c)]));
  return verdict(worst <= 0.01, "largest model-frequency gap " + fmt(worst) + " over 8 models");
}

Result ac9_antisymmetry() {
  RngStream data_rng(909);
  ARSimConfig c;
  c.n_obs = 40;
  c.p = 3;
  c.k_max = 4;
  c.k_true = 2;
  c.alpha_true = (Vector(2) << 0.4, -0.2).finished();
  const ARProblem ar(simulate_ar_dataset(c, data_rng));
  const ARMoveProbs q = move_probs_green(ar.data().f_k);
  RngStream rng(910);
  double worst_ar = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    ARState s = ar_initial_state(ar, static_cast<int>(rng.below(4)));
    for (Eigen::Index j = 0; j < s.alpha.size(); ++j) s.alpha(j) = 0.5 * rng.normal();
    for (Eigen::Index j = 0; j < s.beta.size(); ++j) s.beta(j) = rng.normal();
    s.tau = std::exp(rng.normal());
    for (Eigen::Index i = 0; i < s.u.size(); ++i) s.u(i) = std::exp(rng.normal());
    const double a = rng.normal();
    const double sum = ar_birth_log_ratio(ar, s, a, q) + ar_death_log_ratio(ar, ar_with_birth(s, a), q);
    worst_ar = std::max(worst_ar, std::isfinite(sum) ? std::fabs(sum) : 1e300);
  }
  const ProbitProblem pb(simulate_probit_dataset(60, 0.3, (Vector(3) << 0.8, 0.0, -0.5).finished(), data_rng));
  double worst_pb = 0.0;
  for (int checked = 0; checked < 1000;) {
    ProbitState s;
    s.k.resize(3);
    for (auto& v : s.k) v = static_cast<int>(rng.below(2));
    s.z.resize(s.size() + 1);
    for (Eigen::Index j = 0; j < s.z.size(); ++j) s.z(j) = rng.normal();
    const std::vector<int> ex = excluded_indices(s.k);
    if (ex.empty()) continue;
    const int j = ex[rng.below(ex.size())];
    const double b = rng.normal();
    const double sum = probit_birth_log_ratio(pb, s, j, b) + probit_death_log_ratio(pb, probit_with_birth(s, j, b), j);
    worst_pb = std::max(worst_pb, std::isfinite(sum) ? std::fabs(sum) : 1e300);
    ++checked;
  }
  return verdict(worst_ar <= 1e-12 && worst_pb <= 1e-12,
                 "largest |log r_B + log r_D|: AR " + fmt(worst_ar) + ", probit " + fmt(worst_pb));
}

double ig_density(double u, double mu, double lambda) {
  if (u <= 0.0) return 0.0;
  return std::sqrt(lambda / (2.0 * std::numbers::pi * u * u * u)) *
         std::exp(-lambda * (u - mu) * (u - mu) / (2.0 * mu * mu * u));
}

Result ac10_samplers() {
  const std::size_t n = 100000;
  const double inf = std::numeric_limits<double>::infinity();
  RngStream rng(1010);
  double min_p = 1.0;
  int failures = 0;
  auto check = [&](const std::vector<double>& x, const std::function<double(double)>& dens) {
    const double p = oracle::ks_pvalue(oracle::ks_statistic(x, dens, 0.0, inf), n);
    min_p = std::min(min_p, p);
    if (!(p > 1e-3)) ++failures;
  };
  for (auto [mu, lambda] : std::vector<std::pair<double, double>>{{1, 1}, {2, 0.25}, {0.5, 4}}) {
    std::vector<double> x(n);
    for (auto& v : x) v = sample_inverse_gaussian(mu, lambda, rng);
    check(x, [&](double u) { return ig_density(u, mu, lambda); });
  }
  struct Tn {
    double mean, sd;
    bool pos;
  };
  for (const Tn& t : std::vector<Tn>{{0, 1, true}, {-5, 2, true}, {2, 1, false}, {-8, 1, true}, {3, 0.5, false}}) {
    std::vector<double> x(n);
    for (auto& v : x) v = sample_truncated_normal_onesided(t.mean, t.sd, t.pos, rng);
    const double m = t.pos ? t.mean : -t.mean;
    if (!t.pos)
      for (auto& v : x) v = -v;
    check(x, [&](double v) {
      return std::exp((-0.5 * v * v + m * v) / (t.sd * t.sd) - (m > 0 ? 0.5 * m * m / (t.sd * t.sd) : 0.0));
    });
  }
  for (auto [shape, scale] : std::vector<std::pair<double, double>>{{3, 2}, {0.5, 1}, {10, 5}}) {
    std::vector<double> x(n);
    for (auto& v : x) v = sample_inverse_gamma(shape, scale, rng);
    check(x, [&](double v) { return v <= 0.0 ? 0.0 : std::exp(-(shape + 1.0) * std::log(v) - scale / v); });
  }
  // The conditional of u_i in the augmented AR posterior against IG(mu_i, 1/4).
  double worst_l1 = 0.0;
  for (double r : {0.01, 0.3, 1.0, 4.0, 25.0}) {
    for (double tau : {0.05, 1.0, 9.0}) {
      auto printed = [&](double u) {
        if (u <= 0.0) return 0.0;
        return 1.0 / std::sqrt(8.0 * std::numbers::pi * u * u * u) *
               std::exp(-u * r * r / (2.0 * tau) + std::fabs(r) / (2.0 * std::sqrt(tau)) - 1.0 / (8.0 * u));
      };
      const double mu = std::sqrt(tau) / (2.0 * std::fabs(r));
      auto diff = [&](double u) { return std::fabs(printed(u) - ig_density(u, mu, 0.25)); };
      worst_l1 = std::max(worst_l1, boost::math::quadrature::gauss_kronrod<double, 61>::integrate(diff, 0.0, inf, 15, 1e-14));
    }
  }
  return verdict(failures == 0 && worst_l1 < 1e-8, "11 KS tests, " + std::to_string(failures) +
                                                       " below 1e-3 (smallest p " + fmt(min_p) +
                                                       "); IG density L1 gap " + fmt(worst_l1));
}

Result ac11_spambase() {
  std::string path;
  if (const char* env = std::getenv("RJMC_SPAMBASE")) path = env;
  if (path.empty()) path = std::string(RJMC_SOURCE_DIR) + "/data/spambase.data";
  if (!std::filesystem::exists(path)) {
    return {Outcome::Skip, "spambase.data not found (set RJMC_SPAMBASE or place it under data/)"};
  }
  const ProbitData d = load_spambase(path);
  const ProbitProblem pr(d);
  RngStream rng(1111, 0);
  const Trace tr = run_probit_chain(pr, probit_empty_state(pr), 10000, 1000, rng);
  SimCIOptions opt;
  opt.epsilon = 0.1;
  RngStream noise(1111, 1);
  const SimCIReport rep = simultaneous_cis(tr, identity_spec(tr.d()), opt, noise);
  const std::vector<std::string> bad = report_violations(rep);
  const bool ok = d.n_obs() == 4601 && d.r() == 57 && rep.intervals.rows() == 57 && bad.empty();
  return verdict(ok, "data (" + std::to_string(d.n_obs()) + ", " + std::to_string(d.r()) + "), " +
                         std::to_string(rep.intervals.rows()) + " intervals, xi " + fmt(rep.xi) + ", " +
                         std::to_string(bad.size()) + " invariant violations");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> skip, only;
  app.add_option("--skip", skip, "criteria to skip")->delimiter(',');
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Result()>> criteria = {
      ac1_spectral_bounds, ac2_lemma_consistency, ac3_covariance_oracle, ac4_batch_means,
      ac5_xi_solver,       ac6_ar_toy,            ac7_coverage,          ac8_probit,
      ac9_antisymmetry,    ac10_samplers,         ac11_spambase,
  };
  const std::set<int> skip_set(skip.begin(), skip.end()), only_set(only.begin(), only.end());
  int ran = 0, failed = 0, skipped = 0;
  for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) {
    if (skip_set.count(i) || (!only_set.empty() && !only_set.count(i))) continue;
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = criteria[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      r = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = r.outcome == Outcome::Pass ? "PASS" : r.outcome == Outcome::Fail ? "FAIL" : "SKIP";
    std::cout << "AC" << i << ' ' << tag << ' ' << r.detail << " (" << fmt(secs) << " s)" << std::endl;
    ++ran;
    failed += r.outcome == Outcome::Fail;
    skipped += r.outcome == Outcome::Skip;
  }
  if (failed > 0) return 1;
  if (ran > 0 && skipped == ran) return 77;
  return 0;
}
