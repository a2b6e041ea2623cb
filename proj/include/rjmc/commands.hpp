#pragma once

// The command-line subcommands as library functions. Each takes the resolved
// settings and a log stream, writes its output files and returns the process
// exit code; errors propagate as exceptions.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rjmc/ar_laplace.hpp"
#include "rjmc/ensemble.hpp"
#include "rjmc/error.hpp"
#include "rjmc/finite_spectral.hpp"
#include "rjmc/io.hpp"
#include "rjmc/probit_rj.hpp"
#include "rjmc/uq.hpp"

namespace rjmc {

struct KeySpec {
  const char* key;
  const char* fallback;  // "" means unset
  const char* help;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"simulate-ar", "run", "coverage", "finite-verify", "plotdata"};
  return names;
}

inline const std::vector<KeySpec>& command_keys(const std::string& cmd) {
  static const std::vector<KeySpec> simulate = {
      {"preset", "toy", "toy, scenario2 or custom"},
      {"n-obs", "", "number of observations N"},
      {"p", "", "number of exogenous predictors"},
      {"k-max", "", "largest autoregressive order"},
      {"k-true", "", "order used to generate the data"},
      {"alpha-true", "", "comma-separated AR coefficients (k-true of them)"},
      {"beta-true", "", "comma-separated regression coefficients (default all ones)"},
      {"tau", "", "error scale parameter tau"},
      {"sigma", "", "prior standard deviation of the coefficients"},
      {"prior", "", "order prior: uniform or poisson"},
      {"poisson-mean", "", "mean of the truncated Poisson order prior"},
      {"x-scale", "", "standard deviation of the predictors"},
      {"seed", "1", "random seed"},
      {"out", "ar_data.txt", "dataset output path"},
  };
  static const std::vector<KeySpec> run = {
      {"sampler", "ar", "ar or probit"},
      {"data", "", "dataset path (AR text format or probit CSV)"},
      {"functions", "auto", "AR test functions: toy, orders or auto"},
      {"n", "10000", "recorded chain length"},
      {"burn-in", "", "discarded steps (default n/10)"},
      {"seed", "1", "random seed"},
      {"v", "0.6", "batch size exponent"},
      {"alpha", "0.05", "joint miscoverage level"},
      {"epsilon", "0.001", "injected noise scale"},
      {"vstar-scale", "1", "V* = scale * identity"},
      {"tol", "1e-4", "accuracy of the rectangle probability"},
      {"qmc-points", "4096", "lattice points per shift in the quantile solver"},
      {"inflate-only", "false", "widen intervals without shifting their centers"},
      {"p-slab", "0.5", "probit prior inclusion probability"},
      {"prior-sd", "1", "probit prior standard deviation"},
      {"standardize", "true", "standardize probit predictors"},
      {"trace-out", "trace.txt", "trace output path"},
      {"report-out", "report.txt", "report output path"},
  };
  static const std::vector<KeySpec> coverage = {
      {"data", "", "toy AR dataset (default: simulated with toy-seed)"},
      {"toy-seed", "1", "seed of the simulated toy dataset"},
      {"reps", "500", "number of independent replications"},
      {"n", "10000", "recorded chain length"},
      {"burn-in", "", "discarded steps (default n/10)"},
      {"seed", "1", "random seed"},
      {"v", "0.6", "batch size exponent"},
      {"alpha", "0.05", "joint miscoverage level"},
      {"eps-grid", "10,1,0.1,0.01,0.001", "comma-separated noise scales"},
      {"vstar-scale", "1", "V* = scale * identity"},
      {"tol", "1e-4", "accuracy of the rectangle probability"},
      {"qmc-points", "4096", "lattice points per shift in the quantile solver"},
      {"workers", "0", "worker threads (0: hardware concurrency)"},
      {"out", "coverage.txt", "table output path"},
  };
  static const std::vector<KeySpec> finite = {
      {"chain", "", "chain description file"},
      {"random-ensemble", "0", "number of random chains to check instead of a file"},
      {"seed", "1", "random seed of the ensemble"},
      {"out", "finite_report.txt", "report output path"},
  };
  static const std::vector<KeySpec> plot = {
      {"report", "", "report file written by run"},
      {"trace", "", "trace file (intervals for its raw means are computed)"},
      {"seed", "1", "random seed (trace input only)"},
      {"v", "0.6", "batch size exponent (trace input only)"},
      {"alpha", "0.05", "joint miscoverage level (trace input only)"},
      {"epsilon", "0.001", "injected noise scale (trace input only)"},
      {"out", "plot.tsv", "plot data output path"},
  };
  if (cmd == "simulate-ar") return simulate;
  if (cmd == "run") return run;
  if (cmd == "coverage") return coverage;
  if (cmd == "finite-verify") return finite;
  if (cmd == "plotdata") return plot;
  throw ConfigError("unknown command '" + cmd + "'");
}

inline Settings default_settings(const std::string& cmd) {
  Settings s;
  for (const KeySpec& k : command_keys(cmd)) s[k.key] = k.fallback;
  return s;
}

namespace detail {

inline Eigen::Index burn_in_of(const Settings& s, Eigen::Index n) {
  const Eigen::Index b = s.integer("burn-in", n / 10);
  if (n < 1 || b < 0 || b >= n) throw ConfigError("need n > burn-in >= 0 (n = " + std::to_string(n) + ")");
  return b;
}

inline SimCIOptions ci_options(const Settings& s, Eigen::Index m) {
  SimCIOptions o;
  o.alpha = s.num("alpha");
  o.epsilon = s.num("epsilon", 0.0);
  o.v = s.num("v");
  o.tol = s.num("tol", 1e-4);
  o.quantile.n_points = static_cast<std::size_t>(s.integer("qmc-points", 4096));
  o.quantile.seed = static_cast<std::uint64_t>(s.integer("seed"));
  o.inflate_only = s.flag("inflate-only");
  const double scale = s.num("vstar-scale", 1.0);
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (!(o.epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  if (!(scale > 0.0)) throw ConfigError("vstar-scale must be positive");
  o.v_star = scale * Matrix::Identity(m, m);
  return o;
}

inline std::uint64_t seed_of(const Settings& s) {
  const long long v = s.integer("seed");
  if (v < 0) throw ConfigError("seed must be non-negative");
  return static_cast<std::uint64_t>(v);
}

// Runs fn(i) for i in [0, count) on up to `workers` threads. Results are
// written by index, so the outcome does not depend on scheduling; the first
// exception (by index) is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline ARSimConfig sim_config(const Settings& s) {
  ARSimConfig c;
  const std::string preset = s.str("preset", "toy");
  if (preset == "scenario2") {
    c.n_obs = 100;
    c.p = 50;
    c.k_max = 10;
    c.k_true = 4;
    c.alpha_true = (Vector(4) << 0.3, 0.05, 0.05, 0.05).finished();
    c.prior = "poisson";
  } else if (preset != "toy" && preset != "custom") {
    throw ConfigError("unknown preset '" + preset + "' (use toy, scenario2 or custom)");
  }
  c.n_obs = s.integer("n-obs", c.n_obs);
  c.p = s.integer("p", c.p);
  c.k_max = static_cast<int>(s.integer("k-max", c.k_max));
  c.k_true = static_cast<int>(s.integer("k-true", c.k_true));
  if (s.has("alpha-true")) {
    const std::vector<double> a = s.list("alpha-true");
    c.alpha_true = Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
  } else if (c.alpha_true.size() != c.k_true) {
    c.alpha_true = Vector::Zero(c.k_true);
  }
  if (s.has("beta-true")) {
    const std::vector<double> b = s.list("beta-true");
    c.beta_true = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
  }
  c.tau_true = s.num("tau", c.tau_true);
  c.sigma = s.num("sigma", c.sigma);
  c.prior = s.str("prior", c.prior);
  c.poisson_mean = s.num("poisson-mean", c.poisson_mean);
  c.x_scale = s.num("x-scale", c.x_scale);
  if (c.n_obs < 1 || c.p < 0 || c.k_max < 0) throw ConfigError("need n-obs >= 1, p >= 0 and k-max >= 0");
  if (c.k_true < 0 || c.k_true > c.k_max) throw ConfigError("need 0 <= k-true <= k-max");
  if (c.alpha_true.size() != c.k_true) throw ConfigError("alpha-true must list k-true coefficients");
  if (c.beta_true.size() != 0 && c.beta_true.size() != c.p) throw ConfigError("beta-true must list p coefficients");
  if (!(c.tau_true > 0.0) || !(c.sigma > 0.0)) throw ConfigError("tau and sigma must be positive");
  if (c.prior != "uniform" && c.prior != "poisson") throw ConfigError("prior must be uniform or poisson");
  return c;
}

inline ARData load_ar_data(const std::string& path) {
  std::ifstream in = open_input(path);
  return read_ar_data(in);
}

}  // namespace detail

inline int cmd_simulate_ar(const Settings& s, std::ostream& log) {
  const ARSimConfig c = detail::sim_config(s);
  RngStream rng(detail::seed_of(s));
  const ARData d = simulate_ar_dataset(c, rng);
  const P1Report p1 = check_p1(d);
  if (!p1.ok) throw InternalError("simulate-ar: generated data fails (P1): " + p1.reason);
  const std::string path = s.str("out");
  std::ofstream out = open_output(path);
  write_ar_data(out, d, s.hash());
  log << "wrote " << path << " (N=" << d.n_obs() << ", p=" << d.p() << ", k_max=" << d.k_max << ")\n";
  log << "(P1) OK\n";
  return 0;
}

inline int cmd_run(const Settings& s, std::ostream& log) {
  const std::string sampler = s.str("sampler", "ar");
  if (!s.has("data")) throw ConfigError("run: set 'data' to a dataset path");
  const Eigen::Index n = s.integer("n");
  const Eigen::Index burn = detail::burn_in_of(s, n);
  const std::uint64_t seed = detail::seed_of(s);
  RngStream chain_rng(seed, 0);
  RngStream noise_rng(seed, 1);
  Trace tr;
  DeltaSpec spec;
  if (sampler == "ar") {
    const ARProblem pr(detail::load_ar_data(s.str("data")));
    std::string fn = s.str("functions", "auto");
    if (fn == "auto") fn = (pr.data().k_max == 1 && pr.data().p() == 1) ? "toy" : "orders";
    ARFunctions which;
    if (fn == "toy") {
      if (pr.data().k_max != 1) throw ConfigError("run: toy functions need k_max = 1");
      which = ARFunctions::ToyMoments;
      spec = ar_h_spec();
    } else if (fn == "orders") {
      which = ARFunctions::OrderIndicators;
      spec = identity_spec(pr.data().k_max + 1);
    } else {
      throw ConfigError("run: functions must be toy, orders or auto");
    }
    tr = run_ar_chain(pr, ar_initial_state(pr), move_probs_green(pr.data().f_k), n, burn, which, chain_rng);
  } else if (sampler == "probit") {
    ProbitData d = load_probit_csv(s.str("data"), s.flag("standardize", true));
    d.sigma = s.num("prior-sd", 1.0);
    d.p_slab = s.num("p-slab", 0.5);
    const ProbitProblem pr(std::move(d));
    tr = run_probit_chain(pr, probit_empty_state(pr), n, burn, chain_rng);
    spec = identity_spec(pr.data().r());
  } else {
    throw ConfigError("run: sampler must be ar or probit");
  }
  tr.meta.config_hash = s.hash();
  {
    std::ofstream out = open_output(s.str("trace-out"));
    write_trace(out, tr);
  }
  const SimCIReport rep = simultaneous_cis(tr, spec, detail::ci_options(s, spec.m), noise_rng);
  {
    std::ofstream out = open_output(s.str("report-out"));
    write_report(out, rep, tr.meta);
  }
  log << "sampler " << sampler << ", n " << n << ", burn-in " << burn << ", xi " << format_double(rep.xi) << '\n';
  const Vector c = rep.center();
  for (Eigen::Index i = 0; i < rep.h_point.size(); ++i) {
    log << i << '\t' << format_double(c(i)) << "\t[" << format_double(rep.intervals(i, 0)) << ", "
        << format_double(rep.intervals(i, 1)) << "]\n";
  }
  const std::vector<std::string> bad = report_violations(rep);
  for (const std::string& b : bad) log << "violation: " << b << '\n';
  return bad.empty() ? 0 : 1;
}

struct CoverageRow {
  double epsilon = 0.0;
  double coverage = 0.0;
  double se = 0.0;
  Vector mean_width;
};

struct CoverageResult {
  ToyTruth truth;
  Eigen::Index reps = 0;
  std::vector<CoverageRow> rows;
};

// Replication r runs its chain on stream 2r and draws the noise for every
// epsilon, in grid order, from stream 2r + 1.
inline CoverageResult run_coverage(const Settings& s, std::ostream& log) {
  ARData d;
  if (s.has("data")) {
    d = detail::load_ar_data(s.str("data"));
  } else {
    RngStream toy_rng(static_cast<std::uint64_t>(s.integer("toy-seed")));
    d = simulate_ar_dataset(ARSimConfig{}, toy_rng);
  }
  if (d.k_max != 1 || d.p() != 1 || d.n_obs() > 5) {
    throw ConfigError(
        "coverage: the exact posterior is only available for toy datasets (k_max = p = 1, N <= 5); "
        "generate one with 'simulate-ar --preset toy'");
  }
  CoverageResult res;
  res.truth = toy_quadrature_oracle(d);
  const Vector truth = res.truth.as_vector();
  log << "oracle: P(K=0) " << format_double(res.truth.p0) << ", P(K=1) " << format_double(res.truth.p1)
      << ", E[A|K=1] " << format_double(res.truth.mean_a) << ", SD[A|K=1] " << format_double(res.truth.sd_a) << '\n';

  const long long reps = s.integer("reps");
  if (reps < 1) throw ConfigError("coverage: reps must be >= 1");
  const Eigen::Index n = s.integer("n");
  const Eigen::Index burn = detail::burn_in_of(s, n);
  const std::vector<double> grid = s.list("eps-grid");
  if (grid.empty()) throw ConfigError("coverage: eps-grid is empty");
  for (double e : grid)
    if (!(e > 0.0)) throw ConfigError("coverage: every epsilon must be positive (the toy covariance is singular)");
  const std::uint64_t seed = detail::seed_of(s);
  Settings base = s;
  base["epsilon"] = "1";
  SimCIOptions opt = detail::ci_options(base, 4);
  const ARProblem pr(d);
  const ARMoveProbs q = move_probs_green(d.f_k);
  const DeltaSpec spec = ar_h_spec();

  const std::size_t g = grid.size();
  std::vector<char> hit(static_cast<std::size_t>(reps) * g, 0);
  std::vector<Vector> width(static_cast<std::size_t>(reps) * g);
  detail::parallel_for(static_cast<std::size_t>(reps), static_cast<std::size_t>(s.integer("workers", 0)),
                       [&](std::size_t r) {
                         RngStream chain_rng(seed, 2 * r);
                         RngStream noise_rng(seed, 2 * r + 1);
                         const Trace tr = run_ar_chain(pr, ar_initial_state(pr), q, n, burn,
                                                       ARFunctions::ToyMoments, chain_rng);
                         for (std::size_t e = 0; e < g; ++e) {
                           SimCIOptions o = opt;
                           o.epsilon = grid[e];
                           o.quantile.seed = seed + 1000003ull * r + e;
                           const SimCIReport rep = simultaneous_cis(tr, spec, o, noise_rng);
                           if (!report_violations(rep).empty()) {
                             throw InternalError("coverage: report invariants failed in replication " +
                                                 std::to_string(r));
                           }
                           hit[r * g + e] = covers(rep, truth) ? 1 : 0;
                           width[r * g + e] = rep.intervals.col(1) - rep.intervals.col(0);
                         }
                       });
  res.reps = reps;
  for (std::size_t e = 0; e < g; ++e) {
    CoverageRow row;
    row.epsilon = grid[e];
    row.mean_width = Vector::Zero(4);
    long long count = 0;
    for (long long r = 0; r < reps; ++r) {
      count += hit[static_cast<std::size_t>(r) * g + e];
      row.mean_width += width[static_cast<std::size_t>(r) * g + e];
    }
    row.coverage = static_cast<double>(count) / static_cast<double>(reps);
    row.se = std::sqrt(row.coverage * (1.0 - row.coverage) / static_cast<double>(reps));
    row.mean_width /= static_cast<double>(reps);
    res.rows.push_back(row);
  }
  return res;
}

inline void write_coverage_table(std::ostream& out, const CoverageResult& res, const std::string& hash) {
  write_hash_line(out, hash);
  out << "epsilon\tcoverage\tse\twidth_p0\twidth_p1\twidth_mean_a\twidth_sd_a\n";
  for (const CoverageRow& r : res.rows) {
    out << format_double(r.epsilon) << '\t' << format_double(r.coverage) << '\t' << format_double(r.se);
    for (Eigen::Index i = 0; i < r.mean_width.size(); ++i) out << '\t' << format_double(r.mean_width(i));
    out << '\n';
  }
}

inline int cmd_coverage(const Settings& s, std::ostream& log) {
  const CoverageResult res = run_coverage(s, log);
  std::ofstream out = open_output(s.str("out"));
  write_coverage_table(out, res, s.hash());
  write_coverage_table(log, res, s.hash());
  return 0;
}

namespace detail {

// Within kernels for a chain read from a file: the independence kernel with
// the largest constant P >= c_k 1 phi_k^T on each block.
inline WithinKernelSet independence_kernels(const FiniteTransChain& chain) {
  WithinKernelSet w;
  const auto groups = states_by_model(chain.model_of, chain.n_models);
  for (const auto& idx : groups) {
    const Vector phi = restricted_normalized(chain.stationary, idx);
    double c = 1.0;
    for (Eigen::Index a : idx)
      for (std::size_t b = 0; b < idx.size(); ++b)
        if (phi(static_cast<Eigen::Index>(b)) > 0.0) c = std::min(c, chain.transition(a, idx[b]) / phi(static_cast<Eigen::Index>(b)));
    w.kernels.push_back(Vector::Ones(static_cast<Eigen::Index>(idx.size())) * phi.transpose());
    w.c.push_back(std::max(0.0, c));
  }
  return w;
}

// The restriction of P to each block with the leaving mass put back on the
// diagonal, if it preserves phi_k for every model.
inline std::optional<WithinKernelSet> lazy_restricted_kernels(const FiniteTransChain& chain) {
  WithinKernelSet w;
  const auto groups = states_by_model(chain.model_of, chain.n_models);
  for (const auto& idx : groups) {
    const Vector phi = restricted_normalized(chain.stationary, idx);
    Matrix k = block(chain.transition, idx);
    double c = 1.0;
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      const double stay = chain.transition(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i)]);
      k(i, i) = 0.0;
      k(i, i) = 1.0 - k.row(i).sum();
      if (k(i, i) > 0.0) c = std::min(c, stay / k(i, i));
    }
    const Vector drift = (phi.transpose() * k).transpose() - phi;
    if (drift.cwiseAbs().maxCoeff() > 1e-10) return std::nullopt;
    w.kernels.push_back(k);
    w.c.push_back(std::max(0.0, c));
  }
  return w;
}

inline int smallest_h2_power(const FiniteTransChain& chain, int max_s) {
  const BoolMatrix gamma = build_gamma(chain);
  for (int s = 1; s <= max_s; ++s)
    if (check_h2_via_gamma(gamma, s)) return s;
  return 0;
}

inline int verify_chain_file(const Settings& s, std::ostream& out, std::ostream& log) {
  std::ifstream in = open_input(s.str("chain"));
  ChainFile cf = read_chain_file(in);
  const FiniteTransChain chain = make_chain(std::move(cf.p), std::move(cf.model_of));
  if (chain.n_models != cf.n_models) {
    throw StructureError("finite-verify: chain file declares " + std::to_string(cf.n_models) + " models");
  }
  out << "states " << chain.n_states() << '\n' << "models " << chain.n_models << '\n';
  for (int t = 1; t <= 5; ++t) {
    out << "norm_t" << t << ' ' << format_double(l20_operator_norm(matrix_power(chain.transition, t), chain.stationary))
        << '\n';
  }
  const double lam = lambda1(build_model_jump_matrix(chain));
  out << "lambda1 " << format_double(lam) << '\n';
  out << "h2_power " << smallest_h2_power(chain, std::max(1, 2 * chain.n_models)) << '\n';
  for (int s_step = 1; s_step <= 4; ++s_step) check_h2_via_s_step(chain, s_step);
  out << "decomposition\tt\tc_min\twithin_norm\tlhs\trhs\tholds\n";
  int failures = 0;
  auto report = [&](const char* name, const WithinKernelSet& w) {
    for (int t = 1; t <= 3; ++t) {
      const BoundReport r = spectral_bound_check(chain, w, t);
      out << name << '\t' << t << '\t' << format_double(r.c_term) << '\t' << format_double(r.within_norm) << '\t'
          << format_double(r.lhs) << '\t' << format_double(r.rhs) << '\t' << (r.holds ? 1 : 0) << '\n';
      if (!r.holds) ++failures;
    }
  };
  report("independence", independence_kernels(chain));
  if (auto lazy = lazy_restricted_kernels(chain)) report("restricted", *lazy);
  log << (failures == 0 ? "all bounds hold\n" : std::to_string(failures) + " bound violations\n");
  return failures == 0 ? 0 : 1;
}

inline int verify_ensemble(const Settings& s, long long count, std::ostream& out, std::ostream& log) {
  RngStream rng(seed_of(s));
  out << "chain\tstates\tmodels\tlambda1\tmin_margin\tholds\n";
  long long good = 0;
  for (long long i = 0; i < count; ++i) {
    const GeneratedChain g = random_decomposable_chain(rng);
    bool ok = true;
    double margin = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= 3; ++t) {
      const BoundReport r = spectral_bound_check(g.chain, g.within, t);
      ok = ok && r.holds;
      margin = std::min(margin, r.lhs - r.rhs);
    }
    const double c = *std::min_element(g.within.c.begin(), g.within.c.end());
    const Matrix s_mat = random_pi_kernel(g.chain.stationary, rng);
    const BoundReport dr = decomposition_inequality_check(g.chain.transition, s_mat, g.within.kernels, c,
                                                          g.chain.stationary, g.chain.model_of);
    ok = ok && dr.holds;
    margin = std::min(margin, dr.lhs - dr.rhs);
    try {
      for (int st = 1; st <= 4; ++st) check_h2_via_s_step(g.chain, st);
    } catch (const InternalError&) {
      ok = false;
    }
    good += ok ? 1 : 0;
    out << i << '\t' << g.chain.n_states() << '\t' << g.chain.n_models << '\t'
        << format_double(lambda1(build_model_jump_matrix(g.chain))) << '\t' << format_double(margin) << '\t'
        << (ok ? 1 : 0) << '\n';
  }
  log << good << '/' << count << " bounds hold\n";
  return good == count ? 0 : 1;
}

}  // namespace detail

inline int cmd_finite_verify(const Settings& s, std::ostream& log) {
  const long long ens = s.integer("random-ensemble", 0);
  if (ens < 0) throw ConfigError("finite-verify: random-ensemble must be >= 0");
  if (ens == 0 && !s.has("chain")) throw ConfigError("finite-verify: give a chain file or --random-ensemble R");
  std::ostringstream body, summary;
  const int code =
      ens > 0 ? detail::verify_ensemble(s, ens, body, summary) : detail::verify_chain_file(s, body, summary);
  std::ofstream out = open_output(s.str("out"));
  write_hash_line(out, s.hash());
  out << body.str() << summary.str();
  log << body.str() << summary.str();
  return code;
}

inline int cmd_plotdata(const Settings& s, std::ostream& log) {
  SimCIReport rep;
  if (s.has("report")) {
    std::ifstream in = open_input(s.str("report"));
    rep = read_report(in).report;
  } else if (s.has("trace")) {
    std::ifstream in = open_input(s.str("trace"));
    const Trace tr = read_trace(in);
    RngStream rng(detail::seed_of(s), 1);
    rep = simultaneous_cis(tr, identity_spec(tr.d()), detail::ci_options(s, tr.d()), rng);
  } else {
    throw ConfigError("plotdata: give --report or --trace");
  }
  const std::string path = s.str("out");
  std::ofstream out = open_output(path);
  write_plot_rows(out, rep, s.hash());
  log << "wrote " << rep.h_point.size() << " rows to " << path << '\n';
  return 0;
}

inline int run_command(const std::string& cmd, const Settings& s, std::ostream& log) {
  if (cmd == "simulate-ar") return cmd_simulate_ar(s, log);
  if (cmd == "run") return cmd_run(s, log);
  if (cmd == "coverage") return cmd_coverage(s, log);
  if (cmd == "finite-verify") return cmd_finite_verify(s, log);
  if (cmd == "plotdata") return cmd_plotdata(s, log);
  throw ConfigError("unknown command '" + cmd + "'");
}

}  // namespace rjmc
