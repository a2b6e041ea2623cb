#pragma once

// Plain-text persistence: run settings and their hash, traces, AR datasets,
// finite chain files and interval reports. Every writer starts with a
// "# config-hash <hex>" line; readers skip lines starting with '#'.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rjmc/ar_laplace.hpp"
#include "rjmc/error.hpp"
#include "rjmc/finite_spectral.hpp"
#include "rjmc/linalg.hpp"
#include "rjmc/uq.hpp"

namespace rjmc {

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

inline bool parse_int(const std::string& s, long long& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

// Settings
//
// Flat key -> value text, as read from a config file and flag overrides. An
// empty value means "not set". Typed getters raise ConfigError naming the
// key.
class Settings {
 public:
  Settings() = default;
  Settings(std::initializer_list<std::pair<const std::string, std::string>> init) : values_(init) {}

  std::string& operator[](const std::string& key) { return values_[key]; }
  const std::map<std::string, std::string>& values() const { return values_; }

  bool has(const std::string& key) const {
    auto it = values_.find(key);
    return it != values_.end() && !it->second.empty();
  }

  std::string str(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? std::string() : it->second;
  }

  std::string str(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
  }

  double num(const std::string& key) const {
    double v = 0.0;
    if (!parse_double(require(key), v)) bad(key, "a number");
    return v;
  }
  double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

  long long integer(const std::string& key) const {
    long long v = 0;
    if (!parse_int(require(key), v)) bad(key, "an integer");
    return v;
  }
  long long integer(const std::string& key, long long fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  bool flag(const std::string& key, bool fallback = false) const {
    if (!has(key)) return fallback;
    const std::string v = str(key);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    bad(key, "a boolean");
    return false;
  }

  // Comma- or space-separated numbers.
  std::vector<double> list(const std::string& key) const {
    std::string text = require(key);
    for (char& c : text)
      if (c == ',') c = ' ';
    std::istringstream in(text);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
      double v = 0.0;
      if (!parse_double(tok, v)) bad(key, "a list of numbers");
      out.push_back(v);
    }
    return out;
  }

  // 64-bit FNV-1a over the sorted "key=value" lines of every set key except
  // output paths and the worker count, which do not change results.
  std::string hash() const {
    std::uint64_t h = 14695981039346656037ull;
    for (const auto& [k, v] : values_) {
      if (v.empty() || k == "workers" || k == "config" || k == "out" ||
          (k.size() > 4 && k.compare(k.size() - 4, 4, "-out") == 0)) {
        continue;
      }
      for (char c : k + "=" + v + "\n") {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
      }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  const std::string& require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) throw ConfigError("missing setting '" + key + "'");
    return it->second;
  }
  [[noreturn]] void bad(const std::string& key, const char* what) const {
    throw ConfigError("setting '" + key + "' must be " + what + ", got '" + str(key) + "'");
  }

  std::map<std::string, std::string> values_;
};

inline void write_hash_line(std::ostream& out, const std::string& hash) { out << "# config-hash " << hash << '\n'; }

// Reads "# config-hash <hex>" if it is the first line, else "".
inline std::string read_hash_line(const std::string& first_line) {
  const std::string tag = "# config-hash ";
  return first_line.rfind(tag, 0) == 0 ? first_line.substr(tag.size()) : std::string();
}

struct TextLine {
  std::size_t number = 0;
  std::vector<std::string> tokens;
};

// Whitespace-split, non-blank, non-comment lines with their 1-based numbers.
// The config hash, if present, is returned through `hash`.
inline std::vector<TextLine> read_text_lines(std::istream& in, std::string* hash = nullptr) {
  std::vector<TextLine> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (no == 1 && hash) *hash = read_hash_line(line);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    TextLine tl;
    tl.number = no;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) tl.tokens.push_back(tok);
    out.push_back(std::move(tl));
  }
  return out;
}

// Sequential reader over the tokens of several lines.
class TokenCursor {
 public:
  explicit TokenCursor(const std::vector<TextLine>& lines, std::string what)
      : lines_(lines), what_(std::move(what)) {}

  double number(const char* name) {
    const std::string& t = next(name);
    double v = 0.0;
    if (!parse_double(t, v)) throw ParseError(what_ + ": " + name + " is not a number ('" + t + "')", last_line_);
    return v;
  }
  long long integer(const char* name) {
    const std::string& t = next(name);
    long long v = 0;
    if (!parse_int(t, v)) throw ParseError(what_ + ": " + name + " is not an integer ('" + t + "')", last_line_);
    return v;
  }
  std::string word(const char* name) { return next(name); }
  bool done() const { return li_ >= lines_.size(); }
  std::size_t last_line() const { return last_line_; }
  std::size_t line() const {
    if (lines_.empty()) return 1;
    return li_ < lines_.size() ? lines_[li_].number : lines_.back().number + 1;
  }
  // Next line must start here: rejects trailing tokens on the current one.
  void end_line() {
    if (li_ < lines_.size() && ti_ != 0) {
      throw ParseError(what_ + ": unexpected extra values", lines_[li_].number);
    }
  }
  void expect_end() {
    if (!done()) throw ParseError(what_ + ": unexpected trailing data", line());
  }

 private:
  const std::string& next(const char* name) {
    if (done()) throw ParseError(what_ + ": missing " + std::string(name), line());
    last_line_ = lines_[li_].number;
    const std::string& t = lines_[li_].tokens[ti_++];
    if (ti_ == lines_[li_].tokens.size()) {
      ++li_;
      ti_ = 0;
    }
    return t;
  }
  const std::vector<TextLine>& lines_;
  std::string what_;
  std::size_t li_ = 0, ti_ = 0, last_line_ = 0;
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  return out;
}

// Trace: "n d sampler_id seed", then n rows of d tab-separated values.
inline void write_trace(std::ostream& out, const Trace& tr) {
  write_hash_line(out, tr.meta.config_hash);
  out << tr.n() << ' ' << tr.d() << ' ' << tr.meta.sampler_id << ' ' << tr.meta.seed << '\n';
  for (Eigen::Index t = 0; t < tr.n(); ++t) {
    for (Eigen::Index j = 0; j < tr.d(); ++j) {
      if (j) out << '\t';
      out << format_double(tr.f_values(t, j));
    }
    out << '\n';
  }
}

inline Trace read_trace(std::istream& in) {
  Trace tr;
  const std::vector<TextLine> lines = read_text_lines(in, &tr.meta.config_hash);
  if (lines.empty()) throw ParseError("trace: empty file", 1);
  const TextLine& head = lines[0];
  long long n = 0, d = 0;
  if (head.tokens.size() != 4 || !parse_int(head.tokens[0], n) || !parse_int(head.tokens[1], d) || n < 0 || d < 0) {
    throw ParseError("trace: header must be 'n d sampler_id seed'", head.number);
  }
  tr.meta.sampler_id = head.tokens[2];
  long long seed = 0;
  if (!parse_int(head.tokens[3], seed)) throw ParseError("trace: seed is not an integer", head.number);
  tr.meta.seed = static_cast<std::uint64_t>(seed);
  if (static_cast<long long>(lines.size()) - 1 != n) {
    throw ParseError("trace: expected " + std::to_string(n) + " rows, found " + std::to_string(lines.size() - 1),
                     lines.back().number);
  }
  tr.f_values.resize(n, d);
  for (long long t = 0; t < n; ++t) {
    const TextLine& row = lines[static_cast<std::size_t>(t + 1)];
    if (static_cast<long long>(row.tokens.size()) != d) {
      throw ParseError("trace: expected " + std::to_string(d) + " values per row", row.number);
    }
    for (long long j = 0; j < d; ++j) {
      double v = 0.0;
      if (!parse_double(row.tokens[static_cast<std::size_t>(j)], v)) {
        throw ParseError("trace: non-numeric value '" + row.tokens[static_cast<std::size_t>(j)] + "'", row.number);
      }
      tr.f_values(t, j) = v;
    }
  }
  return tr;
}

// AR dataset: "N p k_max sigma", the k_max starting values (oldest first),
// N rows "y_i x_i1 .. x_ip", then the k_max + 1 prior masses f_K.
inline void write_ar_data(std::ostream& out, const ARData& d, const std::string& hash) {
  write_hash_line(out, hash);
  out << d.n_obs() << ' ' << d.p() << ' ' << d.k_max << ' ' << format_double(d.sigma) << '\n';
  for (Eigen::Index j = 0; j < d.y_start.size(); ++j) out << (j ? "\t" : "") << format_double(d.y_start(j));
  out << '\n';
  for (Eigen::Index i = 0; i < d.n_obs(); ++i) {
    out << format_double(d.y(i));
    for (Eigen::Index j = 0; j < d.p(); ++j) out << '\t' << format_double(d.x(i, j));
    out << '\n';
  }
  for (Eigen::Index k = 0; k < d.f_k.size(); ++k) out << (k ? "\t" : "") << format_double(d.f_k(k));
  out << '\n';
}

inline ARData read_ar_data(std::istream& in) {
  const std::vector<TextLine> lines = read_text_lines(in);
  TokenCursor cur(lines, "AR data");
  ARData d;
  const long long n = cur.integer("N"), p = cur.integer("p"), k_max = cur.integer("k_max");
  const std::size_t head_line = cur.last_line();
  d.sigma = cur.number("sigma");
  if (n < 1 || p < 0 || k_max < 0) throw ParseError("AR data: need N >= 1, p >= 0, k_max >= 0", head_line);
  cur.end_line();
  d.k_max = static_cast<int>(k_max);
  d.y_start.resize(k_max);
  for (long long j = 0; j < k_max; ++j) d.y_start(j) = cur.number("starting value");
  cur.end_line();
  d.y.resize(n);
  d.x.resize(n, p);
  for (long long i = 0; i < n; ++i) {
    d.y(i) = cur.number("response");
    for (long long j = 0; j < p; ++j) d.x(i, j) = cur.number("predictor");
    cur.end_line();
  }
  d.f_k.resize(k_max + 1);
  for (long long k = 0; k <= k_max; ++k) d.f_k(k) = cur.number("prior mass");
  cur.expect_end();
  try {
    validate_ar_data(d);
  } catch (const DomainError& e) {
    throw ParseError(std::string("AR data: ") + e.what(), lines.back().number);
  }
  return d;
}

// Finite chain file: "n m", n rows of n transition probabilities, one row of
// n model indices in 0..m-1. Rows must sum to 1 within 1e-9 and are then
// renormalized.
struct ChainFile {
  Matrix p;
  std::vector<int> model_of;
  int n_models = 0;
};

inline ChainFile read_chain_file(std::istream& in) {
  const std::vector<TextLine> lines = read_text_lines(in);
  if (lines.empty()) throw ParseError("chain file: empty", 1);
  long long n = 0, m = 0;
  const TextLine& head = lines[0];
  if (head.tokens.size() != 2 || !parse_int(head.tokens[0], n) || !parse_int(head.tokens[1], m) || n < 1 || m < 1) {
    throw ParseError("chain file: first line must be 'n m' with n, m >= 1", head.number);
  }
  if (m > n) throw ParseError("chain file: more models than states", head.number);
  if (static_cast<long long>(lines.size()) != n + 2) {
    const std::size_t where = static_cast<long long>(lines.size()) > n + 2
                                  ? lines[static_cast<std::size_t>(n + 2)].number
                                  : lines.back().number + 1;
    throw ParseError("chain file: expected " + std::to_string(n) + " matrix rows and one model row", where);
  }
  ChainFile cf;
  cf.n_models = static_cast<int>(m);
  cf.p.resize(n, n);
  for (long long i = 0; i < n; ++i) {
    const TextLine& row = lines[static_cast<std::size_t>(i + 1)];
    if (static_cast<long long>(row.tokens.size()) != n) {
      throw ParseError("chain file: row " + std::to_string(i) + " needs " + std::to_string(n) + " entries",
                       row.number);
    }
    for (long long j = 0; j < n; ++j) {
      double v = 0.0;
      if (!parse_double(row.tokens[static_cast<std::size_t>(j)], v) || !std::isfinite(v)) {
        throw ParseError("chain file: bad probability '" + row.tokens[static_cast<std::size_t>(j)] + "'", row.number);
      }
      if (v < 0.0) throw ParseError("chain file: negative probability", row.number);
      cf.p(i, j) = v;
    }
    const double s = cf.p.row(i).sum();
    if (std::fabs(s - 1.0) > 1e-9) {
      throw ParseError("chain file: row " + std::to_string(i) + " sums to " + format_double(s) + ", not 1",
                       row.number);
    }
    cf.p.row(i) /= s;
  }
  const TextLine& models = lines.back();
  if (static_cast<long long>(models.tokens.size()) != n) {
    throw ParseError("chain file: model row needs " + std::to_string(n) + " indices", models.number);
  }
  std::vector<char> used(static_cast<std::size_t>(m), 0);
  for (const std::string& t : models.tokens) {
    long long k = 0;
    if (!parse_int(t, k) || k < 0 || k >= m) {
      throw ParseError("chain file: model index '" + t + "' outside 0.." + std::to_string(m - 1), models.number);
    }
    used[static_cast<std::size_t>(k)] = 1;
    cf.model_of.push_back(static_cast<int>(k));
  }
  for (long long k = 0; k < m; ++k)
    if (!used[static_cast<std::size_t>(k)]) {
      throw ParseError("chain file: model " + std::to_string(k) + " has no states", models.number);
    }
  return cf;
}

// Report: "key value" lines, then "intervals" and m rows
// "index h_point g_noise v_diag lo hi".
inline void write_report(std::ostream& out, const SimCIReport& r, const TraceMeta& meta) {
  write_hash_line(out, meta.config_hash);
  const Eigen::Index m = r.h_point.size();
  out << "sampler " << meta.sampler_id << '\n'
      << "seed " << meta.seed << '\n'
      << "alpha " << format_double(r.alpha) << '\n'
      << "epsilon " << format_double(r.epsilon) << '\n'
      << "n " << r.n << '\n'
      << "a_n " << r.a_n << '\n'
      << "b_n " << r.b_n << '\n'
      << "xi " << format_double(r.xi) << '\n'
      << "xi_probability " << format_double(r.xi_probability) << '\n'
      << "xi_mc_error " << format_double(r.xi_mc_error) << '\n'
      << "inflate_only " << (r.inflate_only ? 1 : 0) << '\n'
      << "m " << m << '\n'
      << "intervals\n";
  for (Eigen::Index i = 0; i < m; ++i) {
    out << i << '\t' << format_double(r.h_point(i)) << '\t' << format_double(r.g_noise(i)) << '\t'
        << format_double(r.v_diag(i)) << '\t' << format_double(r.intervals(i, 0)) << '\t'
        << format_double(r.intervals(i, 1)) << '\n';
  }
}

struct StoredReport {
  SimCIReport report;
  TraceMeta meta;
};

inline StoredReport read_report(std::istream& in) {
  StoredReport sr;
  const std::vector<TextLine> lines = read_text_lines(in, &sr.meta.config_hash);
  SimCIReport& r = sr.report;
  std::map<std::string, std::string> kv;
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    const TextLine& l = lines[i];
    if (l.tokens.size() == 1 && l.tokens[0] == "intervals") break;
    if (l.tokens.size() != 2) throw ParseError("report: expected 'key value'", l.number);
    kv[l.tokens[0]] = l.tokens[1];
  }
  if (i == lines.size()) throw ParseError("report: missing 'intervals' section", lines.empty() ? 1 : lines.back().number + 1);
  const std::size_t section = lines[i].number;
  auto get_num = [&](const char* key) {
    double v = 0.0;
    auto it = kv.find(key);
    if (it == kv.end() || !parse_double(it->second, v)) throw ParseError(std::string("report: bad or missing ") + key, section);
    return v;
  };
  auto get_int = [&](const char* key) {
    long long v = 0;
    auto it = kv.find(key);
    if (it == kv.end() || !parse_int(it->second, v)) throw ParseError(std::string("report: bad or missing ") + key, section);
    return v;
  };
  sr.meta.sampler_id = kv.count("sampler") ? kv["sampler"] : "none";
  sr.meta.seed = static_cast<std::uint64_t>(get_int("seed"));
  r.alpha = get_num("alpha");
  r.epsilon = get_num("epsilon");
  r.n = get_int("n");
  r.a_n = get_int("a_n");
  r.b_n = get_int("b_n");
  r.xi = get_num("xi");
  r.xi_probability = get_num("xi_probability");
  r.xi_mc_error = get_num("xi_mc_error");
  r.inflate_only = get_int("inflate_only") != 0;
  const long long m = get_int("m");
  if (m < 0 || static_cast<long long>(lines.size() - i - 1) != m) {
    throw ParseError("report: expected " + std::to_string(m) + " interval rows", section);
  }
  r.h_point.resize(m);
  r.g_noise.resize(m);
  r.v_diag.resize(m);
  r.intervals.resize(m, 2);
  for (long long row = 0; row < m; ++row) {
    const TextLine& l = lines[i + 1 + static_cast<std::size_t>(row)];
    std::vector<double> v(6);
    if (l.tokens.size() != 6) throw ParseError("report: interval rows need 6 columns", l.number);
    for (std::size_t c = 0; c < 6; ++c)
      if (!parse_double(l.tokens[c], v[c])) throw ParseError("report: non-numeric value '" + l.tokens[c] + "'", l.number);
    if (v[0] != static_cast<double>(row)) throw ParseError("report: interval rows out of order", l.number);
    r.h_point(row) = v[1];
    r.g_noise(row) = v[2];
    r.v_diag(row) = v[3];
    r.intervals(row, 0) = v[4];
    r.intervals(row, 1) = v[5];
  }
  return sr;
}

// Plot data: "index point center lo hi" per quantity.
inline void write_plot_rows(std::ostream& out, const SimCIReport& r, const std::string& hash) {
  write_hash_line(out, hash);
  out << "index\tpoint\tcenter\tlo\thi\n";
  const Eigen::Index m = r.h_point.size();
  if (m == 0) return;
  const Vector c = r.center();
  for (Eigen::Index i = 0; i < m; ++i) {
    out << i << '\t' << format_double(r.h_point(i)) << '\t' << format_double(c(i)) << '\t'
        << format_double(r.intervals(i, 0)) << '\t' << format_double(r.intervals(i, 1)) << '\n';
  }
}

}  // namespace rjmc
