#pragma once

#include <stdexcept>
#include <string>

namespace rjmc {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the documented parameter domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Floating-point failure: factorization breakdown, non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Cholesky failure carrying the failing leading minor (1-based).
class FactorizationError : public NumericError {
 public:
  FactorizationError(const std::string& what, std::size_t minor)
      : NumericError(what), minor_(minor) {}
  std::size_t minor() const noexcept { return minor_; }

 private:
  std::size_t minor_;
};

// Chain structure violates a precondition (reducibility, partition).
class StructureError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the 1-based offending line/row.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Root finder could not bracket or converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

// Asymptotic covariance singular with no injected noise.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Simulated data kept failing its validity checks.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A mathematical identity that must hold by construction was violated.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rjmc
