#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "rjmc/error.hpp"

namespace rjmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Lower Cholesky factor of a symmetric matrix; only the lower triangle is
// read. Throws FactorizationError naming the first leading minor that is not
// positive.
inline Matrix cholesky_lower(const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw DomainError("cholesky_lower: matrix is not square");
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw FactorizationError("cholesky_lower: leading minor " + std::to_string(j + 1) +
                                   " is not positive definite",
                               static_cast<std::size_t>(j + 1));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

inline double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

// Symmetric to within `rel` of the largest entry.
inline bool is_symmetric(const Matrix& a, double rel = 1e-12) {
  if (a.rows() != a.cols()) return false;
  return max_abs(a - a.transpose()) <= rel * std::max(max_abs(a), 1e-300);
}

// Smallest eigenvalue of the symmetric part.
inline double min_symmetric_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace rjmc
