#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace csf {

/// Thomas algorithm for a tridiagonal system.
///
/// Row i reads lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i];
/// lower[0] and upper[n-1] are ignored. No pivoting, so the matrix should be
/// diagonally dominant (the backward-Euler matrices here are M-matrices).
template <class Real>
std::vector<Real> solve_tridiagonal(std::span<const Real> lower,
                                    std::span<const Real> diag,
                                    std::span<const Real> upper,
                                    std::span<const Real> rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n) {
    throw std::invalid_argument("solve_tridiagonal: size mismatch");
  }
  if (n == 0) return {};
  std::vector<Real> c(n), d(n), x(n);
  Real beta = diag[0];
  if (beta == Real(0)) throw std::runtime_error("solve_tridiagonal: zero pivot");
  c[0] = upper[0] / beta;
  d[0] = rhs[0] / beta;
  for (std::size_t i = 1; i < n; ++i) {
    beta = diag[i] - lower[i] * c[i - 1];
    if (beta == Real(0)) throw std::runtime_error("solve_tridiagonal: zero pivot");
    c[i] = upper[i] / beta;
    d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

}  // namespace csf
