#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rheat/error.hpp"

namespace rheat {

/// Tridiagonal matrix stored by bands. lower[k] = A(k+1, k), upper[k] = A(k, k+1).
struct TridiagonalMatrix {
  std::vector<double> diag;
  std::vector<double> lower;
  std::vector<double> upper;

  static TridiagonalMatrix symmetric(std::size_t size, double diagonal, double off) {
    TridiagonalMatrix m;
    m.diag.assign(size, diagonal);
    m.lower.assign(size > 0 ? size - 1 : 0, off);
    m.upper = m.lower;
    return m;
  }

  std::size_t size() const noexcept { return diag.size(); }
  bool is_symmetric() const noexcept { return lower == upper; }

  TridiagonalMatrix scaled(double factor) const {
    TridiagonalMatrix m = *this;
    for (double& v : m.diag) v *= factor;
    for (double& v : m.lower) v *= factor;
    for (double& v : m.upper) v *= factor;
    return m;
  }

  friend TridiagonalMatrix operator+(TridiagonalMatrix a, const TridiagonalMatrix& b) {
    if (a.size() != b.size()) fail(ErrorKind::domain, "tridiagonal sum: size mismatch");
    for (std::size_t k = 0; k < a.diag.size(); ++k) a.diag[k] += b.diag[k];
    for (std::size_t k = 0; k < a.lower.size(); ++k) {
      a.lower[k] += b.lower[k];
      a.upper[k] += b.upper[k];
    }
    return a;
  }

  std::vector<double> multiply(std::span<const double> v) const {
    const std::size_t n = size();
    if (v.size() != n) fail(ErrorKind::domain, "tridiagonal multiply: size mismatch");
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      double acc = diag[k] * v[k];
      if (k > 0) acc += lower[k - 1] * v[k - 1];
      if (k + 1 < n) acc += upper[k] * v[k + 1];
      out[k] = acc;
    }
    return out;
  }

  Eigen::MatrixXd dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      out(k, k) = diag[k];
      if (k + 1 < n) {
        out(k + 1, k) = lower[k];
        out(k, k + 1) = upper[k];
      }
    }
    return out;
  }
};

/// Thomas elimination factors of a tridiagonal matrix, reusable across
/// right-hand sides. Requires a non-vanishing pivot at every row, which holds
/// for strictly diagonally dominant or SPD input.
class ThomasFactor {
 public:
  explicit ThomasFactor(const TridiagonalMatrix& a) : lower_(a.lower) {
    const std::size_t n = a.size();
    double scale = 0.0;
    for (double d : a.diag) scale = std::max(scale, std::abs(d));
    const double tiny = 1e-14 * scale;
    inv_pivot_.resize(n);
    c_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double pivot = k == 0 ? a.diag[0] : a.diag[k] - a.lower[k - 1] * c_[k - 1];
      if (!(std::abs(pivot) > tiny)) {
        fail(ErrorKind::numerical, "thomas_solve: zero pivot at row " + std::to_string(k));
      }
      inv_pivot_[k] = 1.0 / pivot;
      c_[k] = k + 1 < n ? a.upper[k] * inv_pivot_[k] : 0.0;
    }
  }

  std::size_t size() const noexcept { return c_.size(); }

  std::vector<double> solve(std::span<const double> rhs) const {
    const std::size_t n = size();
    if (rhs.size() != n) fail(ErrorKind::domain, "thomas_solve: size mismatch");
    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double carry = k == 0 ? 0.0 : lower_[k - 1] * d[k - 1];
      d[k] = (rhs[k] - carry) * inv_pivot_[k];
    }
    for (std::size_t k = n; k-- > 1;) d[k - 1] -= c_[k - 1] * d[k];
    return d;
  }

 private:
  std::vector<double> lower_;
  std::vector<double> inv_pivot_;
  std::vector<double> c_;
};

inline std::vector<double> thomas_solve(const TridiagonalMatrix& a, std::span<const double> rhs) {
  if (rhs.size() != a.size()) fail(ErrorKind::domain, "thomas_solve: size mismatch");
  return ThomasFactor(a).solve(rhs);
}

/// Lower bidiagonal E: diag[k] = E(k,k), sub[k] = E(k+1,k).
struct LowerBidiagonal {
  std::vector<double> diag;
  std::vector<double> sub;

  Eigen::MatrixXd dense() const {
    const auto n = static_cast<Eigen::Index>(diag.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      out(k, k) = diag[k];
      if (k + 1 < n) out(k + 1, k) = sub[k];
    }
    return out;
  }
};

/// Factor a = E^T E with E lower bidiagonal and positive diagonal. This is the
/// reversed-order Cholesky factorization, so the recursion runs bottom-up:
///   a(k,k)   = E(k,k)^2 + E(k+1,k)^2
///   a(k,k+1) = E(k+1,k) E(k+1,k+1)
inline LowerBidiagonal cholesky_factor(const TridiagonalMatrix& a) {
  if (!a.is_symmetric()) fail(ErrorKind::numerical, "cholesky_factor: matrix is not symmetric");
  const std::size_t n = a.size();
  LowerBidiagonal e;
  e.diag.resize(n);
  e.sub.resize(n > 0 ? n - 1 : 0);
  for (std::size_t k = n; k-- > 0;) {
    double rest = a.diag[k];
    if (k + 1 < n) {
      e.sub[k] = a.upper[k] / e.diag[k + 1];
      rest -= e.sub[k] * e.sub[k];
    }
    if (!(rest > 0.0)) fail(ErrorKind::numerical, "cholesky_factor: matrix is not positive definite");
    e.diag[k] = std::sqrt(rest);
  }
  return e;
}

}  // namespace rheat
