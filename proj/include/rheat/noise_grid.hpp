#pragma once

// Fine scheme grid and the coarse-to-fine noise maps.
//
// Fine grid at level n: t_i = i/2^{4n} (i = 0..2^{4n}), x_j = j/2^{2n} with
// j in [-N+1, N-1], N = 2^{3n+1}, so that L = N h = 2^{n+1}.
// The noise is piecewise constant on coarse cells of side 2^{-n} and vanishes
// outside [0,1) x [-2^n, 2^n).

#include <cmath>
#include <string>

#include "rheat/error.hpp"
#include "rheat/fractional_field.hpp"

namespace rheat {

struct FineGrid {
  int n = 1;

  long time_steps() const noexcept { return 1L << (4 * n); }
  /// N = 2^{3n+1}; coefficient indices run over [-N+1, N-1].
  long n_half() const noexcept { return 1L << (3 * n + 1); }
  long nodes() const noexcept { return 2 * n_half() - 1; }
  double h() const noexcept { return std::ldexp(1.0, -2 * n); }
  double dt() const noexcept { return std::ldexp(1.0, -4 * n); }
  double big_l() const noexcept { return std::ldexp(1.0, n + 1); }
  double time(long i) const noexcept { return static_cast<double>(i) * dt(); }
  double point(long j) const noexcept { return static_cast<double>(j) * h(); }
};

/// Coarse time cell containing the fine node t_i; the last node i = 2^{4n}
/// is clamped into the final cell.
inline long coarse_time_index(long i, int n) {
  const long steps = 1L << (4 * n);
  if (i < 0 || i > steps) {
    fail(ErrorKind::domain, "coarse_time_index: fine index " + std::to_string(i) + " out of range");
  }
  return std::min(i >> (3 * n), (1L << n) - 1);
}

/// Coarse space cell containing x_j: floor(j / 2^n), rounding toward -inf.
inline long coarse_space_index(long j, int n) {
  const long limit = (1L << (3 * n + 1)) - 1;
  if (j < -limit || j > limit) {
    fail(ErrorKind::domain, "coarse_space_index: fine index " + std::to_string(j) + " out of range");
  }
  return j >> n;  // arithmetic shift is floor division in C++20
}

/// True iff x_j sits on a coarse node, i.e. j = 0 mod 2^n.
inline bool on_coarse_node(long j, int n) noexcept { return (j & ((1L << n) - 1)) == 0; }

namespace detail {

/// Rectangular increment, zero for cells outside the stored sheet (the noise
/// has no support there).
inline double increment_or_zero(const SheetSample& sheet, long k, long l) {
  const auto& cfg = sheet.config();
  if (k < 0 || k >= cfg.time_cells() || l < -cfg.space_half_cells() || l >= cfg.space_half_cells()) return 0.0;
  return rect_increment(sheet, k, l);
}

}  // namespace detail

/// Load increment delta B_{ij} for fine time step i -> i+1 and fine node j.
inline double delta_b(const SheetSample& sheet, long i, long j) {
  const int n = sheet.level();
  const long ci = coarse_time_index(i, n);
  const long cj = coarse_space_index(j, n);
  if (on_coarse_node(j, n)) {
    return 0.5 * detail::increment_or_zero(sheet, ci, cj - 1) + 0.5 * detail::increment_or_zero(sheet, ci, cj);
  }
  return detail::increment_or_zero(sheet, ci, cj);
}

/// Discretized noise 2^{2n} * increment on the coarse cell containing (t, x).
inline double noise_eval(const SheetSample& sheet, double t, double x) {
  if (!(t >= 0.0 && t < 1.0)) fail(ErrorKind::domain, "noise_eval: t must lie in [0,1)");
  const int n = sheet.level();
  const double scale = std::ldexp(1.0, n);
  const long k = static_cast<long>(std::floor(t * scale));
  const long l = static_cast<long>(std::floor(x * scale));
  return std::ldexp(detail::increment_or_zero(sheet, k, l), 2 * n);
}

/// Bilinear interpolant of the sheet between coarse nodes.
inline double bilinear_sheet_eval(const SheetSample& sheet, double t, double x) {
  const auto& cfg = sheet.config();
  const double scale = std::ldexp(1.0, cfg.n);
  const double xmax = std::ldexp(1.0, cfg.n);
  if (!(t >= 0.0 && t <= 1.0) || !(x >= -xmax && x <= xmax)) {
    fail(ErrorKind::domain, "bilinear_sheet_eval: (t, x) outside the coarse grid");
  }
  const long k = std::min(static_cast<long>(std::floor(t * scale)), cfg.time_cells() - 1);
  const long l = std::min(static_cast<long>(std::floor(x * scale)), cfg.space_half_cells() - 1);
  const double a = t * scale - static_cast<double>(k);
  const double b = x * scale - static_cast<double>(l);
  return (1 - a) * (1 - b) * sheet.at(k, l) + (1 - a) * b * sheet.at(k, l + 1) +
         a * (1 - b) * sheet.at(k + 1, l) + a * b * sheet.at(k + 1, l + 1);
}

/// The discretized noise viewed as a cellwise-constant field for exact load
/// assembly: cell (k, l) is [k c, (k+1) c) x [l c, (l+1) c), c = 2^{-n}.
class DiscretizedNoise {
 public:
  explicit DiscretizedNoise(const SheetSample& sheet)
      : n_(sheet.level()),
        half_(sheet.config().space_half_cells()),
        cells_(sheet.config().time_cells(), 2 * half_) {
    for (long k = 0; k < cells_.rows(); ++k)
      for (long l = -half_; l < half_; ++l) cells_(k, l + half_) = std::ldexp(rect_increment(sheet, k, l), 2 * n_);
  }

  double time_cell() const noexcept { return std::ldexp(1.0, -n_); }
  double space_cell() const noexcept { return std::ldexp(1.0, -n_); }
  double space_origin() const noexcept { return 0.0; }

  double value(long k, long l) const noexcept {
    if (k < 0 || k >= cells_.rows() || l < -half_ || l >= half_) return 0.0;
    return cells_(k, l + half_);
  }

  int level() const noexcept { return n_; }
  long time_cells() const noexcept { return cells_.rows(); }
  long space_half_cells() const noexcept { return half_; }

 private:
  int n_;
  long half_;
  Matrix cells_;
};

}  // namespace rheat
