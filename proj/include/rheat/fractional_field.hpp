#pragma once

// Spectrally cut-off fractional sheet B^{kappa,n} sampled on the coarse dyadic
// grid t_i = i/2^n (i = 0..2^n), x_j = j/2^n (j = -2^{2n}..2^{2n}).
//
// The covariance factorizes as C0(s,t) * C1(x,y); each factor is a one-sided
// Riemann sum over the rescaled frequency interval (0,1] with midpoint nodes.
// Samples are drawn as D0 * W * D1 with D = symmetric square root of C.

#include <Eigen/Dense>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rheat/error.hpp"
#include "rheat/rng.hpp"

namespace rheat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class HurstPair {
 public:
  HurstPair(double h0, double h1) : h0_(h0), h1_(h1) {
    if (!(h0 > 0.0 && h0 < 1.0) || !(h1 > 0.0 && h1 < 1.0)) {
      fail(ErrorKind::domain, "Hurst indexes must lie in (0,1), got (" +
                                  std::to_string(h0) + ", " + std::to_string(h1) + ")");
    }
  }

  double h0() const noexcept { return h0_; }
  double h1() const noexcept { return h1_; }

  bool rough_regime() const noexcept { return 2.0 * h0_ + h1_ < 1.0; }

  /// Threshold regularity 1 - (2 H0 + H1); errors live in H^{-alpha}, alpha > alpha0.
  double alpha0() const noexcept { return 1.0 - (2.0 * h0_ + h1_); }

  friend bool operator==(const HurstPair&, const HurstPair&) = default;

 private:
  double h0_;
  double h1_;
};

struct SheetConfig {
  HurstPair hurst{0.25, 0.25};
  /// Cutoff exponent. +infinity selects the raw fractional sheet (no cutoff).
  double kappa = 1.0;
  int n = 1;
  int m0 = 10000;
  int m1 = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(kappa > 0.0)) fail(ErrorKind::domain, "kappa must be positive");
    if (n < 1 || n > 12) fail(ErrorKind::domain, "level n must be in [1, 12]");
    if (m0 < 1 || m1 < 1) fail(ErrorKind::domain, "quadrature resolutions m0, m1 must be >= 1");
  }

  bool raw_sheet() const noexcept { return std::isinf(kappa); }

  /// 2^{2 kappa n}
  double time_cutoff() const { return std::exp2(2.0 * kappa * n); }
  /// 2^{kappa n}
  double space_cutoff() const { return std::exp2(kappa * n); }

  /// Number of coarse cells in time (2^n) and half the number in space (2^{2n}).
  long time_cells() const noexcept { return 1L << n; }
  long space_half_cells() const noexcept { return 1L << (2 * n); }
  double mesh() const noexcept { return std::ldexp(1.0, -n); }
};

// ---------------------------------------------------------------------------
// Normalization constant c_H

/// Closed form of int_0^inf (1 - cos xi) / xi^{2h+1} dxi.
inline double normalization_integral(double h) {
  if (!(h > 0.0 && h < 1.0)) fail(ErrorKind::domain, "normalization: h must lie in (0,1)");
  return std::numbers::pi / (2.0 * std::tgamma(1.0 + 2.0 * h) * std::sin(std::numbers::pi * h));
}

/// Same integral by quadrature: tanh-sinh on (0,1], and on [1,inf) the
/// non-oscillatory part in closed form plus Ooura's Fourier rule for the
/// cosine tail.
inline double normalization_integral_quadrature(double h, double tolerance = 1e-12) {
  if (!(h > 0.0 && h < 1.0)) fail(ErrorKind::domain, "normalization: h must lie in (0,1)");
  const double p = 2.0 * h + 1.0;
  boost::math::quadrature::tanh_sinh<double> inner;
  const double head = inner.integrate(
      [p](double x) {
        if (x < 1e-4) return std::pow(x, 2.0 - p) * (0.5 - x * x / 24.0);
        const double s = std::sin(0.5 * x);
        return 2.0 * s * s / std::pow(x, p);
      },
      0.0, 1.0, tolerance);
  boost::math::quadrature::ooura_fourier_cos<double> fcos(tolerance);
  boost::math::quadrature::ooura_fourier_sin<double> fsin(tolerance);
  auto shifted = [p](double t) { return std::pow(t + 1.0, -p); };
  const double c = fcos.integrate(shifted, 1.0).first;
  const double s = fsin.integrate(shifted, 1.0).first;
  // int_1^inf cos(xi)/xi^p = cos(1) C - sin(1) S
  const double tail = 1.0 / (p - 1.0) - (std::cos(1.0) * c - std::sin(1.0) * s);
  return head + tail;
}

/// c_H = (1/2) (int_0^inf (1 - cos xi)/xi^{2h+1} dxi)^{-1/2}
inline double normalization_constant(double h) {
  return 0.5 / std::sqrt(normalization_integral(h));
}

// ---------------------------------------------------------------------------
// Covariance factors

/// Covariance of fractional Brownian motion, R_H(a,b).
inline double fbm_covariance(double a, double b, double hurst) {
  const double e = 2.0 * hurst;
  return 0.5 * (std::pow(std::abs(a), e) + std::pow(std::abs(b), e) -
                std::pow(std::abs(a - b), e));
}

/// One covariance factor c_H^2 int_{|w| <= cutoff} (e^{iwa}-1)(e^{-iwb}-1)/|w|^{2H+1} dw,
/// rescaled to (0,1] and discretized by the midpoint rule with `nodes` points.
/// The node weights are tabulated once so that matrix assembly is cheap.
class CutoffCovariance {
 public:
  CutoffCovariance(double hurst, double cutoff, int nodes) : hurst_(hurst) {
    if (nodes < 1) fail(ErrorKind::domain, "covariance: need at least one quadrature node");
    if (std::isinf(cutoff)) return;
    const double c = normalization_constant(hurst);
    const double scale = c * c * 2.0 * std::pow(cutoff, -2.0 * hurst) / nodes;
    freq_.resize(nodes);
    weight_.resize(nodes);
    for (int m = 0; m < nodes; ++m) {
      const double xi = (m + 0.5) / nodes;
      freq_[m] = cutoff * xi;
      weight_[m] = scale * std::pow(xi, -(2.0 * hurst + 1.0));
    }
  }

  double operator()(double a, double b) const {
    if (freq_.empty()) return fbm_covariance(a, b, hurst_);
    double sum = 0.0;
    for (std::size_t m = 0; m < freq_.size(); ++m) {
      const double w = freq_[m];
      // Grouped so that a = 0 or b = 0 cancels exactly.
      sum += weight_[m] * ((std::cos(w * (a - b)) - std::cos(w * a)) - (std::cos(w * b) - 1.0));
    }
    return sum;
  }

  /// Symmetric Gram matrix on the given points; upper triangle computed, then mirrored.
  Matrix matrix(const std::vector<double>& points) const {
    const auto size = static_cast<Eigen::Index>(points.size());
    Matrix out(size, size);
    for (Eigen::Index r = 0; r < size; ++r) {
      for (Eigen::Index c = r; c < size; ++c) {
        out(r, c) = (*this)(points[r], points[c]);
        out(c, r) = out(r, c);
      }
    }
    return out;
  }

 private:
  double hurst_;
  std::vector<double> freq_;
  std::vector<double> weight_;
};

inline double cov_time(double s, double t, const SheetConfig& config) {
  return CutoffCovariance(config.hurst.h0(), config.raw_sheet() ? config.kappa : config.time_cutoff(),
                          config.m0)(s, t);
}

inline double cov_space(double x, double y, const SheetConfig& config) {
  return CutoffCovariance(config.hurst.h1(), config.raw_sheet() ? config.kappa : config.space_cutoff(),
                          config.m1)(x, y);
}

// ---------------------------------------------------------------------------
// Symmetric PSD square root

/// Symmetric D with D*D = a, via eigendecomposition with tiny negative
/// eigenvalues clamped to zero. Rows/columns of `a` that are identically zero
/// stay exactly zero in D.
inline Matrix psd_sqrt(const Matrix& a) {
  if (a.rows() != a.cols()) fail(ErrorKind::numerical, "psd_sqrt: matrix is not square");
  if (!a.allFinite()) fail(ErrorKind::numerical, "psd_sqrt: matrix has non-finite entries");
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Matrix::Zero(a.rows(), a.cols());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    fail(ErrorKind::numerical, "psd_sqrt: matrix is not symmetric");
  }

  std::vector<Eigen::Index> active;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    if ((a.row(r).array() != 0.0).any()) active.push_back(r);
  }
  const auto k = static_cast<Eigen::Index>(active.size());
  Matrix sub(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) sub(r, c) = 0.5 * (a(active[r], active[c]) + a(active[c], active[r]));

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sub);
  if (eig.info() != Eigen::Success) fail(ErrorKind::numerical, "psd_sqrt: eigensolver failed");
  Vector lambda = eig.eigenvalues();
  const double lambda_max = lambda.cwiseAbs().maxCoeff();
  const double clamp = 1e-10 * lambda_max;
  for (Eigen::Index r = 0; r < k; ++r) {
    if (lambda[r] < -clamp) {
      fail(ErrorKind::numerical, "psd_sqrt: eigenvalue " + std::to_string(lambda[r]) +
                                     " below -1e-10 * lambda_max; covariance is broken");
    }
    lambda[r] = std::sqrt(std::max(lambda[r], 0.0));
  }
  const Matrix& v = eig.eigenvectors();
  const Matrix root_sub = v * lambda.asDiagonal() * v.transpose();

  Matrix root = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) root(active[r], active[c]) = 0.5 * (root_sub(r, c) + root_sub(c, r));
  return root;
}

// ---------------------------------------------------------------------------
// Sheet samples

inline std::vector<double> coarse_times(const SheetConfig& config) {
  std::vector<double> out(config.time_cells() + 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(i) * config.mesh();
  return out;
}

inline std::vector<double> coarse_points(const SheetConfig& config) {
  const long half = config.space_half_cells();
  std::vector<double> out;
  out.reserve(2 * half + 1);
  for (long j = -half; j <= half; ++j) out.push_back(static_cast<double>(j) * config.mesh());
  return out;
}

/// Values of B^{kappa,n} on the coarse grid. Space index j is signed; the
/// storage column is j + 2^{2n}.
class SheetSample {
 public:
  SheetSample(SheetConfig config, Matrix values) : config_(config), values_(std::move(values)) {
    config_.validate();
    const long rows = config_.time_cells() + 1;
    const long cols = 2 * config_.space_half_cells() + 1;
    if (values_.rows() != rows || values_.cols() != cols) {
      fail(ErrorKind::domain, "sheet: values must be " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  /// Sheet with values f(t_i, x_j); used for deterministic test fields.
  static SheetSample tabulate(const SheetConfig& config, const std::function<double(double, double)>& f) {
    config.validate();
    const long rows = config.time_cells() + 1;
    const long half = config.space_half_cells();
    Matrix values(rows, 2 * half + 1);
    for (long i = 0; i < rows; ++i)
      for (long j = -half; j <= half; ++j) values(i, j + half) = f(i * config.mesh(), j * config.mesh());
    return SheetSample(config, std::move(values));
  }

  const SheetConfig& config() const noexcept { return config_; }
  int level() const noexcept { return config_.n; }
  const Matrix& values() const noexcept { return values_; }

  std::vector<double> times() const { return coarse_times(config_); }
  std::vector<double> points() const { return coarse_points(config_); }

  /// B(t_i, x_j) with signed j.
  double at(long i, long j) const { return values_(i, j + config_.space_half_cells()); }

 private:
  SheetConfig config_;
  Matrix values_;
};

/// Caches the covariance factors and their square roots for one configuration
/// so that many seeds can be drawn cheaply.
class SheetSampler {
 public:
  explicit SheetSampler(const SheetConfig& config) : config_(config) {
    config_.validate();
    const double tcut = config_.raw_sheet() ? config_.kappa : config_.time_cutoff();
    const double xcut = config_.raw_sheet() ? config_.kappa : config_.space_cutoff();
    c0_ = CutoffCovariance(config_.hurst.h0(), tcut, config_.m0).matrix(coarse_times(config_));
    c1_ = CutoffCovariance(config_.hurst.h1(), xcut, config_.m1).matrix(coarse_points(config_));
    d0_ = psd_sqrt(c0_);
    d1_ = psd_sqrt(c1_);
  }

  const SheetConfig& config() const noexcept { return config_; }
  const Matrix& time_covariance() const noexcept { return c0_; }
  const Matrix& space_covariance() const noexcept { return c1_; }
  const Matrix& time_root() const noexcept { return d0_; }
  const Matrix& space_root() const noexcept { return d1_; }

  SheetSample sample(std::uint64_t seed) const {
    const CounterNormal normal(seed);
    const Eigen::Index rows = d0_.rows();
    const Eigen::Index cols = d1_.rows();
    Matrix w(rows, cols);
    for (Eigen::Index a = 0; a < rows; ++a)
      for (Eigen::Index b = 0; b < cols; ++b)
        w(a, b) = normal(static_cast<std::uint64_t>(a * cols + b));
    SheetConfig cfg = config_;
    cfg.seed = seed;
    return SheetSample(cfg, (d0_ * w) * d1_);
  }

 private:
  SheetConfig config_;
  Matrix c0_, c1_, d0_, d1_;
};

inline SheetSample sample_sheet(const SheetConfig& config) {
  return SheetSampler(config).sample(config.seed);
}

/// Rectangular increment over coarse cell [t_i, t_{i+1}] x [x_j, x_{j+1}], j signed.
inline double rect_increment(const SheetSample& sheet, long i, long j) {
  const long half = sheet.config().space_half_cells();
  if (i < 0 || i >= sheet.config().time_cells() || j < -half || j >= half) {
    fail(ErrorKind::domain, "rect_increment: cell (" + std::to_string(i) + ", " +
                                std::to_string(j) + ") outside the coarse grid");
  }
  return sheet.at(i + 1, j + 1) - sheet.at(i + 1, j) - sheet.at(i, j + 1) + sheet.at(i, j);
}

}  // namespace rheat
