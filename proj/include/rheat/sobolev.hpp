#pragma once

// Windowed negative-order Sobolev norms ||rho g||_{H^{-alpha}} on sampled data
// and least-squares rate fits across levels.
//
// Convention: ||g||^2 = int (1 + lambda^2)^{-alpha} |g^(lambda)|^2 dlambda / (2 pi),
// g^(lambda) = int g(x) e^{-i lambda x} dx. On a uniform grid of spacing delta
// zero-padded to K = 2P/delta points this becomes
//     ||g||^2 ~ (delta / K) sum_k (1 + lambda_k^2)^{-alpha} |G_k|^2,
// lambda_k = 2 pi k / (K delta) with k taken in (-K/2, K/2]. At alpha = 0 it is
// delta * sum |g_k|^2 (Parseval), the trapezoid L2 norm of a signal vanishing
// at the window ends.

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rheat/error.hpp"
#include "rheat/fractional_field.hpp"
#include "rheat/galerkin.hpp"

namespace rheat {

/// rho = 1 on [-R/2, R/2], 0 outside (-R, R). On the band the bridge is
/// psi(1-u) / (psi(1-u) + psi(u)), psi(v) = exp(-1/v), u = 2|x|/R - 1,
/// which is C-infinity at both ends of the band.
class CutoffFunction {
 public:
  explicit CutoffFunction(double radius = 1.0) : radius_(radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::domain, "CutoffFunction: radius must be positive");
  }

  double radius() const noexcept { return radius_; }

  double operator()(double x) const noexcept {
    const double u = 2.0 * std::abs(x) / radius_ - 1.0;
    if (u <= 0.0) return 1.0;
    if (u >= 1.0) return 0.0;
    const double a = psi(1.0 - u);
    const double b = psi(u);
    return a / (a + b);
  }

 private:
  static double psi(double v) noexcept { return v > 0.0 ? std::exp(-1.0 / v) : 0.0; }

  double radius_;
};

inline double cutoff_eval(const CutoffFunction& rho, double x) noexcept { return rho(x); }

/// values[k] sampled at origin + k * step.
struct UniformSamples {
  double origin = 0.0;
  double step = 1.0;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double point(std::size_t k) const noexcept { return origin + static_cast<double>(k) * step; }
  double front() const noexcept { return origin; }
  double back() const noexcept { return point(values.empty() ? 0 : values.size() - 1); }
};

/// Uniform samples on [-radius, radius] with `count` points.
inline std::vector<double> window_points(double radius, std::size_t count) {
  if (count < 2 || !(radius > 0.0)) fail(ErrorKind::domain, "window_points: need radius > 0 and count >= 2");
  std::vector<double> xs(count);
  const double step = 2.0 * radius / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) xs[k] = -radius + static_cast<double>(k) * step;
  return xs;
}

/// Builds UniformSamples from explicit abscissae; rejects non-uniform spacing.
inline UniformSamples uniform_samples(std::span<const double> xs, std::span<const double> values) {
  if (xs.size() != values.size()) fail(ErrorKind::domain, "uniform_samples: size mismatch");
  if (xs.size() < 2) fail(ErrorKind::domain, "uniform_samples: need at least 2 samples");
  const double step = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  if (!(step > 0.0)) fail(ErrorKind::domain, "uniform_samples: abscissae must increase");
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (std::abs(xs[k] - (xs.front() + static_cast<double>(k) * step)) > 1e-9 * step) {
      fail(ErrorKind::domain, "uniform_samples: grid is not uniform");
    }
  }
  return UniformSamples{xs.front(), step, std::vector<double>(values.begin(), values.end())};
}

/// ||g||_{H^{-alpha}} of samples supported in [-R, R], zero-padded to [-P, P].
inline double h_neg_alpha_norm(const UniformSamples& g, double alpha, double padding) {
  if (!(g.step > 0.0)) fail(ErrorKind::domain, "h_neg_alpha_norm: grid spacing must be positive");
  if (!(alpha >= 0.0)) fail(ErrorKind::domain, "h_neg_alpha_norm: alpha must be >= 0");
  if (g.values.empty()) return 0.0;
  const double support = std::max(std::abs(g.front()), std::abs(g.back()));
  if (!(padding >= 2.0 * support)) fail(ErrorKind::domain, "h_neg_alpha_norm: padding P must be >= 2R");

  const double ratio = 2.0 * padding / g.step;
  const auto big_k = static_cast<std::size_t>(std::llround(ratio));
  if (big_k < g.size()) fail(ErrorKind::domain, "h_neg_alpha_norm: padded window shorter than the samples");

  // Only |G_k| enters, so the placement of the block inside the padded
  // buffer is irrelevant.
  std::vector<double> buffer(big_k, 0.0);
  std::copy(g.values.begin(), g.values.end(), buffer.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, buffer);

  const double kd = static_cast<double>(big_k) * g.step;
  double acc = 0.0;
  for (std::size_t k = 0; k < big_k; ++k) {
    const double signed_k = k <= big_k / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(big_k);
    const double lambda = 2.0 * std::numbers::pi * signed_k / kd;
    const double weight = alpha == 0.0 ? 1.0 : std::pow(1.0 + lambda * lambda, -alpha);
    acc += weight * std::norm(spectrum[k]);
  }
  return std::sqrt(acc * g.step / static_cast<double>(big_k));
}

inline double h_neg_alpha_norm(std::span<const double> xs, std::span<const double> values, double alpha,
                               double padding) {
  return h_neg_alpha_norm(uniform_samples(xs, values), alpha, padding);
}

/// Reference field sampled on a window grid at one time.
struct WindowSamples {
  double t = 0.0;
  UniformSamples samples;
};

/// Rejects alpha <= alpha0 in the rough regime.
inline void check_alpha(const HurstPair& hurst, double alpha) {
  if (!(alpha >= 0.0)) fail(ErrorKind::domain, "alpha must be >= 0");
  if (hurst.rough_regime() && !(alpha > hurst.alpha0())) {
    fail(ErrorKind::domain, "alpha = " + std::to_string(alpha) + " must exceed alpha0 = " +
                                std::to_string(hurst.alpha0()) + " in the rough regime");
  }
}

/// ||rho (a - b)||_{H^{-alpha}} for two fields on the same window grid.
inline double windowed_distance(const UniformSamples& a, const UniformSamples& b, const CutoffFunction& rho,
                                double alpha, double padding) {
  if (a.size() != b.size() || std::abs(a.origin - b.origin) > 1e-12 || std::abs(a.step - b.step) > 1e-12 * a.step) {
    fail(ErrorKind::domain, "windowed_distance: grids are not aligned");
  }
  UniformSamples diff{a.origin, a.step, std::vector<double>(a.size())};
  for (std::size_t k = 0; k < a.size(); ++k) diff.values[k] = rho(a.point(k)) * (a.values[k] - b.values[k]);
  return h_neg_alpha_norm(diff, alpha, padding);
}

/// Samples the hat reconstruction of `coeffs` on the grid of `like`.
inline UniformSamples sample_reconstruction(std::span<const double> coeffs, const HatBasis& basis,
                                            const UniformSamples& like) {
  if (like.front() < -basis.big_l() || like.back() > basis.big_l()) {
    fail(ErrorKind::domain, "window grid leaves the Galerkin domain [-L, L]");
  }
  UniformSamples out{like.origin, like.step, std::vector<double>(like.size())};
  for (std::size_t k = 0; k < like.size(); ++k) out.values[k] = reconstruct(coeffs, basis, like.point(k));
  return out;
}

/// ||rho (reconstruction at fine step t_index - reference)||_{H^{-alpha}}.
inline double scheme_error(const SchemeState& state, long t_index, const WindowSamples& reference,
                           const CutoffFunction& rho, const HurstPair& hurst, double alpha, double padding = 4.0) {
  check_alpha(hurst, alpha);
  const double t = state.grid.time(t_index);
  if (std::abs(t - reference.t) > 1e-12) {
    fail(ErrorKind::domain, "scheme_error: reference time " + std::to_string(reference.t) +
                                " does not match scheme time " + std::to_string(t));
  }
  const UniformSamples& ref = reference.samples;
  if (ref.size() < 2 || ref.front() > -rho.radius() + 1e-12 * rho.radius() ||
      ref.back() < rho.radius() - 1e-12 * rho.radius()) {
    fail(ErrorKind::domain, "scheme_error: reference window does not cover the cutoff support");
  }
  const UniformSamples approx = sample_reconstruction(state.at_step(t_index), state.grid.basis, ref);
  return windowed_distance(approx, ref, rho, alpha, padding);
}

struct ErrorReport {
  double alpha = 0.0;
  std::vector<int> levels;
  std::vector<double> errors;
  double fitted_rate = 0.0;
  double residual = 0.0;
};

/// Least squares log2(error) ~ c - nu n; fitted_rate = nu, residual = RMS.
inline ErrorReport fit_rate(const std::vector<int>& levels, const std::vector<double>& errors, double alpha = 0.0) {
  if (levels.size() != errors.size()) fail(ErrorKind::domain, "fit_rate: size mismatch");
  if (levels.size() < 2) fail(ErrorKind::domain, "fit_rate: need at least 2 levels");
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (k > 0 && levels[k] <= levels[k - 1]) fail(ErrorKind::domain, "fit_rate: levels must increase strictly");
    if (!(errors[k] > 0.0) || !std::isfinite(errors[k])) {
      fail(ErrorKind::domain, "fit_rate: errors must be positive and finite");
    }
  }
  const double count = static_cast<double>(levels.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    mx += levels[k];
    my += std::log2(errors[k]);
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double dx = levels[k] - mx;
    sxx += dx * dx;
    sxy += dx * (std::log2(errors[k]) - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double r = std::log2(errors[k]) - (my + slope * (levels[k] - mx));
    rss += r * r;
  }
  return ErrorReport{alpha, levels, errors, -slope, std::sqrt(rss / count)};
}

}  // namespace rheat
