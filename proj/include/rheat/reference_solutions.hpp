#pragma once

// Independent evaluations of the mild solution G * (discretized noise), used
// as the oracle for Galerkin output, plus the spectral transfer function
// gamma_t and the solution covariance.
//
// Heat kernel convention: d/dt = Laplacian, G_tau(x) = exp(-x^2 / 4 tau) / sqrt(4 pi tau).

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "rheat/error.hpp"
#include "rheat/fractional_field.hpp"
#include "rheat/noise_grid.hpp"

namespace rheat {

using Complex = std::complex<double>;

/// gamma_t(xi, r) = e^{i xi t} int_0^t e^{-s (r^2 + i xi)} ds.
inline Complex gamma(double t, double xi, double r) {
  if (!(t >= 0.0)) fail(ErrorKind::domain, "gamma: t must be >= 0");
  const Complex z(r * r, xi);
  const Complex phase = std::polar(1.0, xi * t);
  if (std::abs(z) < 1e-12) return phase * t;
  const Complex w = t * z;
  Complex one_minus_exp;
  if (std::abs(w) < 1e-3) {
    one_minus_exp = w * (1.0 - w * (0.5 - w * (1.0 / 6.0 - w / 24.0)));
  } else {
    one_minus_exp = 1.0 - std::exp(-w);
  }
  return phase * one_minus_exp / z;
}

/// int_a^b G_tau(x - y) dy, written with erfc on the tails to avoid cancellation.
inline double heat_space_integral(double tau, double x, double a, double b) {
  if (!(tau > 0.0)) fail(ErrorKind::domain, "heat_space_integral: tau must be positive");
  if (!(a < b)) fail(ErrorKind::domain, "heat_space_integral: need a < b");
  const double s = std::sqrt(4.0 * tau);
  const double lo = (x - b) / s;  // lo < hi
  const double hi = (x - a) / s;
  if (lo >= 0.0) return 0.5 * (std::erfc(lo) - std::erfc(hi));
  if (hi <= 0.0) return 0.5 * (std::erfc(-hi) - std::erfc(-lo));
  return 0.5 * (std::erf(hi) - std::erf(lo));
}

struct TimeQuadrature {
  double relative_tolerance = 1e-8;
  unsigned max_depth = 15;
};

namespace detail {

/// heat_space_integral extended to tau -> 0 (the indicator of [a,b], 1/2 at the edges).
inline double heat_space_integral_limit(double tau, double x, double a, double b) {
  if (tau > 0.0) return heat_space_integral(tau, x, a, b);
  if (x > a && x < b) return 1.0;
  if (x == a || x == b) return 0.5;
  return 0.0;
}

}  // namespace detail

/// int over s in [s0, s1] (s1 <= t) of heat_space_integral(t - s, x, a, b).
/// The substitution t - s = u^2 removes the endpoint behaviour at s = t.
inline double heat_cell_weight(double t, double x, double s0, double s1, double a, double b,
                               const TimeQuadrature& quad = {}) {
  if (!(s1 > s0)) return 0.0;
  const double u_lo = std::sqrt(std::max(t - s1, 0.0));
  const double u_hi = std::sqrt(t - s0);
  auto integrand = [&](double u) { return 2.0 * u * detail::heat_space_integral_limit(u * u, x, a, b); };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, u_lo, u_hi, quad.max_depth,
                                                                       quad.relative_tolerance);
}

/// Linear functional noise -> mild solution value at (t, x) for a fixed level:
/// the weights do not depend on the sheet, so they are computed once and
/// reused across samples.
class MildKernel {
 public:
  struct Term {
    long k;
    long l;
    double weight;
  };

  MildKernel(int n, double t, double x, const TimeQuadrature& quad = {}) : n_(n), t_(t), x_(x) {
    if (!(t > 0.0 && t <= 1.0)) fail(ErrorKind::domain, "mild_solution: t must lie in (0,1]");
    const double mesh = std::ldexp(1.0, -n);
    const long time_cells = 1L << n;
    const long half = 1L << (2 * n);
    for (long k = 0; k < time_cells && k * mesh < t; ++k) {
      const double s0 = k * mesh;
      const double s1 = std::min((k + 1) * mesh, t);
      const double reach = 2.0 * std::sqrt(t - s0);
      for (long l = -half; l < half; ++l) {
        const double a = l * mesh;
        const double b = (l + 1) * mesh;
        const double gap = x < a ? a - x : (x > b ? x - b : 0.0);
        if (gap > 9.0 * reach) continue;  // erfc(9) ~ 4e-37
        const double w = heat_cell_weight(t, x, s0, s1, a, b, quad);
        if (w != 0.0) terms_.push_back({k, l, w});
      }
    }
  }

  double apply(const DiscretizedNoise& noise) const {
    if (noise.level() != n_) fail(ErrorKind::domain, "MildKernel: noise level does not match kernel level");
    double acc = 0.0;
    for (const Term& term : terms_) acc += term.weight * noise.value(term.k, term.l);
    return acc;
  }

  const std::vector<Term>& terms() const noexcept { return terms_; }
  double t() const noexcept { return t_; }
  double x() const noexcept { return x_; }

 private:
  int n_;
  double t_;
  double x_;
  std::vector<Term> terms_;
};

/// Mild solution of the heat equation driven by the discretized noise of `sheet`.
inline double mild_solution(const SheetSample& sheet, double t, double x, const TimeQuadrature& quad = {}) {
  return MildKernel(sheet.level(), t, x, quad).apply(DiscretizedNoise(sheet));
}

/// Mild solution at several points for one time, sharing the noise table.
inline std::vector<double> mild_solution_window(const SheetSample& sheet, double t, const std::vector<double>& xs,
                                                const TimeQuadrature& quad = {}) {
  const DiscretizedNoise noise(sheet);
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(MildKernel(sheet.level(), t, x, quad).apply(noise));
  return out;
}

struct SpectralQuadrature {
  int time_nodes = 400;   // nodes on [-2^{2 kappa n}, 2^{2 kappa n}]
  int space_nodes = 200;  // nodes on [-2^{kappa n}, 2^{kappa n}]
};

/// E[Psi_s(x) conj(Psi_t(y))] of the cut-off solution, by tensor midpoint
/// quadrature on the frequency rectangle. Returns the real part.
inline double solution_covariance(double s, double t, double x, double y, const SheetConfig& config,
                                  const SpectralQuadrature& quad = {}) {
  config.validate();
  if (config.raw_sheet()) fail(ErrorKind::domain, "solution_covariance: needs a finite cutoff kappa");
  if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0)) {
    fail(ErrorKind::domain, "solution_covariance: s, t must lie in [0,1]");
  }
  if (quad.time_nodes < 1 || quad.space_nodes < 1) fail(ErrorKind::domain, "solution_covariance: need nodes");
  const double h0 = config.hurst.h0();
  const double h1 = config.hurst.h1();
  const double c = normalization_constant(h0) * normalization_constant(h1);
  const double xi_max = config.time_cutoff();
  const double eta_max = config.space_cutoff();
  const double dxi = 2.0 * xi_max / quad.time_nodes;
  const double deta = 2.0 * eta_max / quad.space_nodes;

  double sum = 0.0;
  for (int a = 0; a < quad.time_nodes; ++a) {
    const double xi = -xi_max + (a + 0.5) * dxi;
    const double wxi = std::pow(std::abs(xi), 1.0 - 2.0 * h0);
    for (int b = 0; b < quad.space_nodes; ++b) {
      const double eta = -eta_max + (b + 0.5) * deta;
      const double r = std::abs(eta);
      const double weta = std::pow(r, 1.0 - 2.0 * h1);
      const Complex value = gamma(s, xi, r) * std::conj(gamma(t, xi, r)) * std::polar(1.0, eta * (x - y));
      sum += wxi * weta * value.real();
    }
  }
  return c * c * sum * dxi * deta;
}

}  // namespace rheat
