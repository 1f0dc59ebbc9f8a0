#pragma once

// Hat-basis Galerkin projection combined with implicit Euler in time.
//
// With A = mass, B = stiffness and a time slab [t_i, t_{i+1}] of length dt,
// each step solves
//     (A + dt B) u_{i+1} = A u_i + int_{t_i}^{t_{i+1}} <f_s, Phi> ds,
// i.e. the Galerkin identity multiplied through by dt.

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <concepts>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rheat/error.hpp"
#include "rheat/fractional_field.hpp"
#include "rheat/noise_grid.hpp"
#include "rheat/tridiagonal.hpp"

namespace rheat {

/// Hats Phi_j, j in [-N+1, N-1], with nodes x_j = j h on [-L, L], L = N h.
class HatBasis {
 public:
  HatBasis(double h, long n_half) : h_(h), n_half_(n_half) {
    if (!(h > 0.0)) fail(ErrorKind::domain, "HatBasis: mesh h must be positive");
    if (n_half < 1) fail(ErrorKind::domain, "HatBasis: N must be >= 1");
  }

  /// Basis for half-domain L; L/h must be an integer.
  static HatBasis from_domain(double h, double big_l) {
    const double ratio = big_l / h;
    const double rounded = std::round(ratio);
    if (!(h > 0.0) || rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
      fail(ErrorKind::domain, "HatBasis: L/h must be a positive integer");
    }
    return HatBasis(h, static_cast<long>(rounded));
  }

  double h() const noexcept { return h_; }
  long n_half() const noexcept { return n_half_; }
  double big_l() const noexcept { return static_cast<double>(n_half_) * h_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(2 * n_half_ - 1); }
  long first() const noexcept { return -n_half_ + 1; }
  long last() const noexcept { return n_half_ - 1; }
  double node(long j) const noexcept { return static_cast<double>(j) * h_; }
  std::size_t index(long j) const noexcept { return static_cast<std::size_t>(j + n_half_ - 1); }

  double hat(long j, double x) const noexcept {
    const double u = std::abs(x / h_ - static_cast<double>(j));
    return u < 1.0 ? 1.0 - u : 0.0;
  }

  /// int_a^b Phi_j(x) dx, in closed form.
  double hat_integral(long j, double a, double b) const noexcept {
    // Antiderivative of the hat in the local coordinate u = x/h - j.
    auto primitive = [](double u) {
      if (u <= -1.0) return 0.0;
      if (u <= 0.0) return 0.5 * (u + 1.0) * (u + 1.0);
      if (u <= 1.0) return 1.0 - 0.5 * (1.0 - u) * (1.0 - u);
      return 1.0;
    };
    const double jj = static_cast<double>(j);
    return h_ * (primitive(b / h_ - jj) - primitive(a / h_ - jj));
  }

 private:
  double h_;
  long n_half_;
};

inline TridiagonalMatrix mass_matrix(const HatBasis& basis) {
  return TridiagonalMatrix::symmetric(basis.size(), 2.0 * basis.h() / 3.0, basis.h() / 6.0);
}

inline TridiagonalMatrix stiffness_matrix(const HatBasis& basis) {
  return TridiagonalMatrix::symmetric(basis.size(), 2.0 / basis.h(), -1.0 / basis.h());
}

// ---------------------------------------------------------------------------
// Load vectors

/// A forcing that is constant on the cells
/// [k T, (k+1) T) x [x0 + l X, x0 + (l+1) X) of a uniform space-time grid.
template <class F>
concept CellwiseConstantField = requires(const F& f, long k, long l) {
  { f.time_cell() } -> std::convertible_to<double>;
  { f.space_cell() } -> std::convertible_to<double>;
  { f.space_origin() } -> std::convertible_to<double>;
  { f.value(k, l) } -> std::convertible_to<double>;
};

/// Exact int_{t0}^{t1} <f_s, Phi_j> ds for a cellwise constant forcing:
/// each term is (time overlap) * (closed-form partial hat integral).
template <CellwiseConstantField F>
std::vector<double> load_vector(const F& field, const HatBasis& basis, double t0, double t1) {
  if (!(t0 < t1)) fail(ErrorKind::domain, "load_vector: need t0 < t1");
  const double tc = field.time_cell();
  const double xc = field.space_cell();
  const double x0 = field.space_origin();

  std::vector<std::pair<long, double>> slabs;
  const long k_lo = static_cast<long>(std::floor(t0 / tc));
  const long k_hi = static_cast<long>(std::floor(t1 / tc));
  for (long k = k_lo; k <= k_hi; ++k) {
    const double overlap = std::min(t1, (k + 1) * tc) - std::max(t0, k * tc);
    if (overlap > 0.0) slabs.emplace_back(k, overlap);
  }

  std::vector<double> out(basis.size(), 0.0);
  for (long j = basis.first(); j <= basis.last(); ++j) {
    const double lo = basis.node(j - 1);
    const double hi = basis.node(j + 1);
    const long l_lo = static_cast<long>(std::floor((lo - x0) / xc));
    const long l_hi = static_cast<long>(std::floor((hi - x0) / xc));
    double acc = 0.0;
    for (long l = l_lo; l <= l_hi; ++l) {
      const double a = std::max(lo, x0 + l * xc);
      const double b = std::min(hi, x0 + (l + 1) * xc);
      if (!(b > a)) continue;
      const double w = basis.hat_integral(j, a, b);
      if (w == 0.0) continue;
      for (const auto& [k, overlap] : slabs) acc += field.value(k, l) * overlap * w;
    }
    out[basis.index(j)] = acc;
  }
  return out;
}

/// int_{t0}^{t1} <f_s, Phi_j> ds for a general forcing f(t, x), by tensor
/// Gauss-Legendre quadrature with `Points` nodes per direction on each of
/// the two elements of the hat support.
template <int Points = 10, class F>
  requires std::invocable<const F&, double, double>
std::vector<double> load_vector(const F& f, const HatBasis& basis, double t0, double t1) {
  if (!(t0 < t1)) fail(ErrorKind::domain, "load_vector: need t0 < t1");
  using rule = boost::math::quadrature::gauss<double, Points>;
  std::vector<double> out(basis.size(), 0.0);
  for (long j = basis.first(); j <= basis.last(); ++j) {
    auto in_space = [&](double t) {
      auto integrand = [&](double x) { return f(t, x) * basis.hat(j, x); };
      return rule::integrate(integrand, basis.node(j - 1), basis.node(j)) +
             rule::integrate(integrand, basis.node(j), basis.node(j + 1));
    };
    out[basis.index(j)] = rule::integrate(in_space, t0, t1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Implicit Euler

/// One step: solve (mass + dt stiffness) next = mass prev + load.
inline std::vector<double> galerkin_step(const TridiagonalMatrix& mass, const TridiagonalMatrix& stiffness,
                                         double dt, std::span<const double> prev, std::span<const double> load) {
  if (!(dt > 0.0)) fail(ErrorKind::domain, "galerkin_step: dt must be positive");
  if (prev.size() != mass.size() || load.size() != mass.size() || stiffness.size() != mass.size()) {
    fail(ErrorKind::domain, "galerkin_step: dimension mismatch");
  }
  std::vector<double> rhs = mass.multiply(prev);
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += load[k];
  return thomas_solve(mass + stiffness.scaled(dt), rhs);
}

/// Repeated steps with a fixed dt; the system matrix is factored once.
class ImplicitEulerStepper {
 public:
  ImplicitEulerStepper(TridiagonalMatrix mass, const TridiagonalMatrix& stiffness, double dt)
      : mass_(std::move(mass)), factor_(mass_ + stiffness.scaled(dt)) {
    if (!(dt > 0.0)) fail(ErrorKind::domain, "ImplicitEulerStepper: dt must be positive");
  }

  std::vector<double> step(std::span<const double> prev, std::span<const double> load) const {
    std::vector<double> rhs = mass_.multiply(prev);
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += load[k];
    return factor_.solve(rhs);
  }

 private:
  TridiagonalMatrix mass_;
  ThomasFactor factor_;
};

// ---------------------------------------------------------------------------
// Scheme state

/// Time stepping layout shared by the specialized and generic runners.
struct SchemeGrid {
  int level = 1;
  long time_steps = 1;
  double dt = 1.0;
  HatBasis basis{1.0, 1};

  double time(long i) const noexcept { return static_cast<double>(i) * dt; }
};

/// The calibrated fine grid (h, L, dt) = (2^{-2n}, 2^{n+1}, 2^{-4n}).
inline SchemeGrid scheme_grid(const FineGrid& grid) {
  return SchemeGrid{grid.n, grid.time_steps(), grid.dt(), HatBasis(grid.h(), grid.n_half())};
}

/// Noise and Galerkin on the common grid t_i = i/2^n, x_j = j/2^n, L = 2^{n+1}.
inline SchemeGrid synchronized_grid(int n) {
  const double mesh = std::ldexp(1.0, -n);
  return SchemeGrid{n, 1L << n, mesh, HatBasis(mesh, 1L << (2 * n + 1))};
}

/// Coefficients on the hat basis at the saved time steps. Rows are saved
/// every `stride` steps, and the final step is always saved.
struct SchemeState {
  SchemeGrid grid;
  long stride = 1;
  std::vector<long> saved_steps;
  Matrix coeffs;  // saved_steps.size() x basis.size()

  std::vector<double> row(std::size_t r) const {
    std::vector<double> out(static_cast<std::size_t>(coeffs.cols()));
    for (Eigen::Index c = 0; c < coeffs.cols(); ++c) out[c] = coeffs(static_cast<Eigen::Index>(r), c);
    return out;
  }

  /// Saved row for fine step i; throws if that step was thinned out.
  std::vector<double> at_step(long i) const {
    for (std::size_t r = 0; r < saved_steps.size(); ++r)
      if (saved_steps[r] == i) return row(r);
    fail(ErrorKind::domain, "SchemeState: time step " + std::to_string(i) + " was not saved");
  }
};

namespace detail {

inline std::vector<long> saved_step_list(long steps, long stride) {
  if (stride < 1) fail(ErrorKind::domain, "scheme: save stride must be >= 1");
  std::vector<long> out;
  for (long i = 0; i <= steps; i += stride) out.push_back(i);
  if (out.back() != steps) out.push_back(steps);
  return out;
}

/// Drives `advance(i, state)` over all steps and stores the saved rows.
template <class Advance>
SchemeState drive(const SchemeGrid& grid, long stride, Advance&& advance) {
  SchemeState state{grid, stride, saved_step_list(grid.time_steps, stride), Matrix()};
  state.coeffs = Matrix::Zero(static_cast<Eigen::Index>(state.saved_steps.size()),
                              static_cast<Eigen::Index>(grid.basis.size()));
  std::vector<double> current(grid.basis.size(), 0.0);
  std::size_t next_row = 1;  // row 0 is the zero initial condition
  for (long i = 0; i < grid.time_steps; ++i) {
    current = advance(i, current);
    if (next_row < state.saved_steps.size() && state.saved_steps[next_row] == i + 1) {
      for (std::size_t c = 0; c < current.size(); ++c) state.coeffs(static_cast<Eigen::Index>(next_row), c) = current[c];
      ++next_row;
    }
  }
  return state;
}

}  // namespace detail

/// Generic Galerkin + implicit Euler from zero initial data. `load(i)` must
/// return int_{t_i}^{t_{i+1}} <f_s, Phi> ds.
template <class LoadFn>
SchemeState run_galerkin(const SchemeGrid& grid, LoadFn&& load, long stride = 1,
                         const TridiagonalMatrix* stiffness_override = nullptr) {
  const TridiagonalMatrix stiffness = stiffness_override ? *stiffness_override : stiffness_matrix(grid.basis);
  const ImplicitEulerStepper stepper(mass_matrix(grid.basis), stiffness, grid.dt);
  return detail::drive(grid, stride, [&](long i, const std::vector<double>& prev) {
    const std::vector<double> f = load(i);
    return stepper.step(prev, f);
  });
}

/// Generic run driven by the discretized noise of `sheet`, with exact loads.
inline SchemeState run_generic_scheme(const SheetSample& sheet, const SchemeGrid& grid, long stride = 1,
                                      const TridiagonalMatrix* stiffness_override = nullptr) {
  const DiscretizedNoise noise(sheet);
  return run_galerkin(
      grid, [&](long i) { return load_vector(noise, grid.basis, grid.time(i), grid.time(i + 1)); }, stride,
      stiffness_override);
}

/// The rescaled iteration A1 phi_{i+1} = A2 phi_i + beta_i with
/// A1 = tridiag(-5/4, 4, -5/4), A2 = tridiag(1/4, 1, 1/4) and
/// beta_j(i) = 3/2^{2n+1} deltaB_{ij}. Truncated boundary stencils come from
/// simply ending the tridiagonal bands.
inline SchemeState run_specialized_scheme(const SheetSample& sheet, const FineGrid& grid, long stride = 1) {
  if (sheet.level() != grid.n) {
    fail(ErrorKind::domain, "run_specialized_scheme: sheet level " + std::to_string(sheet.level()) +
                                " does not match grid level " + std::to_string(grid.n));
  }
  const int n = grid.n;
  const std::size_t size = static_cast<std::size_t>(grid.nodes());
  const ThomasFactor a1(TridiagonalMatrix::symmetric(size, 4.0, -1.25));
  const TridiagonalMatrix a2 = TridiagonalMatrix::symmetric(size, 1.0, 0.25);
  const double beta_scale = 3.0 / std::ldexp(1.0, 2 * n + 1);

  // deltaB depends on the fine step only through its coarse time cell.
  const long coarse_cells = 1L << n;
  std::vector<std::vector<double>> beta(static_cast<std::size_t>(coarse_cells), std::vector<double>(size));
  const long steps_per_cell = 1L << (3 * n);
  for (long k = 0; k < coarse_cells; ++k) {
    for (long j = -grid.n_half() + 1; j <= grid.n_half() - 1; ++j) {
      beta[k][static_cast<std::size_t>(j + grid.n_half() - 1)] = beta_scale * delta_b(sheet, k * steps_per_cell, j);
    }
  }

  return detail::drive(scheme_grid(grid), stride, [&](long i, const std::vector<double>& prev) {
    std::vector<double> rhs = a2.multiply(prev);
    const auto& b = beta[static_cast<std::size_t>(coarse_time_index(i, n))];
    for (std::size_t c = 0; c < size; ++c) rhs[c] += b[c];
    return a1.solve(rhs);
  });
}

/// sum_j coeffs[j] Phi_j(x); zero outside [-L, L].
inline double reconstruct(std::span<const double> coeffs, const HatBasis& basis, double x) {
  if (coeffs.size() != basis.size()) fail(ErrorKind::domain, "reconstruct: coefficient count mismatch");
  const double u = x / basis.h();
  const double cell = std::floor(u);
  const double frac = u - cell;
  const long left = static_cast<long>(cell);
  auto coeff = [&](long j) {
    return (j < basis.first() || j > basis.last()) ? 0.0 : coeffs[basis.index(j)];
  };
  if (left < basis.first() - 1 || left > basis.last()) return 0.0;
  return (1.0 - frac) * coeff(left) + frac * coeff(left + 1);
}

}  // namespace rheat
