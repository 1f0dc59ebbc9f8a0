#include "catch_amalgamated.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "rheat/galerkin.hpp"
#include "rheat/reference_solutions.hpp"

using namespace rheat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Sheet equal to 1 on {t >= 1/2, x >= 1/2} at level 1: a unit increment on cell (0, 0) only.
SheetSample unit_cell_sheet() {
  SheetConfig c;
  c.n = 1;
  Matrix v = Matrix::Zero(3, 9);
  v.block(1, 5, 2, 4).setOnes();
  return SheetSample(c, v);
}

SheetSample sampled_sheet(int n, std::uint64_t seed) {
  SheetConfig c;
  c.n = n;
  c.m0 = 2000;
  c.m1 = 500;
  c.seed = seed;
  return sample_sheet(c);
}

}  // namespace

TEST_CASE("gamma") {
  for (double t : {0.2, 1.0})
    for (double r : {0.3, 2.0}) {
      const Complex g = gamma(t, 0.0, r);
      CHECK_THAT(g.real(), WithinRel((1 - std::exp(-t * r * r)) / (r * r), 1e-13));
      CHECK(g.imag() == 0.0);
    }
  CHECK(gamma(0.6, 0.0, 0.0) == Complex(0.6, 0.0));
  CHECK(gamma(0.0, 3.0, 1.0) == Complex(0.0, 0.0));

  SECTION("defining integral by adaptive quadrature") {
    const double t = 0.7, xi = 2.0, r = 1.5;
    using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double re = gk::integrate([&](double s) { return std::cos(xi * (t - s)) * std::exp(-s * r * r); }, 0.0, t, 15, 1e-14);
    const double im = gk::integrate([&](double s) { return std::sin(xi * (t - s)) * std::exp(-s * r * r); }, 0.0, t, 15, 1e-14);
    const Complex g = gamma(t, xi, r);
    CHECK_THAT(g.real(), WithinAbs(re, 1e-10));
    CHECK_THAT(g.imag(), WithinAbs(im, 1e-10));
  }
  SECTION("continuous across the small-argument branch") {
    for (double eps : {1e-13, 1e-9, 1e-5, 1e-3}) {
      const Complex g = gamma(0.5, eps, std::sqrt(eps));
      CHECK_THAT(std::abs(g), WithinRel(0.5, 1e-3));
    }
  }
  SECTION("bound min(t, 2/|r^2 + i xi|)") {
    for (double t : {0.05, 0.5, 1.0})
      for (double xi = -64; xi <= 64; xi += 1.0)
        for (double r = 0; r <= 8; r += 0.25) {
          const double bound = std::min(t, 2.0 / std::abs(Complex(r * r, xi)));
          CHECK(std::abs(gamma(t, xi, r)) <= bound * (1 + 1e-12));
        }
  }
  CHECK_THROWS_AS(gamma(-0.1, 0.0, 0.0), Error);
}

TEST_CASE("heat_space_integral") {
  CHECK(heat_space_integral(1.0, 0.0, -50, 50) >= 1 - 1e-12);
  for (double c : {0.1, 0.7, 2.0}) CHECK_THAT(heat_space_integral(0.3, 0.0, -c, c), WithinRel(std::erf(c / std::sqrt(1.2)), 1e-14));

  // trapezoid oracle on the Gaussian kernel itself
  const double tau = 0.25, x = 0.3;
  const int points = 100001;
  const double step = 1.0 / (points - 1);
  auto g = [&](double y) { return std::exp(-(x - y) * (x - y) / (4 * tau)) / std::sqrt(4 * std::numbers::pi * tau); };
  double acc = 0.5 * (g(0.0) + g(1.0));
  for (int k = 1; k < points - 1; ++k) acc += g(k * step);
  CHECK_THAT(heat_space_integral(tau, x, 0.0, 1.0), WithinAbs(acc * step, 1e-9));

  // far tails keep relative accuracy
  const double tail = heat_space_integral(0.01, 0.0, 1.0, 1.1);
  CHECK(tail > 0.0);
  CHECK_THAT(tail, WithinRel(0.5 * (std::erfc(5.0) - std::erfc(5.5)), 1e-12));
  CHECK_THAT(heat_space_integral(0.01, 0.0, -1.1, -1.0), WithinRel(tail, 1e-14));

  CHECK_THROWS_AS(heat_space_integral(0.0, 0.0, 0.0, 1.0), Error);
  CHECK_THROWS_AS(heat_space_integral(1.0, 0.0, 1.0, 0.0), Error);
}

TEST_CASE("mild_solution") {
  SECTION("zero sheet") {
    SheetConfig c;
    c.n = 2;
    const SheetSample zero = SheetSample::tabulate(c, [](double, double) { return 0.0; });
    CHECK(mild_solution(zero, 0.8, 0.3) == 0.0);
  }
  SECTION("unit increment against a 2-D Simpson convolution") {
    const SheetSample sheet = unit_cell_sheet();
    const double t = 1.0;
    for (double x : {-0.4, 0.0, 0.25, 0.5, 1.3}) {
      // 4 * int_0^{1/2} ds int_0^{1/2} dy G_{t-s}(x - y)
      const int m = 1000;  // Simpson intervals per direction
      const double hs = 0.5 / m;
      double acc = 0.0;
      for (int a = 0; a <= m; ++a) {
        const double s = a * hs;
        const double wa = (a == 0 || a == m) ? 1 : (a % 2 ? 4 : 2);
        const double tau = t - s;
        double inner = 0.0;
        for (int b = 0; b <= m; ++b) {
          const double y = b * hs;
          const double wb = (b == 0 || b == m) ? 1 : (b % 2 ? 4 : 2);
          inner += wb * std::exp(-(x - y) * (x - y) / (4 * tau));
        }
        acc += wa * inner / std::sqrt(4 * std::numbers::pi * tau);
      }
      const double oracle = 4.0 * acc * (hs / 3) * (hs / 3);
      CHECK_THAT(mild_solution(sheet, t, x), WithinAbs(oracle, 1e-6));
    }
  }
  SECTION("linearity") {
    const SheetSample a = sampled_sheet(1, 1), b = sampled_sheet(1, 2);
    const SheetSample sum(a.config(), a.values() + b.values());
    for (double x : {-1.2, 0.1, 0.75})
      for (double t : {0.3, 1.0}) {
        CHECK_THAT(mild_solution(sum, t, x), WithinAbs(mild_solution(a, t, x) + mild_solution(b, t, x), 1e-10));
      }
  }
  SECTION("small time") {
    for (int n : {1, 2}) {
      const SheetSample s = sampled_sheet(n, 3);
      double max_inc = 0.0;
      for (long i = 0; i < s.config().time_cells(); ++i)
        for (long j = -s.config().space_half_cells(); j < s.config().space_half_cells(); ++j)
          max_inc = std::max(max_inc, std::abs(rect_increment(s, i, j)));
      for (double x : {-0.5, 0.0, 0.3}) CHECK(std::abs(mild_solution(s, std::ldexp(1.0, -4 * n), x)) <= 10 * max_inc);
    }
  }
  SECTION("window distance to the scheme is finite and reproducible") {
    const SheetSample s = sampled_sheet(1, 8);
    const SchemeState st = run_specialized_scheme(s, FineGrid{1});
    const auto last = st.row(st.saved_steps.size() - 1);
    auto distance = [&] {
      double acc = 0.0;
      for (int k = 0; k <= 32; ++k) {
        const double x = -1.0 + k / 16.0;
        const double d = reconstruct(last, st.grid.basis, x) - mild_solution(s, 1.0, x);
        acc += d * d / 16.0;
      }
      return std::sqrt(acc);
    };
    const double first = distance();
    CHECK(std::isfinite(first));
    CHECK_THAT(distance(), WithinAbs(first, 1e-8));
  }
  SECTION("kernel reuse and level checks") {
    const SheetSample s = sampled_sheet(2, 4);
    const MildKernel k(2, 0.75, 0.2);
    CHECK(k.apply(DiscretizedNoise(s)) == mild_solution(s, 0.75, 0.2));
    CHECK_THROWS_AS(MildKernel(1, 0.5, 0.0).apply(DiscretizedNoise(s)), Error);
    CHECK_THROWS_AS(mild_solution(s, 0.0, 0.0), Error);
    const auto window = mild_solution_window(s, 0.5, {-0.5, 0.5});
    CHECK(window[1] == mild_solution(s, 0.5, 0.5));
  }
}

TEST_CASE("solution_covariance") {
  SheetConfig c;
  c.n = 1;
  CHECK(solution_covariance(0.0, 1.0, 0.0, 0.0, c) == 0.0);
  CHECK(solution_covariance(0.5, 0.0, 0.2, 0.1, c) == 0.0);
  CHECK_THAT(solution_covariance(0.5, 1.0, 0.3, 0.1, c), WithinAbs(solution_covariance(0.5, 1.0, 1.2, 1.0, c), 1e-12));
  const double coarse = solution_covariance(1.0, 1.0, 0.0, 0.0, c);
  const double refined = solution_covariance(1.0, 1.0, 0.0, 0.0, c, {1600, 800});
  CHECK(coarse > 0.0);
  CHECK_THAT(coarse, WithinRel(refined, 1e-2));
  SheetConfig raw = c;
  raw.kappa = INFINITY;
  CHECK_THROWS_AS(solution_covariance(1.0, 1.0, 0.0, 0.0, raw), Error);
}
