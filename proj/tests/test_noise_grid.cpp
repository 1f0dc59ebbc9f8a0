#include "catch_amalgamated.hpp"

#include <cmath>

#include "rheat/noise_grid.hpp"

using namespace rheat;
using Catch::Matchers::WithinAbs;

namespace {

SheetConfig level(int n) {
  SheetConfig c;
  c.n = n;
  c.m0 = 1000;
  c.m1 = 300;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("FineGrid layout") {
  for (int n : {1, 2, 3}) {
    const FineGrid g{n};
    CHECK(static_cast<double>(g.n_half()) * g.h() == g.big_l());
    CHECK(g.point(g.n_half() - 1) < g.big_l());
    CHECK(g.point(-g.n_half() + 1) > -g.big_l());
    CHECK(g.time(g.time_steps()) == 1.0);
  }
}

TEST_CASE("coarse_time_index") {
  CHECK(coarse_time_index(13, 1) == 1);
  CHECK(coarse_time_index(0, 1) == 0);
  CHECK(coarse_time_index(255, 2) == 3);
  CHECK(coarse_time_index(256, 2) == 3);  // t = 1 clamps into the last cell
  CHECK_THROWS_AS(coarse_time_index(-1, 1), Error);
  CHECK_THROWS_AS(coarse_time_index(17, 1), Error);
}

TEST_CASE("coarse_space_index") {
  CHECK(coarse_space_index(-3, 1) == -2);
  CHECK(coarse_space_index(2, 1) == 1);
  CHECK(coarse_space_index(5, 2) == 1);
  CHECK_THROWS_AS(coarse_space_index(16, 1), Error);
  CHECK_THROWS_AS(coarse_space_index(-16, 1), Error);
}

TEST_CASE("index maps are monotone and sandwich the fine nodes") {
  for (int n : {1, 2, 3}) {
    const FineGrid g{n};
    const double mesh = std::ldexp(1.0, -n);
    long prev = -1;
    for (long i = 0; i < g.time_steps(); ++i) {
      const long k = coarse_time_index(i, n);
      CHECK(k >= prev);
      prev = k;
      CHECK(k * mesh <= g.time(i));
      CHECK(g.time(i) < (k + 1) * mesh);
    }
    prev = coarse_space_index(-g.n_half() + 1, n);
    for (long j = -g.n_half() + 1; j < g.n_half(); ++j) {
      const long l = coarse_space_index(j, n);
      CHECK(l >= prev);
      prev = l;
      CHECK(l * mesh <= g.point(j));
      CHECK(g.point(j) < (l + 1) * mesh);
      CHECK(on_coarse_node(j, n) == (g.point(j) == l * mesh));
      CHECK(on_coarse_node(j, n) == (((j % (1L << n)) + (1L << n)) % (1L << n) == 0));
    }
  }
}

TEST_CASE("delta_b") {
  const SheetConfig c = level(2);
  const SheetSample product = SheetSample::tabulate(c, [](double t, double x) { return t * x; });
  CHECK_THAT(delta_b(product, 0, 3), WithinAbs(1.0 / 16, 1e-15));   // off node
  CHECK_THAT(delta_b(product, 70, 8), WithinAbs(1.0 / 16, 1e-15));  // on node
  CHECK_THAT(delta_b(product, 70, -4), WithinAbs(1.0 / 16, 1e-15));
  const SheetSample constant = SheetSample::tabulate(c, [](double, double) { return 2.0; });
  CHECK(delta_b(constant, 5, 7) == 0.0);

  const SheetSample s = sample_sheet(c);
  // on-node value is the average of the two neighbouring cells
  CHECK_THAT(delta_b(s, 100, 4), WithinAbs(0.5 * rect_increment(s, 1, 0) + 0.5 * rect_increment(s, 1, 1), 1e-15));
  CHECK(delta_b(s, 100, 5) == rect_increment(s, 1, 1));
  // outside the sheet support the noise vanishes; on the support edge only the inside cell counts
  const FineGrid g{2};
  CHECK(delta_b(s, 0, g.n_half() - 1) == 0.0);
  CHECK_THAT(delta_b(s, 0, 64), WithinAbs(0.5 * rect_increment(s, 0, 15), 1e-15));
}

TEST_CASE("noise_eval") {
  const SheetConfig c = level(1);
  const SheetSample product = SheetSample::tabulate(c, [](double t, double x) { return t * x; });
  CHECK(noise_eval(product, 0.3, 2.5) == 0.0);
  CHECK(noise_eval(product, 0.3, -2.0001) == 0.0);
  CHECK_THAT(noise_eval(product, 0.7, -1.3), WithinAbs(1.0, 1e-14));
  CHECK_THROWS_AS(noise_eval(product, 1.0, 0.0), Error);

  const SheetSample s = sample_sheet(c);
  for (double t : {0.05, 0.3, 0.6, 0.95})
    for (double x : {-1.9, -0.7, 0.1, 0.49, 1.2}) {
      const double base = noise_eval(s, t, x);
      const double t0 = std::floor(t * 2) / 2, x0 = std::floor(x * 2) / 2;
      CHECK(noise_eval(s, t0 + 0.01, x0 + 0.01) == base);
      CHECK(noise_eval(s, t0 + 0.49, x0 + 0.49) == base);
    }
}

TEST_CASE("bilinear_sheet_eval") {
  const SheetConfig c = level(2);
  const SheetSample s = sample_sheet(c);
  for (long i = 0; i <= c.time_cells(); ++i)
    for (long j = -c.space_half_cells(); j <= c.space_half_cells(); ++j)
      CHECK(bilinear_sheet_eval(s, i * 0.25, j * 0.25) == s.at(i, j));
  const double mid = bilinear_sheet_eval(s, 0.375, 0.625);
  CHECK_THAT(mid, WithinAbs(0.25 * (s.at(1, 2) + s.at(1, 3) + s.at(2, 2) + s.at(2, 3)), 1e-14));
  // mixed increment of the interpolant over a cell times 2^{2n} equals the noise there
  for (long i = 0; i < c.time_cells(); ++i)
    for (long j = -4; j < 4; ++j) {
      const double a = i * 0.25, b = j * 0.25;
      const double inc = bilinear_sheet_eval(s, a + 0.25, b + 0.25) - bilinear_sheet_eval(s, a + 0.25, b) -
                         bilinear_sheet_eval(s, a, b + 0.25) + bilinear_sheet_eval(s, a, b);
      CHECK_THAT(16.0 * inc, WithinAbs(noise_eval(s, a + 0.1, b + 0.1), 1e-12));
    }
  CHECK_THROWS_AS(bilinear_sheet_eval(s, 1.1, 0.0), Error);
}

TEST_CASE("DiscretizedNoise matches noise_eval") {
  const SheetSample s = sample_sheet(level(2));
  const DiscretizedNoise d(s);
  for (long k = 0; k < 4; ++k)
    for (long l = -16; l < 16; ++l) CHECK(d.value(k, l) == noise_eval(s, (k + 0.5) / 4, (l + 0.5) / 4));
  CHECK(d.value(4, 0) == 0.0);
  CHECK(d.value(0, 16) == 0.0);
}
