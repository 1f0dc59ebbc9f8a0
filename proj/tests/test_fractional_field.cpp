#include "catch_amalgamated.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "rheat/fractional_field.hpp"
#include "rheat/rng.hpp"

using namespace rheat;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {

SheetConfig small_config(int n, std::uint64_t seed = 1) {
  SheetConfig c;
  c.n = n;
  c.m0 = 2000;
  c.m1 = 500;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("HurstPair validates and derives the rough regime") {
  CHECK_THROWS_AS(HurstPair(0.0, 0.5), Error);
  CHECK_THROWS_AS(HurstPair(0.5, 1.0), Error);
  const HurstPair rough(0.25, 0.25);
  CHECK(rough.rough_regime());
  CHECK_THAT(rough.alpha0(), WithinAbs(0.25, 1e-15));
  CHECK_FALSE(HurstPair(0.4, 0.3).rough_regime());
}

TEST_CASE("normalization constant") {
  SECTION("h = 1/2 gives 1/sqrt(2 pi)") {
    CHECK_THAT(normalization_constant(0.5), WithinRel(1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-12));
  }
  SECTION("h = 1/4 against an mpmath oscillatory-quadrature oracle") {
    // 1/2 (int_0^inf (1 - cos x) / x^1.5 dx)^{-1/2}, mpmath quad + quadosc
    CHECK_THAT(normalization_constant(0.25), WithinRel(0.315809388873032350645, 1e-8));
  }
  SECTION("closed form and quadrature agree, and refinement is stable") {
    for (double h : {0.05, 0.25, 0.5, 0.75, 0.95}) {
      const double closed = normalization_integral(h);
      CHECK_THAT(normalization_integral_quadrature(h), WithinRel(closed, 1e-8));
      CHECK_THAT(normalization_integral_quadrature(h, 1e-14), WithinRel(normalization_integral_quadrature(h), 1e-8));
    }
  }
  SECTION("outside (0,1) is a domain error") {
    CHECK_THROWS_AS(normalization_constant(0.0), Error);
    CHECK_THROWS_AS(normalization_constant(1.0), Error);
  }
}

TEST_CASE("cov_time") {
  SheetConfig c;
  c.n = 2;
  for (double t : {0.0, 0.3, 1.0}) CHECK(cov_time(0.0, t, c) == 0.0);
  CHECK(cov_time(0.25, 0.75, c) == cov_time(0.75, 0.25, c));
  // c^2 * 2 int_0^16 (2 - 2 cos(w/2)) / w^1.5 dw, mpmath adaptive quadrature
  CHECK_THAT(cov_time(0.5, 0.5, c), WithinRel(0.495596748658398407989, 1e-3));
}

TEST_CASE("cov_space") {
  SheetConfig c;
  c.n = 2;
  for (double y : {-2.0, 0.5, 3.0}) CHECK(cov_space(0.0, y, c) == 0.0);
  for (double x : {-1.5, 0.25, 4.0}) CHECK(cov_space(x, x, c) >= 0.0);
  // c^2 * 2 int_0^4 (cos 2w - 2 cos w + 1) / w^1.5 dw, mpmath adaptive quadrature
  CHECK_THAT(cov_space(1.0, -1.0, c), WithinRel(0.128932365752019489332, 1e-3));
}

TEST_CASE("raw sheet falls back to fBm covariance") {
  SheetConfig c;
  c.kappa = INFINITY;
  CHECK_THAT(cov_time(0.3, 0.7, c), WithinRel(fbm_covariance(0.3, 0.7, 0.25), 1e-15));
  CHECK_THAT(fbm_covariance(0.4, 0.4, 0.5), WithinRel(0.4, 1e-15));
}

TEST_CASE("covariance matrices are symmetric PSD and resolution stable") {
  for (int n : {1, 2, 3}) {
    SheetConfig c;
    c.n = n;
    const SheetSampler s(c);
    for (const Matrix* m : {&s.time_covariance(), &s.space_covariance()}) {
      const double scale = m->cwiseAbs().maxCoeff();
      CHECK((*m - m->transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
      const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(*m).eigenvalues();
      CHECK(ev.minCoeff() >= -1e-10 * ev.cwiseAbs().maxCoeff());
    }
  }
  SheetConfig c;
  c.n = 2;
  SheetConfig fine = c;
  fine.m0 *= 2;
  fine.m1 *= 2;
  const auto ts = coarse_times(c);
  const auto xs = coarse_points(c);
  for (double s : ts)
    for (double t : ts)
      if (cov_time(s, t, c) != 0.0) CHECK_THAT(cov_time(s, t, fine), WithinRel(cov_time(s, t, c), 5e-3));
  for (std::size_t a = 0; a < xs.size(); a += 3)
    for (std::size_t b = 0; b < xs.size(); b += 3)
      if (std::abs(cov_space(xs[a], xs[b], c)) > 1e-3) {
        CHECK_THAT(cov_space(xs[a], xs[b], fine), WithinRel(cov_space(xs[a], xs[b], c), 5e-3));
      }
}

TEST_CASE("psd_sqrt") {
  SECTION("identity and diagonal") {
    CHECK((psd_sqrt(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)).norm() == 0.0);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 4;
    d(1, 1) = 9;
    const Matrix r = psd_sqrt(d);
    CHECK_THAT(r(0, 0), WithinRel(2.0, 1e-14));
    CHECK_THAT(r(1, 1), WithinRel(3.0, 1e-14));
    CHECK(std::abs(r(0, 1)) < 1e-15);
  }
  SECTION("random Gram matrices") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
      const CounterNormal normal(seed);
      Matrix g(8, 8);
      for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) g(r, c) = normal(static_cast<std::uint64_t>(8 * r + c));
      const Matrix a = g.transpose() * g;
      const Matrix d = psd_sqrt(a);
      CHECK((d * d - a).norm() <= 1e-8 * a.norm());
      CHECK((d - d.transpose()).norm() == 0.0);
    }
  }
  SECTION("rank deficient input keeps zero rows exactly") {
    Matrix a = Matrix::Zero(3, 3);
    a(1, 1) = 2;
    a(1, 2) = a(2, 1) = 1;
    a(2, 2) = 1;
    const Matrix d = psd_sqrt(a);
    CHECK(d.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((d * d - a).norm() <= 1e-12);
  }
  SECTION("rejections") {
    Matrix asym = Matrix::Identity(2, 2);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(psd_sqrt(asym), Error);
    Matrix neg = Matrix::Identity(2, 2);
    neg(1, 1) = -1;
    CHECK_THROWS_AS(psd_sqrt(neg), Error);
    Matrix nan = Matrix::Identity(2, 2);
    nan(0, 0) = NAN;
    CHECK_THROWS_AS(psd_sqrt(nan), Error);
  }
}

TEST_CASE("sample_sheet") {
  SECTION("vanishes on t = 0 and x = 0") {
    for (int n : {1, 2, 3}) {
      const SheetConfig c = small_config(n, 17);
      const SheetSample s = sample_sheet(c);
      CHECK(s.values().row(0).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(s.values().col(c.space_half_cells()).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(s.values().rows() == (1L << n) + 1);
      CHECK(s.values().cols() == (2L << (2 * n)) + 1);
    }
  }
  SECTION("same seed gives bit-identical values, other seeds differ") {
    const SheetConfig c = small_config(2, 99);
    const Matrix a = sample_sheet(c).values();
    const Matrix b = sample_sheet(c).values();
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
    SheetConfig other = c;
    other.seed = 100;
    CHECK((sample_sheet(other).values() - a).norm() > 0.0);
  }
  SECTION("empirical covariance matches C0 C1 within 4 standard errors") {
    const SheetConfig c = small_config(1);
    const SheetSampler sampler(c);
    const int reps = 2000;
    struct Pair { long i1, j1, i2, j2; };
    for (const Pair p : {Pair{1, 2, 2, 3}, Pair{2, 1, 2, 1}, Pair{2, -3, 1, 4}}) {
      std::vector<double> prod(reps);
      for (int r = 0; r < reps; ++r) {
        const SheetSample s = sampler.sample(derive_seed(7, static_cast<std::uint64_t>(r)));
        prod[r] = s.at(p.i1, p.j1) * s.at(p.i2, p.j2);
      }
      double mean = 0.0;
      for (double v : prod) mean += v;
      mean /= reps;
      double var = 0.0;
      for (double v : prod) var += (v - mean) * (v - mean);
      const double se = std::sqrt(var / (reps - 1) / reps);
      const double half = static_cast<double>(c.space_half_cells());
      const double expected = sampler.time_covariance()(p.i1, p.i2) *
                              sampler.space_covariance()(static_cast<long>(p.j1 + half), static_cast<long>(p.j2 + half));
      CHECK(std::abs(mean - expected) <= 4.0 * se);
    }
  }
}

TEST_CASE("rect_increment") {
  const SheetConfig c = small_config(2);
  const SheetSample product = SheetSample::tabulate(c, [](double t, double x) { return t * x; });
  for (long i = 0; i < c.time_cells(); ++i)
    for (long j = -c.space_half_cells(); j < c.space_half_cells(); ++j)
      CHECK_THAT(rect_increment(product, i, j), WithinAbs(1.0 / 16, 1e-15));
  const SheetSample constant = SheetSample::tabulate(c, [](double, double) { return 3.5; });
  CHECK(rect_increment(constant, 1, -2) == 0.0);

  const SheetSample s = sample_sheet(c);
  double total = 0.0;
  for (long i = 0; i < c.time_cells(); ++i)
    for (long j = -c.space_half_cells(); j < c.space_half_cells(); ++j) total += rect_increment(s, i, j);
  const long top = c.time_cells(), edge = c.space_half_cells();
  CHECK_THAT(total, WithinAbs(s.at(top, edge) - s.at(top, -edge) - s.at(0, edge) + s.at(0, -edge), 1e-12));

  CHECK_THROWS_AS(rect_increment(s, c.time_cells(), 0), Error);
  CHECK_THROWS_AS(rect_increment(s, 0, c.space_half_cells()), Error);
  CHECK_THROWS_AS(rect_increment(s, -1, 0), Error);
}
