#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "doctest.h"
#include "selmeta/errors.hpp"
#include "selmeta/stats.hpp"

using namespace selmeta;

TEST_SUITE("stats") {

TEST_CASE("normal density at reference points") {
  CHECK(norm_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  // mpmath, 30 digits
  CHECK(std::abs(norm_pdf(1.0) - 0.24197072451914335) < 1e-16);
  for (double x : {0.1, 0.7, 2.5, 6.0, 11.0}) CHECK(norm_pdf(x) == norm_pdf(-x));
}

TEST_CASE("normal cdf reference values and limits") {
  CHECK(norm_cdf(0.0) == 0.5);
  CHECK(std::abs(norm_cdf(1.959963985) - 0.97500000002688) < 1e-13);
  CHECK(norm_cdf(-std::numeric_limits<double>::infinity()) == 0.0);
  CHECK(norm_cdf(std::numeric_limits<double>::infinity()) == 1.0);
}

TEST_CASE("normal cdf agrees with a long-double reference to 1e-12 absolute") {
  const boost::math::normal_distribution<long double> ref;
  for (double x = -12.0; x <= 12.0; x += 0.01) {
    const double expected = static_cast<double>(boost::math::cdf(ref, static_cast<long double>(x)));
    REQUIRE(std::abs(norm_cdf(x) - expected) <= 1e-12);
  }
}

TEST_CASE("normal cdf is nondecreasing on a sorted grid") {
  double previous = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = -10.0 + 20.0 * i / 9999.0;
    const double f = norm_cdf(x);
    REQUIRE(f >= previous);
    previous = f;
  }
}

TEST_CASE("normal quantile reference values and round trips") {
  CHECK(norm_quantile(0.5) == 0.0);
  CHECK(std::abs(norm_quantile(0.975) - 1.959963984540054) < 1e-12);
  for (double p = 1e-6; p < 1.0; p += 1e-3) {
    REQUIRE(std::abs(norm_cdf(norm_quantile(p)) - p) <= 1e-9);
  }
  for (double x = -6.0; x <= 6.0; x += 0.001) {
    REQUIRE(std::abs(norm_quantile(norm_cdf(x)) - x) <= 1e-8);
  }
  CHECK(std::abs(norm_quantile(1e-300) + 37.0471) < 1e-3);
}

TEST_CASE("normal quantile rejects arguments outside (0, 1)") {
  CHECK_THROWS_AS(norm_quantile(0.0), DomainError);
  CHECK_THROWS_AS(norm_quantile(1.0), DomainError);
  CHECK_THROWS_AS(norm_quantile(-0.1), DomainError);
  CHECK_THROWS_AS(norm_quantile(std::nan("")), DomainError);
  CHECK(std::isfinite(norm_quantile_clamped(0.0)));
  CHECK(std::isfinite(norm_quantile_clamped(1.0)));
}

TEST_CASE("chi-square(1) quantiles") {
  CHECK(std::abs(chi2_quantile_1df(0.95) - 3.841458820694126) < 1e-9);
  CHECK(std::abs(chi2_quantile_1df(0.90) - 2.705543454095415) < 1e-9);
  CHECK(chi2_quantile_1df(1e-12) < 1e-20);
  CHECK_THROWS_AS(chi2_quantile_1df(1.5), DomainError);
  CHECK_THROWS_AS(chi2_quantile_1df(0.0), DomainError);
}

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  RngStream c(42, 8);
  RngStream d(43, 7);
  std::vector<std::uint64_t> xa, xb, xc, xd;
  for (int i = 0; i < 1000; ++i) {
    xa.push_back(a.next_u64());
    xb.push_back(b.next_u64());
    xc.push_back(c.next_u64());
    xd.push_back(d.next_u64());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);
}

TEST_CASE("neighbouring streams are uncorrelated") {
  // Pearson correlation of uniforms from streams s and s + 1.
  const int m = 20000;
  RngStream a(1, 100);
  RngStream b(1, 101);
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int i = 0; i < m; ++i) {
    const double x = a.uniform();
    const double y = b.uniform();
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
  }
  const double cov = sab / m - (sa / m) * (sb / m);
  const double corr = cov / std::sqrt((saa / m - sa * sa / m / m) * (sbb / m - sb * sb / m / m));
  CHECK(std::abs(corr) < 4.0 / std::sqrt(m));
}

TEST_CASE("variates have the advertised ranges and moments") {
  RngStream rng(5, 0);
  const int m = 200000;
  double mean = 0.0, sq = 0.0;
  int heads = 0;
  for (int i = 0; i < m; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    const double z = rng.normal();
    mean += z;
    sq += z * z;
    heads += rng.bernoulli_half() ? 1 : 0;
    const double r = rng.uniform(-2.0, 3.0);
    REQUIRE(r >= -2.0);
    REQUIRE(r < 3.0);
    REQUIRE(rng.below(7) < 7u);
  }
  CHECK(std::abs(mean / m) < 5.0 / std::sqrt(m));
  CHECK(std::abs(sq / m - 1.0) < 5.0 * std::sqrt(2.0 / m));
  CHECK(std::abs(heads / double(m) - 0.5) < 5.0 * 0.5 / std::sqrt(m));
}

TEST_CASE("derived seeds separate their arguments") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 4; ++a) {
    for (std::uint64_t b = 0; b < 256; ++b) seen.insert(derive_seed(1, a, b));
  }
  CHECK(seen.size() == 4 * 256);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}

}  // TEST_SUITE
