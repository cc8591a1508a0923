#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gsl/gsl_sf_bessel.h>

#include <cmath>

#include "lqg/kernels.hpp"

using namespace lqg;

// Closed-form oracles: k(z) = m|z| K1(m|z|), g(r) = K0(m r).
static double bessel_k_oracle(double m, double d) {
  return m * d * gsl_sf_bessel_K1(m * d);
}
static double bessel_green_oracle(double m, double r) {
  return gsl_sf_bessel_K0(m * r);
}

TEST_CASE("kernel_k at zero distance") {
  CHECK(kernel_k(1.0, 0.0) == 1.0);
  CHECK(kernel_k(2.5, 0.0) == 1.0);
}

TEST_CASE("kernel_k matches Bessel oracle over m*d in [0.01, 10]") {
  for (double m : {0.5, 1.0, 2.0}) {
    for (double md = 0.01; md <= 10.0; md *= 1.3) {
      const double d = md / m;
      const double got = kernel_k(m, d);
      const double want = bessel_k_oracle(m, d);
      CHECK(std::abs(got - want) <= 1e-8 * want);
    }
  }
}

TEST_CASE("kernel_k spot values at m = 1") {
  CHECK(kernel_k(1.0, 1.0) == doctest::Approx(0.60191).epsilon(1e-4));
  CHECK(kernel_k(1.0, 10.0) < 1e-3);
}

TEST_CASE("kernel_k is nonincreasing in d") {
  double prev = kernel_k(1.0, 0.0);
  for (double d = 0.05; d <= 8.0; d += 0.05) {
    const double v = kernel_k(1.0, d);
    CHECK(v <= prev + 1e-12);
    CHECK(v > 0.0);
    prev = v;
  }
}

TEST_CASE("green_massive both forms agree with K0 oracle") {
  for (double m : {0.5, 1.0, 2.0}) {
    for (double mr = 0.01; mr <= 10.0; mr *= 1.5) {
      const double r = mr / m;
      const double want = bessel_green_oracle(m, r);
      const double heat = green_massive(m, r, GreenForm::kHeatParam);
      const double band = green_massive(m, r, GreenForm::kBandIntegral);
      CHECK(std::abs(heat - want) <= 1e-8 * want);
      CHECK(std::abs(band - want) <= 1e-7 * want + 1e-12);
    }
  }
}

TEST_CASE("green_massive spot values") {
  CHECK(green_massive(1.0, 1.0) == doctest::Approx(0.42102).epsilon(1e-4));
  CHECK(green_massive(1.0, 2.0) == doctest::Approx(0.11389).epsilon(1e-4));
}

TEST_CASE("green_massive log singularity structure") {
  const double g1 = green_massive(1.0, 1e-4);
  const double g2 = green_massive(1.0, 2e-4);
  CHECK(g1 - g2 == doctest::Approx(std::log(2.0)).epsilon(1e-4));
  CHECK_THROWS_AS(green_massive(1.0, 0.0), std::domain_error);
}

TEST_CASE("band covariance at r = 0 equals log cutoff ratio") {
  const auto p = make_params(1.0, 1.0, 6);
  CHECK(band_covariance(p, 1, 0.0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-10));
  for (int n = 1; n <= 6; ++n)
    CHECK(band_covariance(p, n, 0.0) ==
          doctest::Approx(band_variance(p, n)).epsilon(1e-10));
}

TEST_CASE("band covariances telescope to the partial Green integral") {
  const auto p = make_params(1.0, 1.0, 5);
  for (double r : {0.0, 0.01, 0.1, 0.3, 1.0}) {
    double sum = 0.0;
    for (int n = 1; n <= 5; ++n) sum += band_covariance(p, n, r);
    const double whole = band_covariance_sum(p, r);
    CHECK(std::abs(sum - whole) <= 1e-8 * std::max(whole, 1e-6));
  }
}

TEST_CASE("band covariance decays at large lag") {
  const auto p = make_params(1.0, 1.0, 1);
  CHECK(band_covariance(p, 1, 20.0) < 1e-4);
  CHECK(band_covariance(p, 1, 20.0) >= 0.0);
}

TEST_CASE("band covariance nonnegative over a lag sweep") {
  const auto p = make_params(1.0, 1.0, 4);
  for (int n = 1; n <= 4; ++n)
    for (double r = 0.0; r <= 4.0; r += 0.13)
      CHECK(band_covariance(p, n, r) >= 0.0);
}

TEST_CASE("params validation") {
  CHECK_THROWS(make_params(-1.0, 1.0, 3));
  CHECK_THROWS(make_params(1.0, 2.0, 3));
  KernelParams p = make_params(1.0, 1.0, 3);
  p.cutoffs[0] = 0.5;
  CHECK_THROWS(p.validate());
}

TEST_CASE("band policy: smallest N with 1/a_N below dx/2") {
  CHECK(bands_for_spacing(1.0 / 256.0) == 10);   // a_10 = 1024 > 512
  CHECK(bands_for_spacing(1.0 / 2048.0) == 13);  // a_13 = 8192 > 4096
}

TEST_CASE("total variance ledger") {
  const auto p = make_params(1.0, 1.0, 7);
  CHECK(total_variance(p) == doctest::Approx(7.0 * std::log(2.0)));
}

TEST_CASE("band profile matches direct quadrature") {
  const auto p = make_params(1.0, 1.0, 3);
  BandProfile prof(p, 2, 4.0, 1.0 / 64.0);
  for (double r = 0.0; r < 3.5; r += 0.037) {
    const double want = band_covariance(p, 2, r);
    CHECK(prof(r) == doctest::Approx(want).epsilon(1e-5));
  }
}
