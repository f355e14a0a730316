#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "frackin/levy.hpp"

using namespace frackin;

namespace {

const double inv_pi = 1.0 / std::numbers::pi;
const double gauss_peak = 0.5 / std::sqrt(std::numbers::pi);

double cauchy(double x) { return inv_pi / (x * x + 1.0); }
double gauss(double x) { return gauss_peak * std::exp(-x * x / 4.0); }

} // namespace

TEST(LevyIntegral, PeakValues) {
  EXPECT_NEAR(levy_density_integral(1.0, 0.0), 0.3183098862, 1e-9);
  EXPECT_NEAR(levy_density_integral(2.0, 0.0), 0.2820947918, 1e-9);
  // int_0^inf e^{-k^a} dk = Gamma(1 + 1/a).
  EXPECT_NEAR(levy_density_integral(1.5, 0.0), std::tgamma(1.0 + 1.0 / 1.5) * inv_pi, 1e-9);
  EXPECT_NEAR(levy_density_integral(1.5, 0.0), 0.2873527515, 1e-9);
}

TEST(LevyIntegral, ClosedFormLimits) {
  for (double x = -10.0; x <= 10.0; x += 0.25) {
    EXPECT_NEAR(levy_density_integral(1.0, x), cauchy(x), 1e-8) << x;
    EXPECT_NEAR(levy_density_integral(2.0, x), gauss(x), 1e-8) << x;
  }
}

TEST(LevyIntegral, Symmetry) {
  for (double a : {0.7, 1.3, 1.9}) {
    for (double x : {0.3, 2.0, 17.5}) {
      EXPECT_EQ(levy_density_integral(a, x), levy_density_integral(a, -x));
    }
  }
}

TEST(LevyIntegral, Positivity) {
  for (double a : {0.5, 0.8, 1.0, 1.5, 2.0}) {
    for (double x = -50.0; x <= 50.0; x += 2.5) {
      EXPECT_GE(levy_density_integral(a, x), 0.0) << a << " " << x;
    }
  }
}

TEST(LevyIntegral, Normalisation) {
  const double step = 0.05;
  for (double a : {1.2, 1.5, 2.0}) {
    double total = 0.0;
    const int n = static_cast<int>(std::lround(100.0 / step));
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 0.5 * step : step;
      total += w * levy_density_integral(a, -50.0 + i * step);
    }
    EXPECT_GE(total, 0.98) << a;
    EXPECT_LE(total, 1.0001) << a;
    if (a == 2.0) {
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(LevyIntegral, SubCauchyAgainstConvergentTailSeries) {
  // For alpha < 1 the large-x expansion converges everywhere on x > 0.
  for (double x : {2.0, 5.0, 20.0}) {
    EXPECT_NEAR(levy_density_integral(0.5, x), levy_tail_standard(0.5, x, 80), 1e-8) << x;
  }
}

TEST(LevyIntegral, DomainErrors) {
  EXPECT_THROW(levy_density_integral(0.0, 1.0), DomainError);
  EXPECT_THROW(levy_density_integral(2.1, 1.0), DomainError);
}

TEST(LevySeries, Examples) {
  EXPECT_NEAR(levy_density_series(2.0, 1.0), std::exp(-0.25) * gauss_peak, 1e-12);
  EXPECT_NEAR(levy_density_series(2.0, 1.0), 0.2196956447, 1e-10);
  EXPECT_NEAR(levy_density_series(2.0, 0.0), 0.2820947918, 1e-10);
  EXPECT_NEAR(levy_density_series(1.5, 1.0), levy_density_integral(1.5, 1.0), 1e-6);
}

TEST(LevySeries, AgreesWithQuadrature) {
  for (double a : {1.2, 1.5, 1.8, 2.0}) {
    for (double x = -3.0; x <= 3.0; x += 0.5) {
      EXPECT_NEAR(levy_density_series(a, x), levy_density_integral(a, x), 1e-6) << a << " " << x;
    }
  }
}

TEST(LevySeries, Errors) {
  EXPECT_THROW(levy_density_series(1.0, 0.5), DomainError);
  EXPECT_THROW(levy_density_series(0.5, 0.5), DomainError);
  // Near alpha = 1 the alternating terms reach ~1e700 before decaying.
  EXPECT_THROW(levy_density_series(1.1, 3.0), ConvergenceError);
}

TEST(LevyTail, PrintedLeadingTerm) {
  const double expected = std::tgamma(2.5) / (std::numbers::pi * std::pow(10.0, 2.5));
  EXPECT_NEAR(levy_tail_asymptotic(1.5, 10.0, 1), expected, 1e-15);
  EXPECT_NEAR(levy_tail_asymptotic(1.5, 10.0, 1), 1.3381e-3, 1e-7);
  EXPECT_LT(levy_tail_asymptotic(1.5, 1e6, 3), 1e-14);
  EXPECT_THROW(levy_tail_asymptotic(1.5, 0.0, 1), DomainError);
  EXPECT_THROW(levy_tail_asymptotic(2.0, 10.0, 1), DomainError);
}

TEST(LevyTail, StandardConstantTracksQuadrature) {
  // The sin(n pi alpha / 2) expansion is the one the quadrature follows; the
  // printed sin(n pi / 2) variant overshoots by 1/sin(3 pi / 4) at alpha = 1.5.
  const double x = 20.0;
  const double quad = levy_density_integral(1.5, x);
  EXPECT_NEAR(levy_tail_standard(1.5, x, 4) / quad, 1.0, 1e-3);
  // Far out the leading terms dominate and the ratio settles at sqrt(2).
  EXPECT_NEAR(levy_tail_asymptotic(1.5, 400.0, 1) / levy_density_integral(1.5, 400.0),
              std::sqrt(2.0), 5e-3);
}

TEST(FreeStreaming, Examples) {
  EXPECT_NEAR(free_streaming_profile(LevyProfile(FractionalOrder(2.0), 1.0, 1.0), 0.0),
              0.2820947918, 1e-9);
  EXPECT_NEAR(free_streaming_profile(LevyProfile(FractionalOrder(1.0), 1.0, 2.0), 0.0),
              0.1591549431, 1e-9);
  EXPECT_NEAR(free_streaming_profile(LevyProfile(FractionalOrder(1.5), 2.0, 1.0), 0.0),
              std::pow(2.0, -2.0 / 3.0) * 0.2873527515, 1e-9);
  EXPECT_THROW(LevyProfile(FractionalOrder(1.5), 0.0, 1.0), DomainError);
}

TEST(FreeStreaming, Similarity) {
  const LevyProfile p(FractionalOrder(1.7), 0.8, 2.5);
  const double s = std::pow(0.8 * 2.5, -1.0 / 1.7);
  for (double q : {-4.0, 0.0, 0.7, 9.0}) {
    EXPECT_NEAR(free_streaming_profile(p, q), s * levy_density_integral(1.7, s * q), 1e-15);
  }
  // alpha = 2: the heat kernel with diffusivity g.
  const LevyProfile heat(FractionalOrder(2.0), 0.5, 3.0);
  for (double q : {-2.0, 0.5, 3.0}) {
    EXPECT_NEAR(free_streaming_profile(heat, q),
                std::exp(-q * q / (4.0 * 1.5)) / std::sqrt(4.0 * std::numbers::pi * 1.5), 1e-9);
  }
}
