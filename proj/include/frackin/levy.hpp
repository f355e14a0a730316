#ifndef FRACKIN_LEVY_HPP
#define FRACKIN_LEVY_HPP

// Symmetric alpha-stable density L_alpha(x) = (1/2pi) int e^{-ikx} e^{-|k|^alpha} dk,
// evaluated by oscillation-aware quadrature, by its power series (1 < alpha <= 2)
// and by its large-x expansion.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "frackin/error.hpp"
#include "frackin/gamma.hpp"
#include "frackin/grid.hpp"

namespace frackin {

namespace detail {

inline void check_stable_index(double alpha, const char* op) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw DomainError(std::string(op) + ": alpha must lie in (0, 2], got " +
                      std::to_string(alpha));
  }
}

// e^{-k^alpha} drops below this at the quadrature cut-off.
inline constexpr double levy_envelope_floor = 1e-16;

} // namespace detail

/// (1/pi) int_0^K cos(kx) e^{-k^alpha} dk with K chosen so that the envelope
/// has fallen below 1e-16. Panels are at most pi/(4|x|) wide once |x| > 1 and
/// each gets a 15-point Gauss-Kronrod rule. The k^alpha cusp at the origin is
/// resolved by geometric grading of the first panel.
inline double levy_density_integral(double alpha, double x) {
  detail::check_stable_index(alpha, "levy_density_integral");
  const double ax = std::abs(x);
  const double cutoff = std::pow(-std::log(detail::levy_envelope_floor), 1.0 / alpha);
  const double width = ax > 1.0 ? std::numbers::pi / (4.0 * ax) : 0.25;
  auto integrand = [alpha, ax](double k) {
    return std::cos(k * ax) * std::exp(-std::pow(k, alpha));
  };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 15>;
  double total = 0.0;
  const double first = std::min(width, cutoff);
  double b = first;
  for (int level = 0; level < 60; ++level) {
    const double a = 0.5 * b;
    total += Quad::integrate(integrand, a, b, 0);
    b = a;
  }
  for (double a = first; a < cutoff;) {
    const double next = std::min(a + width, cutoff);
    total += Quad::integrate(integrand, a, next, 0);
    a = next;
  }
  // The true density is positive; anything below zero is quadrature
  // round-off in a tail that is already far below the 1e-8 error budget.
  return std::max(0.0, total / std::numbers::pi);
}

namespace detail {

template <class Real>
double stable_series_sum(double alpha, double ax, std::size_t last_n) {
  using std::exp;
  using std::log;
  const Real a(alpha);
  const Real lx = ax > 0.0 ? Real(log(Real(ax))) : Real(0);
  Real sum(0);
  for (std::size_t n = 1; n <= last_n; n += 2) {
    const Real nn(static_cast<double>(n));
    Real lt = boost::math::lgamma(Real(1) + nn / a) - boost::math::lgamma(nn + Real(1));
    if (n > 1) {
      lt += (nn - Real(1)) * lx;
    }
    const Real term = exp(lt);
    if (((n - 1) / 2) % 2 == 0) {
      sum += term;
    } else {
      sum -= term;
    }
  }
  return static_cast<double>(sum / boost::math::constants::pi<Real>());
}

} // namespace detail

/// Power series of L_alpha for 1 < alpha <= 2:
///   -(1/(pi x)) sum_n (-x)^n Gamma(1 + n/alpha) sin(n pi/2) / n!.
/// Only odd n contribute. Terms grow before they decay when |x| is large, so
/// the sum is accumulated in as much precision as the largest term demands.
inline double levy_density_series(double alpha, double x) {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw DomainError("levy_density_series: alpha must lie in (1, 2], got " +
                      std::to_string(alpha));
  }
  const double ax = std::abs(x);
  if (ax == 0.0) {
    return gamma(1.0 + 1.0 / alpha) / std::numbers::pi;
  }
  constexpr std::size_t max_terms = 4000;
  const double log_floor = std::log(detail::levy_envelope_floor);
  const double lx = std::log(ax);
  double peak = -INFINITY;
  double previous = INFINITY;
  std::size_t last_n = 0;
  for (std::size_t n = 1; n <= max_terms; n += 2) {
    const double nn = static_cast<double>(n);
    const double lt = (nn - 1.0) * lx + log_gamma(1.0 + nn / alpha) - log_gamma(nn + 1.0);
    peak = std::max(peak, lt);
    if (lt < log_floor && lt < previous) {
      last_n = n;
      break;
    }
    previous = lt;
  }
  if (last_n == 0) {
    throw ConvergenceError("levy_density_series: terms still above 1e-16 after " +
                           std::to_string(max_terms) + " terms at x = " +
                           std::to_string(x));
  }
  const double digits_lost = peak / std::numbers::ln10;
  if (digits_lost < 2.0) {
    return detail::stable_series_sum<long double>(alpha, ax, last_n);
  }
  if (digits_lost < 30.0) {
    return detail::stable_series_sum<boost::multiprecision::cpp_bin_float_50>(alpha, ax,
                                                                              last_n);
  }
  if (digits_lost < 80.0) {
    return detail::stable_series_sum<boost::multiprecision::cpp_bin_float_100>(alpha, ax,
                                                                               last_n);
  }
  throw ConvergenceError("levy_density_series: cancellation at x = " + std::to_string(x) +
                         " needs more than 100 significant digits");
}

/// Large-x expansion with the sin(n pi / 2) factor:
///   -(1/(pi x)) sum_{n=1}^{N} (-1)^n x^{-n alpha} Gamma(1 + n alpha) sin(n pi/2) / n!.
inline double levy_tail_asymptotic(double alpha, double x, std::size_t n_terms) {
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw DomainError("levy_tail_asymptotic: alpha must lie in (1, 2)");
  }
  if (!(x > 0.0)) {
    throw DomainError("levy_tail_asymptotic: x must be positive");
  }
  if (n_terms < 1) {
    throw DomainError("levy_tail_asymptotic: need at least one term");
  }
  double sum = 0.0;
  for (std::size_t n = 1; n <= n_terms; n += 2) {
    const double nn = static_cast<double>(n);
    const double magnitude =
        std::exp(log_gamma(1.0 + nn * alpha) - log_gamma(nn + 1.0) - nn * alpha * std::log(x));
    const double sin_half = ((n - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    sum += -magnitude * sin_half; // (-1)^n = -1 for odd n
  }
  return -sum / (std::numbers::pi * x);
}

/// The classical symmetric-stable tail expansion, carrying sin(n pi alpha / 2):
///   (1/(pi x)) sum_{n=1}^{N} (-1)^{n+1} Gamma(1 + n alpha) sin(n pi alpha/2) / n! x^{-n alpha}.
inline double levy_tail_standard(double alpha, double x, std::size_t n_terms) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw DomainError("levy_tail_standard: alpha must lie in (0, 2)");
  }
  if (!(x > 0.0)) {
    throw DomainError("levy_tail_standard: x must be positive");
  }
  double sum = 0.0;
  for (std::size_t n = 1; n <= n_terms; ++n) {
    const double nn = static_cast<double>(n);
    const double magnitude =
        std::exp(log_gamma(1.0 + nn * alpha) - log_gamma(nn + 1.0) - nn * alpha * std::log(x));
    const double sign = n % 2 == 1 ? 1.0 : -1.0;
    sum += sign * magnitude * std::sin(nn * std::numbers::pi * alpha / 2.0);
  }
  return sum / (std::numbers::pi * x);
}

/// Parameters of the self-similar free-streaming profile.
struct LevyProfile {
  FractionalOrder order;
  double g;
  double t;

  LevyProfile(FractionalOrder order_, double g_, double t_) : order(order_), g(g_), t(t_) {
    if (!(g > 0.0) || !(t > 0.0)) {
      throw DomainError("LevyProfile: transport coefficient and time must be positive");
    }
  }

  /// Similarity factor (g t)^(-1/alpha).
  double scale() const { return std::pow(g * t, -1.0 / order.alpha()); }
};

/// (g t)^(-1/alpha) L_alpha[q (g t)^(-1/alpha)].
inline double free_streaming_profile(const LevyProfile& profile, double q) {
  const double s = profile.scale();
  return s * levy_density_integral(profile.order.alpha(), s * q);
}

} // namespace frackin

#endif // FRACKIN_LEVY_HPP
