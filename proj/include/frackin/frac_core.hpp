#ifndef FRACKIN_FRAC_CORE_HPP
#define FRACKIN_FRAC_CORE_HPP

// Fractional derivative and integral kernels on uniform grids.
//
// Caputo derivatives use a product quadrature of the history integral with
// a piecewise-quadratic reconstruction, which converges with order 3 - alpha
// for smooth data. Orders in (1, 2) are reduced
// to an order in (0, 1) applied to the first derivative. Integer orders use
// central finite differences.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frackin/error.hpp"
#include "frackin/gamma.hpp"
#include "frackin/grid.hpp"
#include "frackin/spectral.hpp"

namespace frackin {

namespace detail {

inline void first_difference(std::span<const double> v, double h,
                             std::span<double> out) {
  const std::size_t n = v.size();
  const double inv2h = 0.5 / h;
  if (n == 2) {
    out[0] = out[1] = (v[1] - v[0]) / h;
    return;
  }
  out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv2h;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = (v[i + 1] - v[i - 1]) * inv2h;
  }
  out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv2h;
}

// Fourth-order first derivative; falls back to second order below 5 nodes.
// Orders in (1, 2) differentiate this, so its error must be smooth up to the
// ends: mixing stencils of different accuracy leaves a kink that the
// curvature term amplifies by 1/h^2.
inline void first_difference_4(std::span<const double> v, double h,
                               std::span<double> out) {
  const std::size_t n = v.size();
  if (n < 5) {
    first_difference(v, h, out);
    return;
  }
  const double c = 1.0 / (12.0 * h);
  out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) * c;
  out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) * c;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    out[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) * c;
  }
  const std::size_t m = n - 1;
  out[m] = (25.0 * v[m] - 48.0 * v[m - 1] + 36.0 * v[m - 2] - 16.0 * v[m - 3] + 3.0 * v[m - 4]) * c;
  out[m - 1] = (3.0 * v[m] + 10.0 * v[m - 1] - 18.0 * v[m - 2] + 6.0 * v[m - 3] - v[m - 4]) * c;
}

inline void second_difference(std::span<const double> v, double h,
                              std::span<double> out) {
  const std::size_t n = v.size();
  const double inv_h2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_h2;
  }
  if (n >= 4) {
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * inv_h2;
    out[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) *
                 inv_h2;
  } else {
    out[0] = out[1];
    out[n - 1] = out[n - 2];
  }
}

/// Caputo derivative of order a in (0,1) with terminal `terminal` <= lower.
/// Weight tables depend only on node distance, so one plan serves every line
/// of a tensor along the same axis.
class CaputoPlan {
public:
  CaputoPlan(double a, const Grid1D& grid, double terminal)
      : count_(grid.count), offset_(grid.lower > terminal) {
    const long double al = a;
    const long double h = grid.h;
    const long double g1 = detail::gamma_unchecked(1.0 - a);
    const long double p1 = std::pow(h, 1.0L - al);
    const long double p2 = std::pow(h, 2.0L - al);
    near_.resize(count_);
    curv_.resize(count_);
    for (std::size_t d = 0; d < count_; ++d) {
      const long double dl = static_cast<long double>(d);
      const long double e1 = std::pow(dl + 1.0L, 1.0L - al) - std::pow(dl, 1.0L - al);
      const long double e2 = std::pow(dl + 1.0L, 2.0L - al) - std::pow(dl, 2.0L - al);
      near_[d] = static_cast<double>(p1 * e1 / ((1.0L - al) * g1));
      curv_[d] = static_cast<double>(
          p2 * ((dl + 0.5L) * e1 / (1.0L - al) - e2 / (2.0L - al)) / g1);
    }
    if (offset_) {
      const long double delta = grid.lower - terminal;
      first_slope_.resize(count_);
      first_curv_.resize(count_);
      for (std::size_t n = 0; n < count_; ++n) {
        const long double u = static_cast<long double>(n) * h;
        const long double e1 = std::pow(u + delta, 1.0L - al) - std::pow(u, 1.0L - al);
        const long double e2 = std::pow(u + delta, 2.0L - al) - std::pow(u, 2.0L - al);
        first_slope_[n] = static_cast<double>(e1 / ((1.0L - al) * g1));
        first_curv_[n] = static_cast<double>(
            ((u - 0.5L * h) * e1 / (1.0L - al) - e2 / (2.0L - al)) / g1);
      }
    }
    inv_h_ = 1.0 / grid.h;
  }

  void apply(std::span<const double> v, std::span<double> out,
             std::vector<double>& slope, std::vector<double>& curv) const {
    const std::size_t n = count_;
    slope.assign(n, 0.0);
    curv.assign(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
      slope[k] = (v[k] - v[k - 1]) * inv_h_;
    }
    for (std::size_t k = 2; k < n; ++k) {
      curv[k] = (slope[k] - slope[k - 1]) * inv_h_;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = 1; k <= i; ++k) {
        acc += slope[k] * near_[i - k];
      }
      for (std::size_t k = 2; k <= i; ++k) {
        acc += curv[k] * curv_[i - k];
      }
      if (i >= 1) {
        // First interval borrows the quadratic through nodes 0, 1, 2.
        acc += curv[2] * curv_[i - 1];
      }
      if (offset_) {
        acc += slope[1] * first_slope_[i] + curv[2] * first_curv_[i];
      }
      out[i] = acc;
    }
  }

private:
  std::size_t count_;
  bool offset_;
  double inv_h_ = 1.0;
  std::vector<double> near_, curv_;
  std::vector<double> first_slope_, first_curv_;
};

/// Riemann-Liouville integral of order b > 0 by product trapezoid
/// (piecewise-linear integrand), terminal <= lower.
class IntegralPlan {
public:
  IntegralPlan(double b, const Grid1D& grid, double terminal)
      : count_(grid.count), offset_(grid.lower > terminal) {
    const long double bl = b;
    const long double h = grid.h;
    const long double gb = detail::gamma_unchecked(b);
    const long double hb = std::pow(h, bl);
    left_.resize(count_);
    right_.resize(count_);
    for (std::size_t d = 0; d < count_; ++d) {
      const long double dl = static_cast<long double>(d);
      const long double eb = std::pow(dl + 1.0L, bl) - std::pow(dl, bl);
      const long double eb1 = std::pow(dl + 1.0L, bl + 1.0L) - std::pow(dl, bl + 1.0L);
      left_[d] = static_cast<double>(hb * (eb1 / (bl + 1.0L) - dl * eb / bl) / gb);
      right_[d] =
          static_cast<double>(hb * ((dl + 1.0L) * eb / bl - eb1 / (bl + 1.0L)) / gb);
    }
    if (offset_) {
      const long double delta = grid.lower - terminal;
      first_value_.resize(count_);
      first_slope_.resize(count_);
      for (std::size_t n = 0; n < count_; ++n) {
        const long double u = static_cast<long double>(n) * h;
        const long double p = (std::pow(u + delta, bl) - std::pow(u, bl)) / bl / gb;
        const long double q =
            (std::pow(u + delta, bl + 1.0L) - std::pow(u, bl + 1.0L)) / (bl + 1.0L) / gb;
        first_value_[n] = static_cast<double>(p);
        first_slope_[n] = static_cast<double>(u * p - q);
      }
    }
    inv_h_ = 1.0 / grid.h;
  }

  void apply(std::span<const double> v, std::span<double> out) const {
    for (std::size_t i = 0; i < count_; ++i) {
      double acc = 0.0;
      for (std::size_t k = 1; k <= i; ++k) {
        acc += v[k - 1] * left_[i - k] + v[k] * right_[i - k];
      }
      if (offset_) {
        acc += v[0] * first_value_[i] + (v[1] - v[0]) * inv_h_ * first_slope_[i];
      }
      out[i] = acc;
    }
  }

private:
  std::size_t count_;
  bool offset_;
  double inv_h_ = 1.0;
  std::vector<double> left_, right_;
  std::vector<double> first_value_, first_slope_;
};

} // namespace detail

/// Derivative of a given order along one grid axis, with the Caputo terminal
/// at `terminal` (default: the coordinate origin). Integer orders are
/// classical and accept any grid; fractional orders need terminal <= lower.
class AxisDerivative {
public:
  AxisDerivative(FractionalOrder order, const Grid1D& grid, double terminal = 0.0)
      : order_(order), grid_(grid) {
    if (grid.count < 3) {
      throw GridError("derivative needs at least 3 nodes, got " +
                      std::to_string(grid.count));
    }
    if (order.is_integer()) {
      return;
    }
    if (grid.lower < terminal) {
      throw GridError("Caputo terminal " + std::to_string(terminal) +
                      " lies above the grid start " + std::to_string(grid.lower));
    }
    const double a = order.alpha() < 1.0 ? order.alpha() : order.alpha() - 1.0;
    plan_.emplace(a, grid, terminal);
  }

  const FractionalOrder& order() const noexcept { return order_; }
  const Grid1D& grid() const noexcept { return grid_; }

  void apply(std::span<const double> v, std::span<double> out) const {
    if (order_.alpha() == 1.0) {
      detail::first_difference(v, grid_.h, out);
    } else if (order_.alpha() == 2.0) {
      detail::second_difference(v, grid_.h, out);
    } else if (order_.alpha() < 1.0) {
      plan_->apply(v, out, slope_, curv_);
    } else {
      deriv_.resize(v.size());
      detail::first_difference_4(v, grid_.h, deriv_);
      plan_->apply(deriv_, out, slope_, curv_);
    }
  }

  std::vector<double> operator()(std::span<const double> v) const {
    std::vector<double> out(v.size());
    apply(v, out);
    return out;
  }

private:
  FractionalOrder order_;
  Grid1D grid_;
  std::optional<detail::CaputoPlan> plan_;
  // Scratch buffers; an AxisDerivative instance is not shared across threads.
  mutable std::vector<double> slope_, curv_, deriv_;
};

/// Caputo derivative with terminal `terminal` <= grid.lower.
inline SampledField caputo_deriv_from(const SampledField& f, FractionalOrder order,
                                      double terminal) {
  AxisDerivative d(order, f.grid, terminal);
  return SampledField(f.grid, d(f.values));
}

/// Caputo derivative with terminal at the first grid node, which must be 0.
inline SampledField caputo_deriv(const SampledField& f, FractionalOrder order) {
  if (f.grid.lower != 0.0) {
    throw GridError("caputo_deriv: grid must start at the terminal 0, starts at " +
                    std::to_string(f.grid.lower));
  }
  return caputo_deriv_from(f, order, 0.0);
}

/// Gamma(beta+1)/Gamma(beta+1-alpha) x^(beta-alpha): the Caputo derivative of
/// x^beta.
inline double caputo_monomial(double beta, FractionalOrder order, double x) {
  const double a = order.alpha();
  if (!(beta > a) && !(order.is_integer() && beta == a)) {
    throw DomainError("caputo_monomial: exponent must exceed the order");
  }
  if (x < 0.0) {
    throw DomainError("caputo_monomial: x must be non-negative");
  }
  return gamma(beta + 1.0) / gamma(beta + 1.0 - a) * std::pow(x, beta - a);
}

namespace detail {

inline void check_terminal_grid(const Grid1D& g, const char* op) {
  if (g.count < 3) {
    throw GridError(std::string(op) + ": needs at least 3 nodes");
  }
  if (g.lower != 0.0) {
    throw GridError(std::string(op) + ": grid must start at the terminal 0");
  }
}

} // namespace detail

/// Riemann-Liouville derivative of order alpha in (0,1) by Grunwald-Letnikov
/// weights. Unlike the Caputo form it does not annihilate constants.
inline SampledField riemann_liouville_deriv(const SampledField& f,
                                            FractionalOrder order) {
  detail::check_terminal_grid(f.grid, "riemann_liouville_deriv");
  const double a = order.alpha();
  if (!(a < 1.0)) {
    throw DomainError("riemann_liouville_deriv: order must lie in (0, 1)");
  }
  const std::size_t n = f.size();
  std::vector<double> w(n);
  w[0] = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    w[j] = w[j - 1] * (1.0 - (a + 1.0) / static_cast<double>(j));
  }
  const double scale = std::pow(f.grid.h, -a);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      acc += w[j] * f.values[i - j];
    }
    out[i] = scale * acc;
  }
  return SampledField(f.grid, std::move(out));
}

/// Riemann-Liouville integral (1/Gamma(a)) int_terminal^x f(z)(x-z)^(a-1) dz
/// for any a > 0.
inline std::vector<double> fractional_integral_values(std::span<const double> v,
                                                      const Grid1D& grid, double a,
                                                      double terminal) {
  if (!(a > 0.0)) {
    throw DomainError("fractional integral order must be positive");
  }
  if (grid.lower < terminal) {
    throw GridError("integration terminal lies above the grid start");
  }
  detail::IntegralPlan plan(a, grid, terminal);
  std::vector<double> out(v.size());
  plan.apply(v, out);
  return out;
}

/// Fractional integral of the given order with terminal at 0 (grid.lower==0).
inline SampledField fractional_integral(const SampledField& f, FractionalOrder order) {
  detail::check_terminal_grid(f.grid, "fractional_integral");
  return SampledField(f.grid,
                      fractional_integral_values(f.values, f.grid, order.alpha(), 0.0));
}

/// Riesz derivative of a periodic field: Fourier multiplier -|k|^alpha.
inline SampledField riesz_deriv_spectral(const SampledField& f, FractionalOrder order) {
  RealSpectrum fft(f.size());
  const double period = f.grid.h * static_cast<double>(f.size());
  fft.forward(f.values);
  for (std::size_t j = 0; j < fft.mode_count(); ++j) {
    const double k = fft.wavenumber(j, period);
    fft.scale_mode(j, j == 0 ? 0.0 : -std::pow(k, order.alpha()));
  }
  std::vector<double> out(f.size());
  fft.inverse(out);
  return SampledField(f.grid, std::move(out));
}

/// (D^alpha_x x)^(-1) = Gamma(2-alpha) x^(alpha-1), the per-axis factor
/// relating (dx)^alpha to the fractional differential d^alpha x.
inline double volume_scale_factor(double x, FractionalOrder order) {
  const double a = order.alpha();
  if (a == 1.0) {
    return 1.0;
  }
  if (a == 2.0) {
    throw DomainError("volume_scale_factor: Gamma(2 - alpha) has a pole at alpha = 2");
  }
  if (!(x > 0.0)) {
    throw DomainError("volume_scale_factor: x must be positive for alpha != 1, got " +
                      std::to_string(x));
  }
  return gamma(2.0 - a) * std::pow(x, a - 1.0);
}

} // namespace frackin

#endif // FRACKIN_FRAC_CORE_HPP
