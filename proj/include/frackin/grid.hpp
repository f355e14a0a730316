#ifndef FRACKIN_GRID_HPP
#define FRACKIN_GRID_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "frackin/error.hpp"

namespace frackin {

/// Order alpha of a fractional operator together with its integer ceiling m,
/// so that m - 1 < alpha <= m.
class FractionalOrder {
public:
  explicit FractionalOrder(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
      throw DomainError("fractional order must lie in (0, 2], got " +
                        std::to_string(alpha));
    }
    ceiling_ = static_cast<int>(std::ceil(alpha));
  }

  double alpha() const noexcept { return alpha_; }
  int ceiling() const noexcept { return ceiling_; }
  bool is_integer() const noexcept { return alpha_ == ceiling_; }
  bool is_classical_first() const noexcept { return alpha_ == 1.0; }

  friend bool operator==(const FractionalOrder&, const FractionalOrder&) = default;

private:
  double alpha_;
  int ceiling_;
};

/// Uniform 1-D grid x_i = lower + i*h, i = 0..count-1.
struct Grid1D {
  double lower = 0.0;
  double h = 1.0;
  std::size_t count = 2;

  Grid1D() = default;
  Grid1D(double lower_, double h_, std::size_t count_)
      : lower(lower_), h(h_), count(count_) {
    if (!(h > 0.0) || !std::isfinite(h) || !std::isfinite(lower)) {
      throw GridError("grid spacing must be positive and finite");
    }
    if (count < 2) {
      throw GridError("grid needs at least 2 nodes, got " + std::to_string(count));
    }
    if (!std::isfinite(node(count - 1))) {
      throw GridError("grid nodes must be finite");
    }
  }

  /// Grid of `count` nodes covering [a, b] inclusive.
  static Grid1D spanning(double a, double b, std::size_t count) {
    if (count < 2) {
      throw GridError("grid needs at least 2 nodes");
    }
    return Grid1D(a, (b - a) / static_cast<double>(count - 1), count);
  }

  /// Cell-centred grid on (a, b): nodes at a + (i + 1/2) h, so a grid on
  /// (0, L) never touches the origin.
  static Grid1D cell_centred(double a, double b, std::size_t count) {
    const double h = (b - a) / static_cast<double>(count);
    return Grid1D(a + 0.5 * h, h, count);
  }

  double node(std::size_t i) const noexcept {
    return lower + static_cast<double>(i) * h;
  }
  double upper() const noexcept { return node(count - 1); }

  std::vector<double> nodes() const {
    std::vector<double> x(count);
    for (std::size_t i = 0; i < count; ++i) {
      x[i] = node(i);
    }
    return x;
  }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;
};

/// Real samples of a function on a Grid1D.
struct SampledField {
  Grid1D grid;
  std::vector<double> values;

  SampledField() = default;
  SampledField(Grid1D g, std::vector<double> v)
      : grid(g), values(std::move(v)) {
    if (values.size() != grid.count) {
      throw GridError("sampled field has " + std::to_string(values.size()) +
                      " values for a grid of " + std::to_string(grid.count) +
                      " nodes");
    }
    for (double x : values) {
      if (!std::isfinite(x)) {
        throw DomainError("sampled field values must be finite");
      }
    }
  }

  static SampledField sample(const Grid1D& g,
                             const std::function<double(double)>& f) {
    std::vector<double> v(g.count);
    for (std::size_t i = 0; i < g.count; ++i) {
      v[i] = f(g.node(i));
    }
    return SampledField(g, std::move(v));
  }

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const noexcept { return values[i]; }
};

} // namespace frackin

#endif // FRACKIN_GRID_HPP
