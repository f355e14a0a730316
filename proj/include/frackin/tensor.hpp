#ifndef FRACKIN_TENSOR_HPP
#define FRACKIN_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "frackin/error.hpp"
#include "frackin/frac_core.hpp"
#include "frackin/grid.hpp"

namespace frackin {

/// Row-major layout of a dense tensor over a list of 1-D axes; the last axis
/// varies fastest.
class TensorLayout {
public:
  TensorLayout() = default;
  explicit TensorLayout(std::vector<Grid1D> axes) : axes_(std::move(axes)) {
    strides_.assign(axes_.size(), 1);
    size_ = 1;
    for (std::size_t a = axes_.size(); a-- > 0;) {
      strides_[a] = size_;
      size_ *= axes_[a].count;
    }
  }

  std::size_t rank() const noexcept { return axes_.size(); }
  std::size_t size() const noexcept { return size_; }
  const std::vector<Grid1D>& axes() const noexcept { return axes_; }
  const Grid1D& axis(std::size_t a) const { return axes_.at(a); }
  std::size_t stride(std::size_t a) const { return strides_.at(a); }

  std::size_t index_along(std::size_t flat, std::size_t a) const {
    return (flat / strides_[a]) % axes_[a].count;
  }

  double coordinate(std::size_t flat, std::size_t a) const {
    return axes_[a].node(index_along(flat, a));
  }

  void coordinates(std::size_t flat, std::span<double> out) const {
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      out[a] = coordinate(flat, a);
    }
  }

  /// True when the node touches the first or last layer of any axis.
  bool on_boundary(std::size_t flat) const {
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      const std::size_t i = index_along(flat, a);
      if (i == 0 || i + 1 == axes_[a].count) {
        return true;
      }
    }
    return false;
  }

  /// Trapezoid weight of a node: product of per-axis weights h (h/2 at ends).
  double trapezoid_weight(std::size_t flat) const {
    double w = 1.0;
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      const std::size_t i = index_along(flat, a);
      const bool end = (i == 0 || i + 1 == axes_[a].count);
      w *= end ? 0.5 * axes_[a].h : axes_[a].h;
    }
    return w;
  }

  friend bool operator==(const TensorLayout& a, const TensorLayout& b) {
    return a.axes_ == b.axes_;
  }

private:
  std::vector<Grid1D> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

namespace detail {

inline void require_same_layout(const TensorLayout& a, const TensorLayout& b,
                                const char* op) {
  if (!(a == b)) {
    throw GridError(std::string(op) + ": fields live on different grids");
  }
}

inline void require_size(const TensorLayout& layout, std::size_t n, const char* op) {
  if (layout.size() != n) {
    throw GridError(std::string(op) + ": value count does not match the grid");
  }
}

} // namespace detail

/// Evaluate f(coordinates) at every node.
inline std::vector<double> sample_tensor(
    const TensorLayout& layout,
    const std::function<double(std::span<const double>)>& f) {
  std::vector<double> out(layout.size());
  std::vector<double> x(layout.rank());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    layout.coordinates(i, x);
    out[i] = f(x);
  }
  return out;
}

/// Apply a line operator to every 1-D line of `values` along axis `a`.
template <class LineOp>
std::vector<double> map_lines(const TensorLayout& layout, std::span<const double> values,
                              std::size_t a, LineOp&& op) {
  detail::require_size(layout, values.size(), "map_lines");
  const std::size_t n = layout.axis(a).count;
  const std::size_t stride = layout.stride(a);
  const std::size_t outer = layout.size() / (n * stride);
  std::vector<double> out(values.size());
  std::vector<double> line(n), result(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t s = 0; s < stride; ++s) {
      const std::size_t base = o * n * stride + s;
      for (std::size_t i = 0; i < n; ++i) {
        line[i] = values[base + i * stride];
      }
      op(std::span<const double>(line), std::span<double>(result), base);
      for (std::size_t i = 0; i < n; ++i) {
        out[base + i * stride] = result[i];
      }
    }
  }
  return out;
}

/// D^alpha along axis a, Caputo terminal at the origin.
inline std::vector<double> axis_derivative(const TensorLayout& layout,
                                           std::span<const double> values,
                                           std::size_t a, FractionalOrder order) {
  AxisDerivative d(order, layout.axis(a));
  return map_lines(layout, values, a,
                   [&](std::span<const double> in, std::span<double> out, std::size_t) {
                     d.apply(in, out);
                   });
}

/// Per-node scale factor (D^alpha_x x)^(-1) of axis a.
inline std::vector<double> axis_scale_factors(const Grid1D& axis, FractionalOrder order) {
  std::vector<double> s(axis.count);
  for (std::size_t i = 0; i < axis.count; ++i) {
    s[i] = volume_scale_factor(axis.node(i), order);
  }
  return s;
}

/// (D^alpha_x x)^(-1) D^alpha_x along axis a: the scale-factored derivative
/// that appears in the fractional continuity equation.
inline std::vector<double> scaled_axis_derivative(const TensorLayout& layout,
                                                  std::span<const double> values,
                                                  std::size_t a, FractionalOrder order) {
  std::vector<double> d = axis_derivative(layout, values, a, order);
  if (order.alpha() == 1.0) {
    return d;
  }
  const std::vector<double> s = axis_scale_factors(layout.axis(a), order);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] *= s[layout.index_along(i, a)];
  }
  return d;
}

/// Trapezoid integral of the whole tensor.
inline double integrate_all(const TensorLayout& layout, std::span<const double> values) {
  double acc = 0.0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    acc += layout.trapezoid_weight(i) * values[i];
  }
  return acc;
}

/// Per-node quadrature weight along one axis for a reduction.
using AxisWeights = std::vector<double>;

inline AxisWeights trapezoid_axis_weights(const Grid1D& g) {
  AxisWeights w(g.count, g.h);
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

/// Integrate out every axis not listed in `keep` (ascending); the result is laid
/// out over the kept axes in their original order.
inline std::vector<double> integrate_out(const TensorLayout& layout,
                                         std::span<const double> values,
                                         const std::vector<std::size_t>& keep,
                                         const std::vector<AxisWeights>& weights) {
  std::vector<Grid1D> kept_axes;
  for (std::size_t a : keep) {
    kept_axes.push_back(layout.axis(a));
  }
  TensorLayout out_layout(kept_axes);
  std::vector<bool> is_kept(layout.rank(), false);
  for (std::size_t a : keep) {
    is_kept[a] = true;
  }
  std::vector<double> out(out_layout.size(), 0.0);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    double w = 1.0;
    std::size_t j = 0;
    std::size_t k = 0;
    for (std::size_t a = 0; a < layout.rank(); ++a) {
      const std::size_t ia = layout.index_along(i, a);
      if (is_kept[a]) {
        j += ia * out_layout.stride(k++);
      } else {
        w *= weights[a][ia];
      }
    }
    out[j] += w * values[i];
  }
  return out;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) {
    m = std::max(m, std::abs(x));
  }
  return m;
}

inline double max_abs_interior(const TensorLayout& layout, std::span<const double> v) {
  double m = 0.0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (!layout.on_boundary(i)) {
      m = std::max(m, std::abs(v[i]));
    }
  }
  return m;
}

} // namespace frackin

#endif // FRACKIN_TENSOR_HPP
