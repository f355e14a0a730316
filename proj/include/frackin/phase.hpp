#ifndef FRACKIN_PHASE_HPP
#define FRACKIN_PHASE_HPP

// Single-particle phase space: grids, fields, the fractional bracket, and the
// fractional Liouville equation in bracket and continuity form.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "frackin/diagnostics.hpp"
#include "frackin/error.hpp"
#include "frackin/frac_core.hpp"
#include "frackin/gamma.hpp"
#include "frackin/grid.hpp"
#include "frackin/tensor.hpp"

namespace frackin {

/// Axes (q_1..q_n, p_1..p_n); the tensor layout follows that order.
class PhaseGrid {
public:
  PhaseGrid(std::vector<Grid1D> q_axes, std::vector<Grid1D> p_axes)
      : q_(std::move(q_axes)), p_(std::move(p_axes)) {
    if (q_.size() != p_.size() || q_.empty() || q_.size() > 3) {
      throw GridError("phase grid needs 1 to 3 (q, p) axis pairs");
    }
    std::vector<Grid1D> all = q_;
    all.insert(all.end(), p_.begin(), p_.end());
    layout_ = TensorLayout(std::move(all));
  }

  /// n = 1 convenience.
  PhaseGrid(Grid1D q, Grid1D p) : PhaseGrid(std::vector{q}, std::vector{p}) {}

  std::size_t dof() const noexcept { return q_.size(); }
  const std::vector<Grid1D>& q_axes() const noexcept { return q_; }
  const std::vector<Grid1D>& p_axes() const noexcept { return p_; }
  std::size_t q_axis(std::size_t k) const noexcept { return k; }
  std::size_t p_axis(std::size_t k) const noexcept { return q_.size() + k; }
  const TensorLayout& layout() const noexcept { return layout_; }
  std::size_t size() const noexcept { return layout_.size(); }

  double min_spacing() const {
    double h = layout_.axis(0).h;
    for (const auto& g : layout_.axes()) {
      h = std::min(h, g.h);
    }
    return h;
  }

  friend bool operator==(const PhaseGrid& a, const PhaseGrid& b) {
    return a.q_ == b.q_ && a.p_ == b.p_;
  }

private:
  std::vector<Grid1D> q_, p_;
  TensorLayout layout_;
};

using PhaseFunction = std::function<double(std::span<const double>)>;

/// Real tensor over a phase grid.
struct PhaseField {
  PhaseGrid grid;
  std::vector<double> values;

  PhaseField(PhaseGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    detail::require_size(grid.layout(), values.size(), "PhaseField");
    for (double x : values) {
      if (!std::isfinite(x)) {
        throw DomainError("phase field values must be finite");
      }
    }
  }

  static PhaseField sample(const PhaseGrid& g, const PhaseFunction& f) {
    return PhaseField(g, sample_tensor(g.layout(), f));
  }

  static PhaseField constant(const PhaseGrid& g, double c) {
    return PhaseField(g, std::vector<double>(g.size(), c));
  }

  std::size_t size() const noexcept { return values.size(); }
};

using PhaseFields = std::vector<PhaseField>;

/// Measure used for totals: plain cell volume, or the fractional element in
/// which each axis contributes h^alpha x^(1-alpha) / Gamma(2-alpha).
struct Weighting {
  enum class Kind { plain, fractional };
  Kind kind = Kind::plain;
  double alpha = 1.0;

  static Weighting plain() { return {}; }
  static Weighting fractional(FractionalOrder order) {
    return {Kind::fractional, order.alpha()};
  }
  bool is_plain() const noexcept { return kind == Kind::plain; }
};

/// Per-node weights along one axis under the given measure.
inline AxisWeights axis_measure(const Grid1D& g, const Weighting& w) {
  AxisWeights out = trapezoid_axis_weights(g);
  if (w.is_plain() || w.alpha == 1.0) {
    return out;
  }
  if (w.alpha == 2.0) {
    throw DomainError("fractional measure is undefined at alpha = 2");
  }
  const double scale = std::pow(g.h, w.alpha - 1.0) / gamma(2.0 - w.alpha);
  for (std::size_t i = 0; i < g.count; ++i) {
    const double x = g.node(i);
    if (!(x > 0.0)) {
      throw DomainError("fractional measure needs positive coordinates");
    }
    out[i] *= scale * std::pow(x, 1.0 - w.alpha);
  }
  return out;
}

inline double weighted_total(const TensorLayout& layout, std::span<const double> values,
                             const Weighting& w) {
  std::vector<AxisWeights> weights;
  for (const auto& g : layout.axes()) {
    weights.push_back(axis_measure(g, w));
  }
  const std::vector<double> total = integrate_out(layout, values, {}, weights);
  return total.front();
}

/// Probability density on a phase grid. Construction through `normalized`
/// enforces non-negativity and unit mass in the chosen measure.
class PhaseDensity {
public:
  static PhaseDensity normalized(PhaseField field, Weighting weighting) {
    for (double x : field.values) {
      if (x < 0.0) {
        throw DomainError("density values must be non-negative");
      }
    }
    const double m = weighted_total(field.grid.layout(), field.values, weighting);
    if (!(m > 0.0)) {
      throw DomainError("density has zero mass");
    }
    for (double& x : field.values) {
      x /= m;
    }
    return PhaseDensity(std::move(field), weighting);
  }

  /// Checked: values >= 0 and unit mass within 1e-6.
  PhaseDensity(PhaseField field, Weighting weighting)
      : field_(std::move(field)), weighting_(weighting) {
    for (double x : field_.values) {
      if (x < 0.0) {
        throw DomainError("density values must be non-negative");
      }
    }
    const double m = mass();
    if (std::abs(m - 1.0) > 1e-6) {
      throw DomainError("density mass is " + std::to_string(m) + ", expected 1");
    }
  }

  const PhaseField& field() const noexcept { return field_; }
  const PhaseGrid& grid() const noexcept { return field_.grid; }
  const std::vector<double>& values() const noexcept { return field_.values; }
  const Weighting& weighting() const noexcept { return weighting_; }
  double mass() const { return weighted_total(grid().layout(), values(), weighting_); }

private:
  struct Unchecked {};
  PhaseDensity(Unchecked, PhaseField field, Weighting weighting)
      : field_(std::move(field)), weighting_(weighting) {}

  // Evolved states may undershoot zero slightly; their minimum is reported in
  // the diagnostics instead of being rejected.
  static PhaseDensity evolved(PhaseField field, Weighting weighting) {
    return PhaseDensity(Unchecked{}, std::move(field), weighting);
  }

  friend PhaseDensity evolved_density(PhaseField, Weighting);

  PhaseField field_;
  Weighting weighting_;
};

/// Escape hatch for evolved states (may carry small negative undershoot).
inline PhaseDensity evolved_density(PhaseField field, Weighting weighting) {
  return PhaseDensity::evolved(std::move(field), weighting);
}

/// H given analytically, or the velocity/force fields given directly.
class HamiltonianSpec {
public:
  static HamiltonianSpec analytic(PhaseFunction h) {
    HamiltonianSpec s;
    s.h_ = std::move(h);
    return s;
  }

  static HamiltonianSpec from_fields(PhaseFields v, PhaseFields f) {
    if (v.size() != f.size() || v.empty()) {
      throw GridError("velocity and force lists must have the same non-zero length");
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!(v[k].grid == v[0].grid) || !(f[k].grid == v[0].grid)) {
        throw GridError("velocity and force fields live on different grids");
      }
    }
    if (v.front().grid.dof() != v.size()) {
      throw GridError("need one velocity and one force field per degree of freedom");
    }
    HamiltonianSpec s;
    s.v_ = std::move(v);
    s.f_ = std::move(f);
    return s;
  }

  bool has_hamiltonian() const noexcept { return static_cast<bool>(h_); }
  PhaseField sample(const PhaseGrid& g) const {
    if (!h_) {
      throw Error("HamiltonianSpec: no Hamiltonian, only fields");
    }
    return PhaseField::sample(g, h_);
  }
  const PhaseFields& velocity() const noexcept { return v_; }
  const PhaseFields& force() const noexcept { return f_; }

private:
  PhaseFunction h_;
  PhaseFields v_, f_;
};

namespace detail {

inline void require_same_grid(const PhaseField& a, const PhaseField& b, const char* op) {
  if (!(a.grid == b.grid)) {
    throw GridError(std::string(op) + ": fields live on different grids");
  }
}

// (D^alpha_x x)^(-1) D^alpha_x along axis a.
inline std::vector<double> scaled(const PhaseField& f, std::size_t a, FractionalOrder order) {
  return scaled_axis_derivative(f.grid.layout(), f.values, a, order);
}

} // namespace detail

/// {A, B}_alpha = sum_k [ S_q D_q A D_p B - S_p D_q B D_p A ] with S the
/// per-axis scale factor (D^alpha x)^(-1).
inline PhaseField fractional_bracket(const PhaseField& A, const PhaseField& B,
                                     FractionalOrder order) {
  detail::require_same_grid(A, B, "fractional_bracket");
  const PhaseGrid& g = A.grid;
  const TensorLayout& L = g.layout();
  std::vector<double> out(L.size(), 0.0);
  for (std::size_t k = 0; k < g.dof(); ++k) {
    const std::size_t qa = g.q_axis(k);
    const std::size_t pa = g.p_axis(k);
    const auto sq = axis_scale_factors(L.axis(qa), order);
    const auto sp = axis_scale_factors(L.axis(pa), order);
    const auto dqA = axis_derivative(L, A.values, qa, order);
    const auto dpA = axis_derivative(L, A.values, pa, order);
    const auto dqB = axis_derivative(L, B.values, qa, order);
    const auto dpB = axis_derivative(L, B.values, pa, order);
    for (std::size_t i = 0; i < L.size(); ++i) {
      out[i] += sq[L.index_along(i, qa)] * dqA[i] * dpB[i] -
                sp[L.index_along(i, pa)] * dqB[i] * dpA[i];
    }
  }
  return PhaseField(g, std::move(out));
}

/// max |{A,B} + {B,A}|; zero only at alpha = 1 in general.
inline double bracket_antisymmetry_residual(const PhaseField& A, const PhaseField& B,
                                            FractionalOrder order) {
  const PhaseField ab = fractional_bracket(A, B, order);
  const PhaseField ba = fractional_bracket(B, A, order);
  double m = 0.0;
  for (std::size_t i = 0; i < ab.size(); ++i) {
    m = std::max(m, std::abs(ab.values[i] + ba.values[i]));
  }
  return m;
}

struct HamiltonianFields {
  PhaseFields velocity; // V_k = D^alpha_{p_k} H
  PhaseFields force;    // F_k = -D^alpha_{q_k} H
};

inline HamiltonianFields hamiltonian_fields(const PhaseField& H, FractionalOrder order) {
  HamiltonianFields out;
  const PhaseGrid& g = H.grid;
  for (std::size_t k = 0; k < g.dof(); ++k) {
    out.velocity.emplace_back(g, axis_derivative(g.layout(), H.values, g.p_axis(k), order));
    auto f = axis_derivative(g.layout(), H.values, g.q_axis(k), order);
    for (double& x : f) {
      x = -x;
    }
    out.force.emplace_back(g, std::move(f));
  }
  return out;
}

inline HamiltonianFields hamiltonian_fields(const HamiltonianSpec& H, const PhaseGrid& g,
                                            FractionalOrder order) {
  if (H.has_hamiltonian()) {
    return hamiltonian_fields(H.sample(g), order);
  }
  if (!(H.velocity().front().grid == g)) {
    throw GridError("hamiltonian_fields: field grid differs from the requested grid");
  }
  return {H.velocity(), H.force()};
}

/// Largest violation of the Helmholtz conditions, with classical derivatives:
///   dV_i/dp_j - dV_j/dp_i,  dV_j/dq_i + dF_i/dp_j,  dF_i/dq_j - dF_j/dq_i.
inline double helmholtz_residual(const PhaseFields& V, const PhaseFields& F) {
  if (V.empty() || V.size() != F.size()) {
    throw GridError("helmholtz_residual: need equally many velocity and force fields");
  }
  const PhaseGrid& g = V.front().grid;
  if (g.dof() != V.size()) {
    throw GridError("helmholtz_residual: field count does not match the degrees of freedom");
  }
  for (std::size_t k = 0; k < V.size(); ++k) {
    detail::require_same_grid(V[k], V.front(), "helmholtz_residual");
    detail::require_same_grid(F[k], V.front(), "helmholtz_residual");
  }
  const FractionalOrder one(1.0);
  const std::size_t n = g.dof();
  const auto& L = g.layout();
  auto d = [&](const PhaseField& f, std::size_t axis) {
    return axis_derivative(L, f.values, axis, one);
  };
  double worst = 0.0;
  auto track = [&](const std::vector<double>& a, const std::vector<double>& b, double sign) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst = std::max(worst, std::abs(a[i] + sign * b[i]));
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      track(d(V[i], g.p_axis(j)), d(V[j], g.p_axis(i)), -1.0);
      track(d(V[j], g.q_axis(i)), d(F[i], g.p_axis(j)), +1.0);
      track(d(F[i], g.q_axis(j)), d(F[j], g.q_axis(i)), -1.0);
    }
  }
  return worst;
}

namespace detail {

inline void check_fields(const PhaseGrid& g, const PhaseFields& V, const PhaseFields& F,
                         const char* op) {
  if (V.size() != g.dof() || F.size() != g.dof()) {
    throw GridError(std::string(op) + ": need one velocity and one force field per dof");
  }
  for (std::size_t k = 0; k < g.dof(); ++k) {
    if (!(V[k].grid == g) || !(F[k].grid == g)) {
      throw GridError(std::string(op) + ": fields live on a different grid");
    }
  }
}

// -sum_k S_q D_q[rho V_k] - sum_k S_p D_p[rho F_k]; products before derivatives.
inline std::vector<double> continuity_rhs(const PhaseGrid& g, std::span<const double> rho,
                                          const PhaseFields& V, const PhaseFields& F,
                                          FractionalOrder order) {
  const auto& L = g.layout();
  std::vector<double> out(L.size(), 0.0);
  std::vector<double> flux(L.size());
  auto accumulate = [&](const PhaseField& u, std::size_t axis) {
    for (std::size_t i = 0; i < L.size(); ++i) {
      flux[i] = rho[i] * u.values[i];
    }
    const auto d = scaled_axis_derivative(L, flux, axis, order);
    for (std::size_t i = 0; i < L.size(); ++i) {
      out[i] -= d[i];
    }
  };
  for (std::size_t k = 0; k < g.dof(); ++k) {
    accumulate(V[k], g.q_axis(k));
    accumulate(F[k], g.p_axis(k));
  }
  return out;
}

} // namespace detail

/// Right-hand side of the fractional Liouville equation in continuity form.
inline PhaseField liouville_rhs(const PhaseField& rho, const PhaseFields& V,
                                const PhaseFields& F, FractionalOrder order) {
  detail::check_fields(rho.grid, V, F, "liouville_rhs");
  return PhaseField(rho.grid, detail::continuity_rhs(rho.grid, rho.values, V, F, order));
}

inline PhaseField liouville_rhs(const PhaseDensity& rho, const PhaseFields& V,
                                const PhaseFields& F, FractionalOrder order) {
  return liouville_rhs(rho.field(), V, F, order);
}

/// Per-node measure weights and boundary indices of a tensor grid, computed
/// once so that per-step diagnostics and the absorbing layer stay cheap.
class StateMonitor {
public:
  StateMonitor(const TensorLayout& L, FractionalOrder order)
      : plain_(node_weights(L, Weighting::plain())),
        fractional_(order.alpha() < 2.0 ? node_weights(L, Weighting::fractional(order))
                                        : plain_) {
    for (std::size_t i = 0; i < L.size(); ++i) {
      if (L.on_boundary(i)) {
        boundary_.push_back(i);
      }
    }
  }

  /// Plain mass, fractional mass, minimum and L2 norm of a state.
  DiagnosticsRecord record(std::span<const double> v, double time) const {
    DiagnosticsRecord r;
    r.time = time;
    double pm = 0.0, fm = 0.0, l2 = 0.0;
    double mn = v.empty() ? 0.0 : v[0];
    for (std::size_t i = 0; i < v.size(); ++i) {
      pm += plain_[i] * v[i];
      fm += fractional_[i] * v[i];
      l2 += plain_[i] * v[i] * v[i];
      mn = std::min(mn, v[i]);
    }
    r.plain_mass = pm;
    r.fractional_mass = fm;
    r.min_value = mn;
    r.l2_norm = std::sqrt(l2);
    return r;
  }

  /// Zeroes every node on the outermost layer of any axis.
  void absorb(std::span<double> v) const {
    for (std::size_t i : boundary_) {
      v[i] = 0.0;
    }
  }

  static std::vector<double> node_weights(const TensorLayout& L, const Weighting& w) {
    std::vector<AxisWeights> axes;
    for (const auto& g : L.axes()) {
      axes.push_back(axis_measure(g, w));
    }
    std::vector<double> out(L.size(), 1.0);
    for (std::size_t i = 0; i < L.size(); ++i) {
      for (std::size_t a = 0; a < L.rank(); ++a) {
        out[i] *= axes[a][L.index_along(i, a)];
      }
    }
    return out;
  }

private:
  std::vector<double> plain_, fractional_;
  std::vector<std::size_t> boundary_;
};

inline DiagnosticsRecord density_diagnostics(const PhaseGrid& g, std::span<const double> v,
                                             FractionalOrder order, double time) {
  return StateMonitor(g.layout(), order).record(v, time);
}

/// Classical RK4 step y += dt/6 (k1 + 2k2 + 2k3 + k4).
template <class Rhs>
void rk4_step(std::vector<double>& y, double dt, Rhs&& rhs) {
  const std::size_t n = y.size();
  std::vector<double> tmp(n);
  const std::vector<double> k1 = rhs(y);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
  const std::vector<double> k2 = rhs(tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
  const std::vector<double> k3 = rhs(tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
  const std::vector<double> k4 = rhs(tmp);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

inline void require_finite_state(std::span<const double> y, std::size_t step) {
  for (double x : y) {
    if (!std::isfinite(x)) {
      throw StabilityError("non-finite density after step " + std::to_string(step), step);
    }
  }
}

/// Enforces dt * max|advection speed| <= 0.5 * min h.
inline void check_advective_bound(double dt, double max_speed, double min_h) {
  if (!(dt > 0.0)) {
    throw DomainError("time step must be positive");
  }
  if (dt * max_speed > 0.5 * min_h) {
    throw StabilityError("time step " + std::to_string(dt) + " exceeds the advective bound " +
                             std::to_string(0.5 * min_h / max_speed),
                         0);
  }
}

struct LiouvilleResult {
  PhaseDensity rho;
  DiagnosticsLog log;
};

/// Per-axis advection speeds with scale factors folded in: S_q D_p H and
/// -S_p D_q H in bracket form, S_q V and S_p F in continuity form.
inline std::vector<std::vector<double>> advection_speeds(const PhaseGrid& g,
                                                         const HamiltonianSpec& H,
                                                         FractionalOrder order) {
  const auto& L = g.layout();
  const std::size_t n = g.dof();
  std::vector<std::vector<double>> speed(2 * n);
  std::vector<std::vector<double>> scales(2 * n);
  for (std::size_t a = 0; a < 2 * n; ++a) {
    scales[a] = axis_scale_factors(L.axis(a), order);
  }
  if (H.has_hamiltonian()) {
    const PhaseField h = H.sample(g);
    for (std::size_t k = 0; k < n; ++k) {
      speed[g.q_axis(k)] = axis_derivative(L, h.values, g.p_axis(k), order);
      speed[g.p_axis(k)] = axis_derivative(L, h.values, g.q_axis(k), order);
      for (double& x : speed[g.p_axis(k)]) {
        x = -x;
      }
    }
  } else {
    detail::check_fields(g, H.velocity(), H.force(), "advection_speeds");
    for (std::size_t k = 0; k < n; ++k) {
      speed[g.q_axis(k)] = H.velocity()[k].values;
      speed[g.p_axis(k)] = H.force()[k].values;
    }
  }
  for (std::size_t a = 0; a < 2 * n; ++a) {
    for (std::size_t i = 0; i < L.size(); ++i) {
      speed[a][i] *= scales[a][L.index_along(i, a)];
    }
  }
  return speed;
}

/// Largest dt accepted by liouville_evolve: 0.5 min h / max |speed|.
inline double stable_time_step(const PhaseGrid& g, const HamiltonianSpec& H,
                               FractionalOrder order) {
  double m = 0.0;
  for (const auto& s : advection_speeds(g, H, order)) {
    m = std::max(m, max_abs(s));
  }
  return m > 0.0 ? 0.5 * g.min_spacing() / m : INFINITY;
}

/// Advances the density with RK4. With a Hamiltonian the bracket form
/// d rho/dt = -{rho, H}_alpha is used; with explicit fields the continuity
/// form. The outer layer is zeroed after every step.
inline LiouvilleResult liouville_evolve(const PhaseDensity& rho0, const HamiltonianSpec& H,
                                        FractionalOrder order, double dt, std::size_t steps) {
  const PhaseGrid& g = rho0.grid();
  const auto& L = g.layout();
  const std::size_t n = g.dof();
  const auto speed = advection_speeds(g, H, order);
  double max_speed = 0.0;
  for (const auto& s : speed) {
    max_speed = std::max(max_speed, max_abs(s));
  }
  if (steps > 0) {
    check_advective_bound(dt, max_speed, g.min_spacing());
  }
  const PhaseFields& V = H.velocity();
  const PhaseFields& F = H.force();

  auto rhs = [&](const std::vector<double>& y) {
    if (!H.has_hamiltonian()) {
      return detail::continuity_rhs(g, y, V, F, order);
    }
    std::vector<double> out(L.size(), 0.0);
    for (std::size_t a = 0; a < 2 * n; ++a) {
      const auto d = axis_derivative(L, y, a, order);
      for (std::size_t i = 0; i < L.size(); ++i) {
        out[i] -= speed[a][i] * d[i];
      }
    }
    return out;
  };

  std::vector<double> y = rho0.values();
  DiagnosticsLog log;
  const StateMonitor monitor(L, order);
  log.push(monitor.record(y, 0.0));
  for (std::size_t s = 1; s <= steps; ++s) {
    rk4_step(y, dt, rhs);
    monitor.absorb(y);
    require_finite_state(y, s);
    log.push(monitor.record(y, static_cast<double>(s) * dt));
  }
  return {evolved_density(PhaseField(g, std::move(y)), rho0.weighting()), std::move(log)};
}

} // namespace frackin

#endif // FRACKIN_PHASE_HPP
