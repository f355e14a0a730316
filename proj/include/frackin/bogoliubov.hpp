#ifndef FRACKIN_BOGOLIUBOV_HPP
#define FRACKIN_BOGOLIUBOV_HPP

// N identical particles with one (q, p) pair each. Axes of the 2N-dimensional
// tensor are ordered (q_1, p_1, q_2, p_2, ...). Particle labels are 0-based.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "frackin/error.hpp"
#include "frackin/frac_core.hpp"
#include "frackin/gamma.hpp"
#include "frackin/grid.hpp"
#include "frackin/phase.hpp"
#include "frackin/tensor.hpp"

namespace frackin {

/// Binary force F_12(q1, p1, q2, p2) on particle 1 and the external force
/// F^e(q, p, t).
struct PairForceKernel {
  std::function<double(double, double, double, double)> pair;
  std::function<double(double, double, double)> external;

  static PairForceKernel zero() {
    return {[](double, double, double, double) { return 0.0; },
            [](double, double, double) { return 0.0; }};
  }

  /// F_12 = kappa (q2 - q1) plus an optional harmonic trap -omega2 q.
  static PairForceKernel linear_coupling(double kappa, double omega2 = 0.0) {
    return {[kappa](double q1, double, double q2, double) { return kappa * (q2 - q1); },
            [omega2](double q, double, double) { return -omega2 * q; }};
  }

  static PairForceKernel harmonic_trap(double omega2) {
    return linear_coupling(0.0, omega2);
  }
};

/// V(q, p); velocity of a particle.
using VelocityRule = std::function<double(double, double)>;

inline VelocityRule unit_mass_velocity() {
  return [](double, double p) { return p; };
}

using NBodyFunction = std::function<double(std::span<const double>)>;

/// exp(-|x - c|^2 / (2 sigma^2) + corr sum_{k<l} dq_k dq_l): a Gaussian centred
/// at (qc, pc) for every particle, with position correlation. Symmetric under
/// any particle exchange.
inline NBodyFunction correlated_gaussian(double qc, double pc, double sigma, double corr) {
  return [=](std::span<const double> x) {
    const std::size_t n = x.size() / 2;
    double e = 0.0, cross = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double dq = x[2 * k] - qc, dp = x[2 * k + 1] - pc;
      e += dq * dq + dp * dp;
      for (std::size_t l = k + 1; l < n; ++l) {
        cross += dq * (x[2 * l] - qc);
      }
    }
    return std::exp(-e / (2.0 * sigma * sigma) + corr * cross);
  };
}

/// Dense N-particle density over identical per-particle (q, p) grids.
class NBodyDensity {
public:
  /// Samples f, checks non-negativity, normalizes to unit plain mass. With
  /// `symmetric` the permutation invariance is asserted to 1e-12.
  static NBodyDensity sample(std::size_t n_particles, const Grid1D& q, const Grid1D& p,
                             const NBodyFunction& f, bool symmetric = true) {
    NBodyDensity d(n_particles, q, p);
    d.values_ = sample_tensor(d.layout_, f);
    d.normalize();
    if (symmetric) {
      d.require_symmetric(1e-12);
    }
    return d;
  }

  /// Checked: values >= 0 and unit plain mass within 1e-6.
  static NBodyDensity from_values(std::size_t n_particles, const Grid1D& q, const Grid1D& p,
                                  std::vector<double> values) {
    NBodyDensity d = state(n_particles, q, p, std::move(values));
    for (double x : d.values_) {
      if (x < 0.0) {
        throw DomainError("N-body density values must be non-negative");
      }
    }
    if (std::abs(d.mass() - 1.0) > 1e-6) {
      throw DomainError("N-body density mass is " + std::to_string(d.mass()));
    }
    return d;
  }

  /// Unchecked state (reduced or evolved densities).
  static NBodyDensity state(std::size_t n_particles, const Grid1D& q, const Grid1D& p,
                            std::vector<double> values) {
    NBodyDensity d(n_particles, q, p);
    detail::require_size(d.layout_, values.size(), "NBodyDensity");
    for (double x : values) {
      if (!std::isfinite(x)) {
        throw DomainError("N-body density values must be finite");
      }
    }
    d.values_ = std::move(values);
    return d;
  }

  std::size_t particles() const noexcept { return n_; }
  const Grid1D& q_grid() const noexcept { return q_; }
  const Grid1D& p_grid() const noexcept { return p_; }
  const TensorLayout& layout() const noexcept { return layout_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  static std::size_t q_axis(std::size_t k) noexcept { return 2 * k; }
  static std::size_t p_axis(std::size_t k) noexcept { return 2 * k + 1; }

  double mass() const { return integrate_all(layout_, values_); }

  /// Values with particles k and l exchanged.
  std::vector<double> swapped(std::size_t k, std::size_t l) const {
    std::vector<std::size_t> perm(layout_.rank());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::swap(perm[q_axis(k)], perm[q_axis(l)]);
    std::swap(perm[p_axis(k)], perm[p_axis(l)]);
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) {
      std::size_t j = 0;
      for (std::size_t a = 0; a < layout_.rank(); ++a) {
        j += layout_.index_along(i, perm[a]) * layout_.stride(a);
      }
      out[j] = values_[i];
    }
    return out;
  }

  /// max |rho - rho with particles k, l exchanged| over all pairs.
  double asymmetry() const {
    double m = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      for (std::size_t l = k + 1; l < n_; ++l) {
        const auto s = swapped(k, l);
        for (std::size_t i = 0; i < s.size(); ++i) {
          m = std::max(m, std::abs(s[i] - values_[i]));
        }
      }
    }
    return m;
  }

  /// One-particle density as a field over PhaseGrid(q, p).
  PhaseField as_phase_field() const {
    if (n_ != 1) {
      throw GridError("only a one-particle density maps onto a phase grid");
    }
    return PhaseField(PhaseGrid(q_, p_), values_);
  }

private:
  NBodyDensity(std::size_t n_particles, const Grid1D& q, const Grid1D& p)
      : n_(n_particles), q_(q), p_(p) {
    if (n_ == 0) {
      throw GridError("N-body density needs at least one particle");
    }
    std::vector<Grid1D> axes;
    for (std::size_t k = 0; k < n_; ++k) {
      axes.push_back(q);
      axes.push_back(p);
    }
    layout_ = TensorLayout(std::move(axes));
  }

  void normalize() {
    for (double x : values_) {
      if (x < 0.0 || !std::isfinite(x)) {
        throw DomainError("N-body density values must be finite and non-negative");
      }
    }
    const double m = mass();
    if (!(m > 0.0)) {
      throw DomainError("N-body density has zero mass");
    }
    for (double& x : values_) {
      x /= m;
    }
  }

  void require_symmetric(double tol) const {
    const double a = asymmetry();
    if (a > tol) {
      throw DomainError("N-body density is not permutation symmetric (deviation " +
                        std::to_string(a) + ")");
    }
  }

  std::size_t n_;
  Grid1D q_, p_;
  TensorLayout layout_;
  std::vector<double> values_;
};

/// Measure used by the reduction operators: plain trapezoid, or the weighted
/// form whose per-axis weight is x^(alpha-1)/Gamma(alpha), so that
/// Gamma(alpha) Gamma(2-alpha) times it equals the scale-factored integral.
struct ReductionMeasure {
  bool fractional = false;
  double alpha = 1.0;

  static ReductionMeasure plain() { return {}; }
  static ReductionMeasure weighted(FractionalOrder order) { return {true, order.alpha()}; }
};

namespace detail {

inline AxisWeights reduction_weights(const Grid1D& g, const ReductionMeasure& m) {
  AxisWeights w = trapezoid_axis_weights(g);
  if (!m.fractional || m.alpha == 1.0) {
    return w;
  }
  const double c = 1.0 / gamma(m.alpha);
  for (std::size_t i = 0; i < g.count; ++i) {
    const double x = g.node(i);
    if (!(x > 0.0)) {
      throw DomainError("weighted reduction needs positive coordinates");
    }
    w[i] *= c * std::pow(x, m.alpha - 1.0);
  }
  return w;
}

} // namespace detail

/// Integrates out every particle not in `keep` (0-based labels).
inline NBodyDensity reduce(const NBodyDensity& rho, std::vector<std::size_t> keep,
                           ReductionMeasure measure = ReductionMeasure::plain()) {
  if (keep.empty()) {
    throw DomainError("reduce: keep set must not be empty");
  }
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.back() >= rho.particles()) {
    throw DomainError("reduce: particle label out of range");
  }
  std::vector<std::size_t> axes;
  for (std::size_t k : keep) {
    axes.push_back(NBodyDensity::q_axis(k));
    axes.push_back(NBodyDensity::p_axis(k));
  }
  std::vector<AxisWeights> w;
  for (const auto& g : rho.layout().axes()) {
    w.push_back(detail::reduction_weights(g, measure));
  }
  return NBodyDensity::state(keep.size(), rho.q_grid(), rho.p_grid(),
                             integrate_out(rho.layout(), rho.values(), axes, w));
}

struct FaceReport {
  std::size_t axis;
  bool upper;
  double max_value;
};

struct BoundaryReport {
  std::vector<FaceReport> faces;
  double worst = 0.0;
  double tol = 0.0;
  bool pass = true;
};

/// Largest |rho| on every outer face.
inline BoundaryReport boundary_vanishing_check(const TensorLayout& L,
                                               std::span<const double> v, double tol) {
  BoundaryReport r;
  r.tol = tol;
  for (std::size_t a = 0; a < L.rank(); ++a) {
    r.faces.push_back({a, false, 0.0});
    r.faces.push_back({a, true, 0.0});
  }
  for (std::size_t i = 0; i < L.size(); ++i) {
    for (std::size_t a = 0; a < L.rank(); ++a) {
      const std::size_t ia = L.index_along(i, a);
      if (ia == 0) {
        r.faces[2 * a].max_value = std::max(r.faces[2 * a].max_value, std::abs(v[i]));
      }
      if (ia + 1 == L.axis(a).count) {
        r.faces[2 * a + 1].max_value = std::max(r.faces[2 * a + 1].max_value, std::abs(v[i]));
      }
    }
  }
  for (const auto& f : r.faces) {
    r.worst = std::max(r.worst, f.max_value);
  }
  r.pass = r.worst <= tol;
  return r;
}

inline BoundaryReport boundary_vanishing_check(const NBodyDensity& rho, double tol) {
  return boundary_vanishing_check(rho.layout(), rho.values(), tol);
}

inline constexpr double default_gate_tolerance = 1e-6;

namespace detail {

inline void require_vanishing(const NBodyDensity& rho, double tol, const char* op) {
  const auto r = boundary_vanishing_check(rho, tol);
  if (!r.pass) {
    throw GateError(std::string(op) + ": density does not vanish on the boundary (max face value " +
                    std::to_string(r.worst) + " > " + std::to_string(tol) + ")");
  }
}

// F_1k rho over the full N-body grid for particle pair (a, b): force on a from b.
inline std::vector<double> pair_force_times(const NBodyDensity& rho, const PairForceKernel& K,
                                            std::size_t a, std::size_t b) {
  const auto& L = rho.layout();
  std::vector<double> out(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) {
    const double f = K.pair(L.coordinate(i, NBodyDensity::q_axis(a)),
                            L.coordinate(i, NBodyDensity::p_axis(a)),
                            L.coordinate(i, NBodyDensity::q_axis(b)),
                            L.coordinate(i, NBodyDensity::p_axis(b)));
    out[i] = f * rho.values()[i];
  }
  return out;
}

} // namespace detail

/// I(rho_2) = -(N-1) S_p1 D^alpha_p1 [ I[2] { F_12 rho_2 } ], integrating over
/// particle 2 first and differentiating afterwards.
inline PhaseField collision_term(const NBodyDensity& rho2, const PairForceKernel& K,
                                 FractionalOrder order, std::size_t n_total,
                                 double gate_tol = default_gate_tolerance) {
  if (rho2.particles() != 2) {
    throw GridError("collision_term: needs a two-particle density");
  }
  detail::require_vanishing(rho2, gate_tol, "collision_term");
  const PhaseGrid g(rho2.q_grid(), rho2.p_grid());
  if (n_total < 2) {
    return PhaseField::constant(g, 0.0);
  }
  const auto fr = detail::pair_force_times(rho2, K, 0, 1);
  const auto two = NBodyDensity::state(2, rho2.q_grid(), rho2.p_grid(), fr);
  const auto one = reduce(two, {0});
  auto d = scaled_axis_derivative(g.layout(), one.values(), 1, order);
  const double c = -static_cast<double>(n_total - 1);
  for (double& x : d) {
    x *= c;
  }
  return PhaseField(g, std::move(d));
}

/// max over interior nodes of
///   d rho1/dt + S_q D_q (V rho1) + S_p D_p (F^e rho1) - I(rho2).
inline double first_bogoliubov_residual(const PhaseField& rho1, const NBodyDensity& rho2,
                                        const PairForceKernel& K, const VelocityRule& V,
                                        FractionalOrder order, std::size_t n_total,
                                        const PhaseField& drho1_dt, double time = 0.0,
                                        double gate_tol = default_gate_tolerance) {
  const PhaseGrid g(rho2.q_grid(), rho2.p_grid());
  if (!(rho1.grid == g) || !(drho1_dt.grid == g)) {
    throw GridError("first_bogoliubov_residual: fields live on different grids");
  }
  const auto& L = g.layout();
  std::vector<double> vr(L.size()), fr(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) {
    const double q = L.coordinate(i, 0), p = L.coordinate(i, 1);
    vr[i] = V(q, p) * rho1.values[i];
    fr[i] = K.external(q, p, time) * rho1.values[i];
  }
  const auto dq = scaled_axis_derivative(L, vr, 0, order);
  const auto dp = scaled_axis_derivative(L, fr, 1, order);
  const PhaseField I = collision_term(rho2, K, order, n_total, gate_tol);
  std::vector<double> r(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) {
    r[i] = drho1_dt.values[i] + dq[i] + dp[i] - I.values[i];
  }
  return max_abs_interior(L, r);
}

/// Right-hand side of the N-particle fractional Liouville equation and the
/// matching RK4 stepper. Forces F_k = F^e(q_k, p_k, t) + sum_{l != k} F(k, l).
class NBodyLiouville {
public:
  NBodyLiouville(const NBodyDensity& shape, PairForceKernel K, VelocityRule V,
                 FractionalOrder order)
      : layout_(shape.layout()), n_(shape.particles()), q_(shape.q_grid()), p_(shape.p_grid()),
        K_(std::move(K)), V_(std::move(V)), order_(order) {
    sq_ = axis_scale_factors(q_, order_);
    sp_ = axis_scale_factors(p_, order_);
    velocity_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      velocity_[k].resize(layout_.size());
      for (std::size_t i = 0; i < layout_.size(); ++i) {
        velocity_[k][i] = V_(layout_.coordinate(i, NBodyDensity::q_axis(k)),
                             layout_.coordinate(i, NBodyDensity::p_axis(k)));
      }
    }
    for (std::size_t i = 0; i < layout_.size(); ++i) {
      if (layout_.on_boundary(i)) {
        boundary_.push_back(i);
      }
    }
  }

  /// Total force on particle k at every node.
  std::vector<double> force(std::size_t k, double t) const {
    std::vector<double> f(layout_.size());
    for (std::size_t i = 0; i < layout_.size(); ++i) {
      const double qk = layout_.coordinate(i, NBodyDensity::q_axis(k));
      const double pk = layout_.coordinate(i, NBodyDensity::p_axis(k));
      double acc = K_.external(qk, pk, t);
      for (std::size_t l = 0; l < n_; ++l) {
        if (l != k) {
          acc += K_.pair(qk, pk, layout_.coordinate(i, NBodyDensity::q_axis(l)),
                         layout_.coordinate(i, NBodyDensity::p_axis(l)));
        }
      }
      f[i] = acc;
    }
    return f;
  }

  std::vector<double> rhs(std::span<const double> rho, double t) const {
    std::vector<double> out(layout_.size(), 0.0);
    std::vector<double> flux(layout_.size());
    auto accumulate = [&](const std::vector<double>& u, std::size_t axis) {
      for (std::size_t i = 0; i < flux.size(); ++i) {
        flux[i] = u[i] * rho[i];
      }
      const auto d = scaled_axis_derivative(layout_, flux, axis, order_);
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= d[i];
      }
    };
    for (std::size_t k = 0; k < n_; ++k) {
      accumulate(velocity_[k], NBodyDensity::q_axis(k));
      accumulate(force(k, t), NBodyDensity::p_axis(k));
    }
    return out;
  }

  /// Largest |S V| or |S F| at time t.
  double max_speed(double t) const {
    double m = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      const auto f = force(k, t);
      for (std::size_t i = 0; i < layout_.size(); ++i) {
        m = std::max(m, std::abs(velocity_[k][i] *
                                 sq_[layout_.index_along(i, NBodyDensity::q_axis(k))]));
        m = std::max(m, std::abs(f[i] * sp_[layout_.index_along(i, NBodyDensity::p_axis(k))]));
      }
    }
    return m;
  }

  double stable_time_step(double t = 0.0) const {
    const double m = max_speed(t);
    return m > 0.0 ? 0.5 * std::min(q_.h, p_.h) / m : INFINITY;
  }

  /// One RK4 step from time t; the outer layer is zeroed afterwards.
  NBodyDensity step(const NBodyDensity& rho, double dt, double t = 0.0,
                    std::size_t step_index = 1) const {
    if (!(rho.layout() == layout_)) {
      throw GridError("nbody step: density grid differs from the operator grid");
    }
    check_advective_bound(dt, max_speed(t), std::min(q_.h, p_.h));
    std::vector<double> y = rho.values();
    const double offsets[4] = {0.0, 0.5 * dt, 0.5 * dt, dt};
    int stage = 0;
    rk4_step(y, dt, [&](const std::vector<double>& s) { return rhs(s, t + offsets[stage++]); });
    for (std::size_t i : boundary_) {
      y[i] = 0.0;
    }
    require_finite_state(y, step_index);
    return NBodyDensity::state(n_, q_, p_, std::move(y));
  }

private:
  TensorLayout layout_;
  std::size_t n_;
  Grid1D q_, p_;
  PairForceKernel K_;
  VelocityRule V_;
  FractionalOrder order_;
  std::vector<double> sq_, sp_;
  std::vector<std::vector<double>> velocity_;
  std::vector<std::size_t> boundary_;
};

/// One RK4 step of the N-particle fractional Liouville equation.
inline NBodyDensity nbody_liouville_step(const NBodyDensity& rho, const PairForceKernel& K,
                                         const VelocityRule& V, FractionalOrder order,
                                         double dt, double t = 0.0) {
  return NBodyLiouville(rho, K, V, order).step(rho, dt, t);
}

/// Outcome of a brute-force residual experiment.
struct ResidualRun {
  double residual = 0.0;
  double dt = 0.0;
  double time = 0.0;
  double mass = 0.0;
  std::size_t nodes = 0;
};

/// Evolves rho_N (N = 2 or 3) for `warmup` steps and then two more, takes the
/// central difference of the one-particle density across the last two steps,
/// and evaluates the first-equation residual at the middle slice. A
/// non-positive dt selects 0.8 of the stable step.
inline ResidualRun bogoliubov_residual_run(const NBodyDensity& rho0, const PairForceKernel& K,
                                           const VelocityRule& V, FractionalOrder order,
                                           double dt = 0.0, std::size_t warmup = 0,
                                           double gate_tol = default_gate_tolerance) {
  const std::size_t n = rho0.particles();
  if (n < 2 || n > 3) {
    throw DomainError("residual run needs 2 or 3 particles");
  }
  // Later slices have their faces zeroed by the absorbing layer, so the
  // surface-term gate is only informative on the initial data.
  detail::require_vanishing(rho0, gate_tol, "bogoliubov_residual_run");
  const NBodyLiouville L(rho0, K, V, order);
  if (!(dt > 0.0)) {
    dt = 0.8 * L.stable_time_step(0.0);
  }
  NBodyDensity rho = rho0;
  double t = 0.0;
  std::size_t step = 0;
  for (; step < warmup; ++step, t += dt) {
    rho = L.step(rho, dt, t, step + 1);
  }
  const NBodyDensity before = rho;
  const NBodyDensity mid = L.step(before, dt, t, ++step);
  const NBodyDensity after = L.step(mid, dt, t + dt, ++step);
  const auto r_before = reduce(before, {0});
  const auto r_after = reduce(after, {0});
  const PhaseGrid g(rho0.q_grid(), rho0.p_grid());
  std::vector<double> d(g.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = (r_after.values()[i] - r_before.values()[i]) / (2.0 * dt);
  }
  const NBodyDensity rho2 = n == 2 ? mid : reduce(mid, {0, 1});
  ResidualRun out;
  out.dt = dt;
  out.time = t + dt;
  out.mass = mid.mass();
  out.nodes = mid.size();
  out.residual = first_bogoliubov_residual(reduce(mid, {0}).as_phase_field(), rho2, K, V, order, n,
                                           PhaseField(g, std::move(d)), out.time, gate_tol);
  return out;
}

} // namespace frackin

#endif // FRACKIN_BOGOLIUBOV_HPP
