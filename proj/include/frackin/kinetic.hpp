#ifndef FRACKIN_KINETIC_HPP
#define FRACKIN_KINETIC_HPP

// Mean-field closure and the linear fractional kinetic equation for charged
// particles.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frackin/bogoliubov.hpp"
#include "frackin/diagnostics.hpp"
#include "frackin/error.hpp"
#include "frackin/frac_core.hpp"
#include "frackin/gamma.hpp"
#include "frackin/grid.hpp"
#include "frackin/levy.hpp"
#include "frackin/phase.hpp"
#include "frackin/spectral.hpp"
#include "frackin/tensor.hpp"

namespace frackin {

namespace detail {

inline void require_one_particle(const PhaseGrid& g, const char* op) {
  if (g.dof() != 1) {
    throw GridError(std::string(op) + ": needs a single (q, p) pair");
  }
}

} // namespace detail

/// F^eff(q1, p1) = int F_12(q1, p1, q2, p2) rho1(q2, p2) dq2 dp2 (trapezoid).
inline PhaseField effective_force(const PhaseField& rho1, const PairForceKernel& K) {
  const PhaseGrid& g = rho1.grid;
  detail::require_one_particle(g, "effective_force");
  const auto& L = g.layout();
  std::vector<double> wrho(L.size()), q(L.size()), p(L.size());
  for (std::size_t j = 0; j < L.size(); ++j) {
    wrho[j] = L.trapezoid_weight(j) * rho1.values[j];
    q[j] = L.coordinate(j, 0);
    p[j] = L.coordinate(j, 1);
  }
  std::vector<double> out(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < L.size(); ++j) {
      if (wrho[j] != 0.0) {
        acc += K.pair(q[i], p[i], q[j], p[j]) * wrho[j];
      }
    }
    out[i] = acc;
  }
  return PhaseField(g, std::move(out));
}

inline PhaseField effective_force(const PhaseDensity& rho1, const PairForceKernel& K) {
  return effective_force(rho1.field(), K);
}

/// -S_q D_q (V rho1) - S_p D_p [(F^e + (N-1) F^eff) rho1].
inline PhaseField vlasov_rhs(const PhaseField& rho1, const PairForceKernel& K,
                             FractionalOrder order, std::size_t n_total,
                             const VelocityRule& V = unit_mass_velocity(), double time = 0.0) {
  if (n_total == 0) {
    throw DomainError("vlasov_rhs: particle count must be positive");
  }
  const PhaseGrid& g = rho1.grid;
  detail::require_one_particle(g, "vlasov_rhs");
  const auto& L = g.layout();
  const PhaseField feff = effective_force(rho1, K);
  const double c = static_cast<double>(n_total - 1);
  std::vector<double> v(L.size()), f(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) {
    const double q = L.coordinate(i, 0), p = L.coordinate(i, 1);
    v[i] = V(q, p);
    f[i] = K.external(q, p, time) + c * feff.values[i];
  }
  return liouville_rhs(rho1, {PhaseField(g, std::move(v))}, {PhaseField(g, std::move(f))}, order);
}

inline PhaseField vlasov_rhs(const PhaseDensity& rho1, const PairForceKernel& K,
                             FractionalOrder order, std::size_t n_total,
                             const VelocityRule& V = unit_mass_velocity(), double time = 0.0) {
  return vlasov_rhs(rho1.field(), K, order, n_total, V, time);
}

namespace detail {

// Monomial coefficients (in s = (x - x0)/h) of the interpolant through the
// first d+1 nodes, from Newton forward differences.
inline std::vector<double> newton_monomials(std::span<const double> g, std::size_t d) {
  std::vector<double> diff(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(d + 1));
  std::vector<double> coef(d + 1, 0.0);
  std::vector<double> basis{1.0}; // s (s-1) ... (s-j+1) / j!
  for (std::size_t j = 0; j <= d; ++j) {
    for (std::size_t i = 0; i < basis.size(); ++i) {
      coef[i] += diff[0] * basis[i];
    }
    for (std::size_t i = 0; i + 1 < diff.size(); ++i) {
      diff[i] = diff[i + 1] - diff[i];
    }
    diff.pop_back();
    std::vector<double> next(basis.size() + 1, 0.0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      next[i + 1] += basis[i] / static_cast<double>(j + 1);
      next[i] -= basis[i] * static_cast<double>(j) / static_cast<double>(j + 1);
    }
    basis = std::move(next);
  }
  return coef;
}

// Largest |(R+1)-th forward difference| relative to max|g|.
inline double excess_degree(std::span<const double> g, std::size_t R) {
  std::vector<double> d(g.begin(), g.end());
  double scale = 0.0;
  for (double x : g) {
    scale = std::max(scale, std::abs(x));
  }
  for (std::size_t k = 0; k <= R && d.size() > 1; ++k) {
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      d[i] = d[i + 1] - d[i];
    }
    d.pop_back();
  }
  double m = 0.0;
  for (double x : d) {
    m = std::max(m, std::abs(x));
  }
  return scale > 0.0 ? m / scale : 0.0;
}

// D^{a} along a line with terminal 0: Caputo for a > 0, the identity for
// a == 0 and the fractional integral of order -a for a < 0.
inline std::vector<double> signed_order_derivative(std::span<const double> f, const Grid1D& g,
                                                   double a) {
  if (a == 0.0) {
    return {f.begin(), f.end()};
  }
  if (a < 0.0) {
    return fractional_integral_values(f, g, -a, 0.0);
  }
  return AxisDerivative(FractionalOrder(a), g, g.lower >= 0.0 ? 0.0 : g.lower)(f);
}

} // namespace detail

/// sum_{r=0..R} binom(alpha, r) D^{alpha-r} f * g^(r). g must be a polynomial
/// of degree <= R on the grid; its derivatives are taken exactly from the
/// interpolant.
inline SampledField fractional_leibniz(const SampledField& f, const SampledField& g,
                                       FractionalOrder order, std::size_t R) {
  if (!(f.grid == g.grid)) {
    throw GridError("fractional_leibniz: f and g live on different grids");
  }
  const Grid1D& grid = f.grid;
  if (!order.is_integer() && grid.lower < 0.0) {
    throw GridError("fractional_leibniz: fractional orders need a grid on x >= 0");
  }
  if (R + 2 > grid.count) {
    throw GridError("fractional_leibniz: too few nodes to check the degree of g");
  }
  const double excess = detail::excess_degree(g.values, R);
  if (excess > 1e-9 * std::pow(2.0, static_cast<double>(R + 1))) {
    throw DomainError("fractional_leibniz: g is not a polynomial of degree <= " +
                      std::to_string(R));
  }
  const std::vector<double> coef = detail::newton_monomials(g.values, R);
  const double alpha = order.alpha();
  std::vector<double> out(grid.count, 0.0);
  for (std::size_t r = 0; r <= R; ++r) {
    const double w = binomial(alpha, static_cast<unsigned>(r));
    if (w == 0.0) {
      continue;
    }
    const auto df = detail::signed_order_derivative(f.values, grid, alpha - static_cast<double>(r));
    const double hr = std::pow(grid.h, -static_cast<double>(r));
    for (std::size_t i = 0; i < grid.count; ++i) {
      const double s = static_cast<double>(i);
      // Horner on the r-th derivative of the interpolant.
      double gr = 0.0;
      for (std::size_t j = coef.size(); j-- > r;) {
        double falling = 1.0;
        for (std::size_t m = 0; m < r; ++m) {
          falling *= static_cast<double>(j - m);
        }
        gr = gr * s + falling * coef[j];
      }
      out[i] += w * df[i] * gr * hr;
    }
  }
  return SampledField(grid, std::move(out));
}

/// Physical constants and field rules of a charged-particle kinetic problem.
/// The velocity is v = p / m.
struct KineticScenario {
  FractionalOrder order{1.0};
  double mass = 1.0;
  double charge = 1.0;
  double light_speed = 1.0;
  /// E_s(q) per q axis; empty means no electric field.
  std::vector<std::function<double(std::span<const double>)>> electric;
  std::array<double, 3> magnetic{0.0, 0.0, 0.0};
  /// Homogeneous background f0(p); empty means f0 = 0.
  std::function<double(std::span<const double>)> background;
  /// Initial perturbation over (q..., p...).
  PhaseFunction perturbation;
  /// Replaces the q-dependence of the perturbation by a unit discrete delta at
  /// this point (the nearest node); the p-dependence is kept.
  std::optional<double> point_source;
  /// Transport coefficients g_s for the free-streaming comparison.
  std::vector<double> transport;
  /// Record the L-infinity gap to the free-streaming profile when applicable.
  bool compare_free_streaming = true;

  bool has_magnetic() const {
    return magnetic[0] != 0.0 || magnetic[1] != 0.0 || magnetic[2] != 0.0;
  }
  bool has_electric() const { return !electric.empty(); }
};

struct MagneticForms {
  PhaseField leibniz;
  PhaseField contracted;
  double relative_gap;
};

/// (e/mc) sum_{klm} eps_klm B_m S_pk D^alpha_pk (p_l f), assembled term by term
/// through fractional_leibniz, next to the contracted form
/// (e/mc) (S D^alpha_p f, p x B).
inline MagneticForms magnetic_term_forms(const PhaseField& f, const std::array<double, 3>& B,
                                         double charge, double mass, double light_speed,
                                         FractionalOrder order) {
  const PhaseGrid& g = f.grid;
  if (g.dof() != 3) {
    throw GridError("magnetic_term: needs exactly 3 momentum axes, got " +
                    std::to_string(g.dof()));
  }
  const auto& L = g.layout();
  const double pref = charge / (mass * light_speed);
  std::vector<double> lsum(L.size(), 0.0), csum(L.size(), 0.0);
  auto eps = [](std::size_t k, std::size_t l, std::size_t m) {
    return static_cast<double>((static_cast<int>(k) - static_cast<int>(l)) *
                               (static_cast<int>(l) - static_cast<int>(m)) *
                               (static_cast<int>(m) - static_cast<int>(k))) /
           2.0;
  };
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t ak = g.p_axis(k);
    const Grid1D& pk = L.axis(ak);
    const auto sk = order.alpha() == 1.0 ? std::vector<double>(pk.count, 1.0)
                                         : axis_scale_factors(pk, order);
    const auto dfk = axis_derivative(L, f.values, ak, order);
    for (std::size_t l = 0; l < 3; ++l) {
      const std::size_t al = g.p_axis(l);
      double bm = 0.0;
      for (std::size_t m = 0; m < 3; ++m) {
        bm += eps(k, l, m) * B[m];
      }
      if (bm == 0.0) {
        continue;
      }
      // D^alpha_pk (p_l f) line by line: along p_k, p_l is a polynomial of
      // degree 1 if l == k and a constant otherwise.
      const std::size_t R = (l == k) ? 1 : 0;
      const auto term = map_lines(
          L, f.values, ak, [&](std::span<const double> in, std::span<double> out, std::size_t base) {
            std::vector<double> gl(pk.count);
            for (std::size_t i = 0; i < pk.count; ++i) {
              gl[i] = L.coordinate(base + i * L.stride(ak), al);
            }
            const auto r = fractional_leibniz(SampledField(pk, {in.begin(), in.end()}),
                                              SampledField(pk, std::move(gl)), order, R);
            std::copy(r.values.begin(), r.values.end(), out.begin());
          });
      for (std::size_t i = 0; i < L.size(); ++i) {
        const double s = sk[L.index_along(i, ak)];
        lsum[i] += pref * bm * s * term[i];
        csum[i] += pref * bm * s * L.coordinate(i, al) * dfk[i];
      }
    }
  }
  double gap = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < L.size(); ++i) {
    gap = std::max(gap, std::abs(lsum[i] - csum[i]));
    scale = std::max(scale, std::abs(csum[i]));
  }
  return {PhaseField(g, std::move(lsum)), PhaseField(g, std::move(csum)),
          scale > 0.0 ? gap / scale : gap};
}

inline constexpr double magnetic_agreement_tolerance = 1e-8;

/// Magnetic term; throws if the two assembled forms disagree.
inline PhaseField magnetic_term(const PhaseField& f, const std::array<double, 3>& B,
                                double charge, double mass, double light_speed,
                                FractionalOrder order) {
  auto forms = magnetic_term_forms(f, B, charge, mass, light_speed, order);
  if (forms.relative_gap > magnetic_agreement_tolerance) {
    throw Error("magnetic_term: Leibniz and contracted forms differ by " +
                std::to_string(forms.relative_gap));
  }
  return std::move(forms.contracted);
}

namespace detail {

inline std::vector<double> sample_electric(const KineticScenario& sc, const PhaseGrid& g,
                                           std::size_t s) {
  const auto& L = g.layout();
  std::vector<double> e(L.size());
  std::vector<double> q(g.dof());
  for (std::size_t i = 0; i < L.size(); ++i) {
    for (std::size_t a = 0; a < g.dof(); ++a) {
      q[a] = L.coordinate(i, g.q_axis(a));
    }
    e[i] = sc.electric[s](q);
  }
  return e;
}

inline void check_scenario(const KineticScenario& sc, const PhaseGrid& g) {
  if (!(sc.mass > 0.0) || !(sc.light_speed > 0.0)) {
    throw DomainError("kinetic scenario: mass and light speed must be positive");
  }
  if (sc.has_electric() && sc.electric.size() != g.dof()) {
    throw GridError("kinetic scenario: one electric component per q axis is required");
  }
  if (sc.has_magnetic() && g.dof() != 3) {
    throw GridError("kinetic scenario: a magnetic field needs 3 momentum axes");
  }
  for (double x : sc.transport) {
    if (!(x > 0.0)) {
      throw DomainError("kinetic scenario: transport coefficients must be positive");
    }
  }
}

} // namespace detail

/// -(v, S D^alpha_q f) - e (E, S D^alpha_p f) - magnetic term.
inline PhaseField kinetic_rhs(const PhaseField& f, const KineticScenario& sc,
                              FractionalOrder order) {
  const PhaseGrid& g = f.grid;
  detail::check_scenario(sc, g);
  const auto& L = g.layout();
  std::vector<double> out(L.size(), 0.0);
  for (std::size_t s = 0; s < g.dof(); ++s) {
    const auto dq = scaled_axis_derivative(L, f.values, g.q_axis(s), order);
    for (std::size_t i = 0; i < L.size(); ++i) {
      out[i] -= L.coordinate(i, g.p_axis(s)) / sc.mass * dq[i];
    }
    if (sc.has_electric()) {
      const auto e = detail::sample_electric(sc, g, s);
      const auto dp = scaled_axis_derivative(L, f.values, g.p_axis(s), order);
      for (std::size_t i = 0; i < L.size(); ++i) {
        out[i] -= sc.charge * e[i] * dp[i];
      }
    }
  }
  if (sc.has_magnetic()) {
    const auto m = magnetic_term(f, sc.magnetic, sc.charge, sc.mass, sc.light_speed, order);
    for (std::size_t i = 0; i < L.size(); ++i) {
      out[i] -= m.values[i];
    }
  }
  return PhaseField(g, std::move(out));
}

struct VlasovResult {
  PhaseField rho;
  DiagnosticsLog log;
};

/// RK4 evolution of the fractional Vlasov equation. The effective force is
/// rebuilt at every stage; the advective bound is checked at the start of
/// each step against the current forces.
inline VlasovResult vlasov_evolve(const PhaseDensity& rho0, const PairForceKernel& K,
                                  FractionalOrder order, std::size_t n_total, double dt,
                                  std::size_t steps, std::size_t stride = 0,
                                  const VelocityRule& V = unit_mass_velocity()) {
  const PhaseGrid& g = rho0.grid();
  detail::require_one_particle(g, "vlasov_evolve");
  if (stride == 0) {
    stride = steps == 0 ? 1 : steps;
  }
  const auto& L = g.layout();
  const StateMonitor monitor(L, order);
  const auto sq = axis_scale_factors(L.axis(0), order);
  const auto sp = axis_scale_factors(L.axis(1), order);
  VlasovResult out{rho0.field(), {}};
  out.log.push(monitor.record(out.rho.values, 0.0));
  const double c = static_cast<double>(n_total - 1);
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t0 = static_cast<double>(step - 1) * dt;
    {
      const auto feff = effective_force(out.rho, K);
      double m = 0.0;
      for (std::size_t i = 0; i < L.size(); ++i) {
        const double q = L.coordinate(i, 0), p = L.coordinate(i, 1);
        m = std::max(m, std::abs(V(q, p) * sq[L.index_along(i, 0)]));
        m = std::max(m, std::abs((K.external(q, p, t0) + c * feff.values[i]) *
                                 sp[L.index_along(i, 1)]));
      }
      check_advective_bound(dt, m, g.min_spacing());
    }
    const double offsets[4] = {0.0, 0.5 * dt, 0.5 * dt, dt};
    int stage = 0;
    rk4_step(out.rho.values, dt, [&](const std::vector<double>& y) {
      return vlasov_rhs(PhaseField(g, y), K, order, n_total, V, t0 + offsets[stage++]).values;
    });
    monitor.absorb(out.rho.values);
    require_finite_state(out.rho.values, step);
    if (step % stride == 0 || step == steps) {
      out.log.push(monitor.record(out.rho.values, static_cast<double>(step) * dt));
    }
  }
  return out;
}

enum class LinearSolver { caputo_grid, riesz_spectral };

struct LinearSnapshot {
  double time;
  PhaseField field;
};

struct LinearEvolution {
  std::vector<LinearSnapshot> snapshots;
  DiagnosticsLog log;
};

namespace detail {

inline PhaseField initial_perturbation(const KineticScenario& sc, const PhaseGrid& g) {
  if (!sc.perturbation && !sc.point_source) {
    throw DomainError("kinetic scenario: no initial perturbation");
  }
  const auto& L = g.layout();
  std::vector<double> v(L.size());
  std::vector<double> x(L.rank());
  std::vector<std::size_t> hit(g.dof(), 0);
  double cell = 1.0;
  if (sc.point_source) {
    for (std::size_t s = 0; s < g.dof(); ++s) {
      const Grid1D& q = L.axis(g.q_axis(s));
      const double idx = std::round((*sc.point_source - q.lower) / q.h);
      if (idx < 0.0 || idx >= static_cast<double>(q.count)) {
        throw DomainError("kinetic scenario: point source lies outside the q grid");
      }
      hit[s] = static_cast<std::size_t>(idx);
      cell *= q.h;
    }
  }
  for (std::size_t i = 0; i < L.size(); ++i) {
    L.coordinates(i, x);
    if (sc.point_source) {
      bool on = true;
      for (std::size_t s = 0; s < g.dof(); ++s) {
        on = on && L.index_along(i, g.q_axis(s)) == hit[s];
      }
      const double pf = sc.perturbation ? sc.perturbation(x) : 1.0;
      v[i] = on ? pf / cell : 0.0;
    } else {
      v[i] = sc.perturbation(x);
    }
  }
  return PhaseField(g, std::move(v));
}

// -e (E, S D^alpha_p f0): the time-independent source of the linear problem.
inline std::vector<double> linear_source(const KineticScenario& sc, const PhaseGrid& g,
                                         FractionalOrder order) {
  const auto& L = g.layout();
  std::vector<double> src(L.size(), 0.0);
  if (!sc.has_electric() || !sc.background) {
    return src;
  }
  std::vector<double> p(g.dof());
  const auto f0 = sample_tensor(L, [&](std::span<const double> x) {
    for (std::size_t s = 0; s < g.dof(); ++s) {
      p[s] = x[g.p_axis(s)];
    }
    return sc.background(p);
  });
  for (std::size_t s = 0; s < g.dof(); ++s) {
    const auto e = sample_electric(sc, g, s);
    const auto dp = scaled_axis_derivative(L, f0, g.p_axis(s), order);
    for (std::size_t i = 0; i < L.size(); ++i) {
      src[i] -= sc.charge * e[i] * dp[i];
    }
  }
  return src;
}

// q-marginal of a one-pair field divided by the initial mass, compared with the free-streaming density centred at q0.
inline std::optional<double> free_streaming_gap(const KineticScenario& sc, const PhaseField& f,
                                                double p_mass, double t) {
  const PhaseGrid& g = f.grid;
  if (!sc.compare_free_streaming || g.dof() != 1 || sc.transport.empty() || !(t > 0.0) || sc.has_electric() ||
      p_mass == 0.0) {
    return std::nullopt;
  }
  const auto& L = g.layout();
  const Grid1D& q = L.axis(0);
  const auto marginal =
      integrate_out(L, f.values, {0}, {trapezoid_axis_weights(q), trapezoid_axis_weights(L.axis(1))});
  const LevyProfile prof(sc.order, sc.transport[0], t);
  const double q0 = sc.point_source.value_or(0.0);
  double m = 0.0;
  for (std::size_t i = 0; i < q.count; ++i) {
    m = std::max(m, std::abs(marginal[i] / p_mass - free_streaming_profile(prof, q.node(i) - q0)));
  }
  return m;
}

} // namespace detail

/// Advances d(delta f)/dt = -(v, D^alpha_q delta f) - e (E, D^alpha_p f0).
///
/// caputo-grid: scale-factored Caputo derivatives, RK4, absorbing outer layer.
/// riesz-spectral: along each q axis D^alpha_q is the operator with Fourier
/// multiplier +|k|^alpha and v_s S_qs is replaced by the constant g_s; the
/// step is the exact integrating factor, so any dt is stable.
///
/// A snapshot and a diagnostics record are taken every `stride` steps and at
/// the end; records carry "linf_vs_analytic" when a one-pair, field-free run
/// has transport coefficients.
inline LinearEvolution linear_evolve(const KineticScenario& sc, const PhaseGrid& g, double dt,
                                     std::size_t steps, LinearSolver solver,
                                     std::size_t stride = 0) {
  detail::check_scenario(sc, g);
  if (!(dt > 0.0)) {
    throw DomainError("linear_evolve: time step must be positive");
  }
  if (stride == 0) {
    stride = steps == 0 ? 1 : steps;
  }
  const FractionalOrder order = sc.order;
  const auto& L = g.layout();
  PhaseField state = detail::initial_perturbation(sc, g);
  const auto src = detail::linear_source(sc, g, order);
  // Spectral runs are periodic in q: rectangle weights on the q axes and the
  // plain measure in both mass columns (the fractional measure needs positive
  // coordinates). Grid runs use the usual trapezoid and fractional weights.
  const bool spectral = solver == LinearSolver::riesz_spectral;
  const StateMonitor monitor(L, spectral ? FractionalOrder(1.0) : order);
  std::vector<double> weights = StateMonitor::node_weights(L, Weighting::plain());
  if (spectral) {
    for (std::size_t i = 0; i < L.size(); ++i) {
      for (std::size_t s = 0; s < g.dof(); ++s) {
        const std::size_t a = g.q_axis(s);
        const std::size_t k = L.index_along(i, a);
        if (k == 0 || k + 1 == L.axis(a).count) {
          weights[i] *= 2.0;
        }
      }
    }
  }
  auto total = [&](std::span<const double> v) {
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      m += weights[i] * v[i];
    }
    return m;
  };
  // q faces only: the p axes do not advect.
  std::vector<std::size_t> q_faces;
  for (std::size_t i = 0; i < L.size(); ++i) {
    for (std::size_t s = 0; s < g.dof(); ++s) {
      const std::size_t k = L.index_along(i, g.q_axis(s));
      if (k == 0 || k + 1 == L.axis(g.q_axis(s)).count) {
        q_faces.push_back(i);
        break;
      }
    }
  }

  // The analytic comparison is normalised by the initial mass.
  const double p_mass = total(state.values);

  LinearEvolution out;
  auto record = [&](double t) {
    DiagnosticsRecord r = monitor.record(state.values, t);
    if (spectral) {
      r.plain_mass = r.fractional_mass = total(state.values);
    }
    if (auto gap = detail::free_streaming_gap(sc, state, p_mass, t)) {
      r.set("linf_vs_analytic", *gap);
    }
    out.log.push(std::move(r));
    out.snapshots.push_back({t, state});
  };
  record(0.0);

  if (solver == LinearSolver::riesz_spectral) {
    if (sc.transport.size() != g.dof()) {
      throw DomainError("riesz-spectral: one transport coefficient per q axis is required");
    }
    // Per q axis, per mode: exp(-g |k|^alpha dt) and the matching source gain.
    std::vector<std::vector<double>> decay(g.dof()), gain(g.dof());
    for (std::size_t s = 0; s < g.dof(); ++s) {
      const Grid1D& q = L.axis(g.q_axis(s));
      RealSpectrum fft(q.count);
      const double period = q.h * static_cast<double>(q.count);
      for (std::size_t j = 0; j < fft.mode_count(); ++j) {
        const double lam = sc.transport[s] * std::pow(fft.wavenumber(j, period), order.alpha());
        decay[s].push_back(std::exp(-lam * dt));
        gain[s].push_back(lam > 0.0 ? -std::expm1(-lam * dt) / lam : dt);
      }
    }
    if (sc.has_magnetic()) {
      throw DomainError("riesz-spectral: the magnetic term needs the caputo-grid solver");
    }
    if (g.dof() > 1 && sc.has_electric()) {
      throw DomainError("riesz-spectral: an electric source is supported for one q axis only");
    }
    for (std::size_t step = 1; step <= steps; ++step) {
      for (std::size_t s = 0; s < g.dof(); ++s) {
        const std::size_t a = g.q_axis(s);
        RealSpectrum fft(L.axis(a).count);
        const bool with_source = s == 0 && sc.has_electric();
        const auto next = map_lines(
            L, state.values, a, [&](std::span<const double> in, std::span<double> o, std::size_t base) {
              fft.forward(in);
              std::vector<std::complex<double>> m(fft.mode_count());
              for (std::size_t j = 0; j < m.size(); ++j) {
                m[j] = fft.mode(j) * decay[s][j];
              }
              if (with_source) {
                std::vector<double> sl(in.size());
                for (std::size_t i = 0; i < sl.size(); ++i) {
                  sl[i] = src[base + i * L.stride(a)];
                }
                fft.forward(sl);
                for (std::size_t j = 0; j < m.size(); ++j) {
                  m[j] += fft.mode(j) * gain[s][j];
                }
              }
              for (std::size_t j = 0; j < m.size(); ++j) {
                fft.set_mode(j, m[j]);
              }
              fft.inverse(o);
            });
        state.values = next;
      }
      require_finite_state(state.values, step);
      if (step % stride == 0 || step == steps) {
        record(static_cast<double>(step) * dt);
      }
    }
    return out;
  }

  // caputo-grid: only the q axes advect, each with speed |p_s / m| S_qs.
  for (std::size_t s = 0; s < g.dof() && steps > 0; ++s) {
    const Grid1D& q = L.axis(g.q_axis(s));
    const Grid1D& p = L.axis(g.p_axis(s));
    const auto sq = axis_scale_factors(q, order);
    const double pmax = std::max(std::abs(p.lower), std::abs(p.upper())) / sc.mass;
    check_advective_bound(dt, pmax * *std::max_element(sq.begin(), sq.end()), q.h);
  }
  // The Lorentz force rotates momenta: speed |p x B| e/(m c) S_p on the p axes.
  if (sc.has_magnetic() && steps > 0) {
    double pm = 0.0, bm = 0.0, smax = 0.0;
    for (std::size_t s = 0; s < 3; ++s) {
      const Grid1D& p = L.axis(g.p_axis(s));
      pm = std::max(pm, std::max(std::abs(p.lower), std::abs(p.upper())));
      bm = std::max(bm, std::abs(sc.magnetic[s]));
      const auto sp = axis_scale_factors(p, order);
      smax = std::max(smax, *std::max_element(sp.begin(), sp.end()));
    }
    const double hp = std::min({L.axis(g.p_axis(0)).h, L.axis(g.p_axis(1)).h, L.axis(g.p_axis(2)).h});
    check_advective_bound(dt, 2.0 * pm * bm * std::abs(sc.charge) / (sc.mass * sc.light_speed) * smax, hp);
  }
  auto rhs = [&](const std::vector<double>& y) {
    std::vector<double> r = src;
    for (std::size_t s = 0; s < g.dof(); ++s) {
      const auto dq = scaled_axis_derivative(L, y, g.q_axis(s), order);
      for (std::size_t i = 0; i < L.size(); ++i) {
        r[i] -= L.coordinate(i, g.p_axis(s)) / sc.mass * dq[i];
      }
    }
    // Linearised about an isotropic f0, only delta f feels the magnetic term.
    if (sc.has_magnetic()) {
      const auto m = magnetic_term(PhaseField(g, y), sc.magnetic, sc.charge, sc.mass,
                                   sc.light_speed, order);
      for (std::size_t i = 0; i < L.size(); ++i) {
        r[i] -= m.values[i];
      }
    }
    return r;
  };
  for (std::size_t step = 1; step <= steps; ++step) {
    rk4_step(state.values, dt, rhs);
    for (std::size_t i : q_faces) {
      state.values[i] = 0.0;
    }
    require_finite_state(state.values, step);
    if (step % stride == 0 || step == steps) {
      record(static_cast<double>(step) * dt);
    }
  }
  return out;
}

} // namespace frackin

#endif // FRACKIN_KINETIC_HPP
