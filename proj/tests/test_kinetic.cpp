#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "frackin/kinetic.hpp"

using namespace frackin;

namespace {

double gauss(double x, double c, double s) {
  return std::exp(-(x - c) * (x - c) / (2.0 * s * s));
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  EXPECT_EQ(a.size(), b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

PhaseDensity gaussian_density(const PhaseGrid& g, double qc, double pc, double sq, double sp) {
  return PhaseDensity::normalized(
      PhaseField::sample(g, [=](std::span<const double> x) {
        return gauss(x[0], qc, sq) * gauss(x[1], pc, sp);
      }),
      Weighting::plain());
}

const FractionalOrder one(1.0);
const FractionalOrder half(0.5);

} // namespace

TEST(EffectiveForce, IndependentOfPartnerReturnsKernel) {
  const PhaseGrid g(Grid1D::spanning(-5, 5, 21), Grid1D::spanning(-5, 5, 19));
  const auto rho = gaussian_density(g, 0.3, -0.2, 0.8, 0.9);
  PairForceKernel K{[](double q1, double p1, double, double) { return std::sin(q1) + p1; },
                    [](double, double, double) { return 0.0; }};
  const auto f = effective_force(rho, K);
  const auto& L = g.layout();
  for (std::size_t i = 0; i < L.size(); ++i) {
    EXPECT_NEAR(f.values[i], std::sin(L.coordinate(i, 0)) + L.coordinate(i, 1), 1e-12);
  }
}

TEST(EffectiveForce, LinearCouplingPullsTowardsTheMean) {
  const double qbar = 0.7, kappa = 0.3;
  const PhaseGrid g(Grid1D::spanning(-6, 6, 49), Grid1D::spanning(-6, 6, 41));
  const auto rho = gaussian_density(g, qbar, 0.1, 0.9, 1.0);
  const auto f = effective_force(rho, PairForceKernel::linear_coupling(kappa));
  const auto& L = g.layout();
  for (std::size_t i = 0; i < L.size(); ++i) {
    ASSERT_NEAR(f.values[i], kappa * (qbar - L.coordinate(i, 0)), 1e-8);
  }
}

TEST(EffectiveForce, ZeroKernelAndBadGrids) {
  const PhaseGrid g(Grid1D::spanning(-3, 3, 9), Grid1D::spanning(-3, 3, 9));
  const auto rho = gaussian_density(g, 0, 0, 1, 1);
  EXPECT_EQ(max_abs(effective_force(rho, PairForceKernel::zero()).values), 0.0);
  const auto g2 = Grid1D::spanning(-1, 1, 3);
  const PhaseGrid two({g2, g2}, {g2, g2});
  EXPECT_THROW(effective_force(PhaseField::constant(two, 1.0), PairForceKernel::zero()), GridError);
}

TEST(Vlasov, ForceFreeHomogeneousDensityIsStationary) {
  const PhaseGrid g(Grid1D::spanning(-4, 4, 17), Grid1D::spanning(-4, 4, 17));
  const auto rho =
      PhaseField::sample(g, [](std::span<const double> x) { return gauss(x[1], 0.5, 1.0); });
  const auto r = vlasov_rhs(rho, PairForceKernel::zero(), one, 5);
  EXPECT_LE(max_abs(r.values), 1e-14);
}

TEST(Vlasov, MatchesLiouvilleWithCombinedForce) {
  const PhaseGrid g(Grid1D::spanning(-5, 5, 25), Grid1D::spanning(-5, 5, 23));
  const auto rho = gaussian_density(g, 0.4, 0.2, 0.8, 0.9);
  const auto K = PairForceKernel::linear_coupling(0.5, 1.0);
  const std::size_t n = 7;
  const auto feff = effective_force(rho, K);
  const auto& L = g.layout();
  std::vector<double> v(L.size()), f(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) {
    v[i] = L.coordinate(i, 1);
    f[i] = -L.coordinate(i, 0) + 6.0 * feff.values[i];
  }
  const auto expected = liouville_rhs(rho, {PhaseField(g, v)}, {PhaseField(g, f)}, one);
  EXPECT_LE(max_diff(vlasov_rhs(rho, K, one, n).values, expected.values), 1e-12);
}

namespace {

// Two paths to the mean-field collision term: reduce the tensor product, or
// build F^eff by direct quadrature and differentiate rho_1 F^eff.
double mean_field_two_path_gap(FractionalOrder order, const PhaseGrid& g, double c) {
  const auto rho1 = gaussian_density(g, c, c + 0.2, 0.6, 0.7);
  const auto& v = rho1.values();
  std::vector<double> outer(v.size() * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      outer[i * v.size() + j] = v[i] * v[j];
    }
  }
  const auto& qg = g.q_axes()[0];
  const auto& pg = g.p_axes()[0];
  const auto rho2 = NBodyDensity::state(2, qg, pg, outer);
  PairForceKernel K{[](double q1, double p1, double q2, double p2) {
                      return 0.4 * (q2 - q1) + 0.1 * std::tanh(q1 - q2) * p2 + 0.05 * p1;
                    },
                    [](double, double, double) { return 0.0; }};
  const std::size_t n = 3;
  const auto I = collision_term(rho2, K, order, n);
  const auto feff = effective_force(rho1, K);
  std::vector<double> flux(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    flux[i] = v[i] * feff.values[i];
  }
  auto expected = scaled_axis_derivative(g.layout(), flux, 1, order);
  for (double& x : expected) {
    x *= -2.0;
  }
  EXPECT_GT(max_abs(I.values), 1e-2);
  return max_diff(I.values, expected);
}

} // namespace

TEST(Vlasov, CollisionTermOfProductEqualsMeanFieldForm) {
  EXPECT_LE(mean_field_two_path_gap(one, PhaseGrid(Grid1D::spanning(-5, 5, 21),
                                                   Grid1D::spanning(-5, 5, 21)),
                                    0.0),
            1e-8);
  EXPECT_LE(mean_field_two_path_gap(half, PhaseGrid(Grid1D::cell_centred(0, 9, 20),
                                                    Grid1D::cell_centred(0, 9, 20)),
                                    4.5),
            1e-8);
}

TEST(Leibniz, ConstantPartnerGivesPlainDerivative) {
  const auto grid = Grid1D::spanning(0, 2, 81);
  const auto f = SampledField::sample(grid, [](double x) { return std::exp(-x) * x * x; });
  const auto g = SampledField::sample(grid, [](double) { return 1.0; });
  for (double a : {0.5, 1.0, 1.5}) {
    const FractionalOrder o(a);
    EXPECT_EQ(fractional_leibniz(f, g, o, 0).values, caputo_deriv(f, o).values) << a;
  }
}

TEST(Leibniz, QuadraticTimesLinearGivesCubicDerivative) {
  const auto grid = Grid1D::spanning(0, 1, 401);
  const auto f = SampledField::sample(grid, [](double x) { return x * x; });
  const auto g = SampledField::sample(grid, [](double x) { return x; });
  const auto r = fractional_leibniz(f, g, half, 1);
  EXPECT_NEAR(r.values.back(), 1.8054066673, 1e-4);
  EXPECT_NEAR(r.values.back(), caputo_monomial(3, half, 1.0), 1e-4);
}

TEST(Leibniz, ClassicalOrderIsProductRule) {
  const auto grid = Grid1D::spanning(-1, 2, 301);
  auto fx = [](double x) { return std::sin(2 * x); };
  auto gx = [](double x) { return 1.0 - 0.5 * x + 0.25 * x * x; };
  const auto r = fractional_leibniz(SampledField::sample(grid, fx), SampledField::sample(grid, gx),
                                    one, 2);
  for (std::size_t i = 0; i < grid.count; ++i) {
    const double x = grid.node(i);
    const double exact = 2 * std::cos(2 * x) * gx(x) + fx(x) * (-0.5 + 0.5 * x);
    ASSERT_NEAR(r.values[i], exact, 2e-3) << x;
  }
}

TEST(Leibniz, MatchesCaputoOfProductWhenFactorStartsAtZero) {
  const auto grid = Grid1D::spanning(0, 2, 2001);
  auto fx = [](double x) { return x * std::exp(-x); };
  auto gx = [](double x) { return 1.0 + 2.0 * x - 0.3 * x * x; };
  const auto fg = SampledField::sample(grid, [&](double x) { return fx(x) * gx(x); });
  const auto direct = caputo_deriv(fg, half);
  const auto leib = fractional_leibniz(SampledField::sample(grid, fx),
                                       SampledField::sample(grid, gx), half, 2);
  EXPECT_LE(max_diff(direct.values, leib.values), 1e-5);
}

TEST(Leibniz, RefusesTruncation) {
  const auto grid = Grid1D::spanning(0, 1, 21);
  const auto f = SampledField::sample(grid, [](double x) { return x; });
  const auto g = SampledField::sample(grid, [](double x) { return x * x; });
  EXPECT_THROW(fractional_leibniz(f, g, half, 1), DomainError);
  EXPECT_NO_THROW(fractional_leibniz(f, g, half, 2));
  const auto e = SampledField::sample(grid, [](double x) { return std::exp(x); });
  EXPECT_THROW(fractional_leibniz(f, e, half, 4), DomainError);
  EXPECT_THROW(fractional_leibniz(f, SampledField::sample(Grid1D::spanning(0, 1, 22),
                                                          [](double) { return 1.0; }),
                                  half, 0),
               GridError);
}

namespace {

PhaseGrid momentum_grid(const Grid1D& p) {
  const auto q = Grid1D::spanning(0, 1, 2);
  return PhaseGrid({q, q, q}, {p, p, p});
}

} // namespace

TEST(Magnetic, ZeroFieldGivesZero) {
  const auto g = momentum_grid(Grid1D::spanning(-3, 3, 9));
  const auto f = PhaseField::sample(g, [](std::span<const double> x) {
    return std::exp(-x[3] * x[3] - x[4] * x[4] - x[5] * x[5]);
  });
  EXPECT_EQ(max_abs(magnetic_term(f, {0, 0, 0}, 1, 1, 1, one).values), 0.0);
  const PhaseGrid flat(Grid1D::spanning(-1, 1, 5), Grid1D::spanning(-1, 1, 5));
  EXPECT_THROW(magnetic_term(PhaseField::constant(flat, 1.0), {0, 0, 1}, 1, 1, 1, one), GridError);
}

TEST(Magnetic, ClassicalLorentzRotation) {
  const auto g = momentum_grid(Grid1D::spanning(-4, 4, 41));
  const double a = 0.8, b = 1.3;
  auto f = [&](double p1, double p2, double p3) {
    return std::exp(-p1 * p1 / (2 * a * a) - p2 * p2 / (2 * b * b) - p3 * p3 / 2);
  };
  const std::array<double, 3> B{0.0, 0.0, 1.5};
  const double e = 2.0, m = 0.5, c = 3.0;
  const auto field = PhaseField::sample(g, [&](std::span<const double> x) { return f(x[3], x[4], x[5]); });
  const auto mt = magnetic_term(field, B, e, m, c, one);
  const auto& L = g.layout();
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < L.size(); ++i) {
    const double p1 = L.coordinate(i, 3), p2 = L.coordinate(i, 4), p3 = L.coordinate(i, 5);
    // (p x B) . grad_p f with B along axis 3.
    const double v = f(p1, p2, p3);
    const double exact = e / (m * c) * (p2 * B[2] * (-p1 / (a * a)) * v + (-p1 * B[2]) * (-p2 / (b * b)) * v);
    if (!L.on_boundary(i)) {
      err = std::max(err, std::abs(mt.values[i] - exact));
    }
    scale = std::max(scale, std::abs(exact));
  }
  EXPECT_LE(err, 1e-2 * scale);

  // Isotropic in p: the Lorentz force only rotates, so the term vanishes.
  const auto iso = PhaseField::sample(g, [&](std::span<const double> x) {
    return std::exp(-(x[3] * x[3] + x[4] * x[4] + x[5] * x[5]) / 2);
  });
  EXPECT_LE(max_abs_interior(L, magnetic_term(iso, B, e, m, c, one).values), 1e-2 * scale);
}

TEST(Magnetic, LeibnizAndContractedFormsAgree) {
  for (double alpha : {0.5, 1.0, 1.5}) {
    const FractionalOrder o(alpha);
    const auto g = momentum_grid(Grid1D(0.125, 0.125, 16));
    const auto f = PhaseField::sample(g, [](std::span<const double> x) {
      const double p1 = x[3], p2 = x[4], p3 = x[5];
      return 1.0 + p1 * p1 * p2 - 0.5 * p2 * p3 * p3 + 0.25 * p1 * p2 * p3 + x[0];
    });
    const auto forms = magnetic_term_forms(f, {0.3, -0.7, 1.1}, 1.0, 1.0, 1.0, o);
    EXPECT_GT(max_abs(forms.contracted.values), 1e-2);
    EXPECT_LE(forms.relative_gap, 1e-8) << alpha;
  }
}

TEST(Magnetic, DiagonalLeibnizTermCarriesTheDroppedPiece) {
  // D^alpha_p (p f) = p D^alpha f + alpha D^(alpha-1) f: the piece the
  // antisymmetric sum removes.
  const auto grid = Grid1D::spanning(0, 1, 201);
  const auto f = SampledField::sample(grid, [](double x) { return x * x; });
  const auto p = SampledField::sample(grid, [](double x) { return x; });
  const auto r = fractional_leibniz(f, p, half, 1);
  const auto d = caputo_deriv(f, half);
  const auto i = fractional_integral(f, half);
  for (std::size_t k = 0; k < grid.count; ++k) {
    ASSERT_NEAR(r.values[k], grid.node(k) * d.values[k] + 0.5 * i.values[k], 1e-12);
  }
}

TEST(KineticRhs, HomogeneousForceFreeIsZero) {
  const PhaseGrid g(Grid1D::cell_centred(0, 4, 16), Grid1D(0.5, 0.25, 13));
  KineticScenario sc;
  const auto f =
      PhaseField::sample(g, [](std::span<const double> x) { return gauss(x[1], 2.0, 0.5); });
  for (double a : {0.5, 1.0}) {
    EXPECT_LE(max_abs(kinetic_rhs(f, sc, FractionalOrder(a)).values), 1e-12) << a;
  }
}

TEST(KineticRhs, ClassicalFreeStreaming) {
  const PhaseGrid g(Grid1D::spanning(-5, 5, 201), Grid1D::spanning(-2, 2, 9));
  KineticScenario sc;
  sc.mass = 2.0;
  const auto f = PhaseField::sample(g, [](std::span<const double> x) {
    return gauss(x[0], 0.5, 0.7) * gauss(x[1], 0.0, 1.0);
  });
  const auto r = kinetic_rhs(f, sc, one);
  const auto& L = g.layout();
  for (std::size_t i = 0; i < L.size(); ++i) {
    const double q = L.coordinate(i, 0), p = L.coordinate(i, 1);
    const double dq = -(q - 0.5) / 0.49 * gauss(q, 0.5, 0.7) * gauss(p, 0.0, 1.0);
    ASSERT_NEAR(r.values[i], -p / 2.0 * dq, 2e-3);
  }
}

TEST(KineticRhs, LinearizationDropsOnlyTheCrossTerm) {
  const PhaseGrid g(Grid1D::cell_centred(0, 6, 48), Grid1D::cell_centred(0, 6, 40));
  for (double a : {0.5, 1.0}) {
    const FractionalOrder o(a);
    KineticScenario sc;
    sc.order = o;
    sc.charge = 1.5;
    sc.electric = {[](std::span<const double> q) { return 0.3 + 0.1 * std::sin(q[0]); }};
    auto f0 = [](double p) { return gauss(p, 3.0, 0.6); };
    auto df = [](double q, double p) { return 0.05 * gauss(q, 3.0, 0.7) * gauss(p, 3.2, 0.5); };
    const auto full = PhaseField::sample(g, [&](std::span<const double> x) {
      return f0(x[1]) + df(x[0], x[1]);
    });
    const auto pert = PhaseField::sample(g, [&](std::span<const double> x) { return df(x[0], x[1]); });
    const auto bg = PhaseField::sample(g, [&](std::span<const double> x) { return f0(x[1]); });
    const auto& L = g.layout();
    // Linear RHS for delta f: -(v, D_q df) - e (E, D_p f0).
    const auto dq = scaled_axis_derivative(L, pert.values, 0, o);
    const auto dp0 = scaled_axis_derivative(L, bg.values, 1, o);
    const auto dpd = scaled_axis_derivative(L, pert.values, 1, o);
    const auto r = kinetic_rhs(full, sc, o);
    double gap = 0.0, emax = 0.0;
    for (std::size_t i = 0; i < L.size(); ++i) {
      const double e = sc.electric[0](std::vector<double>{L.coordinate(i, 0)});
      const double linear = -L.coordinate(i, 1) * dq[i] - sc.charge * e * dp0[i];
      gap = std::max(gap, std::abs(r.values[i] - linear));
      emax = std::max(emax, std::abs(e));
    }
    EXPECT_GT(gap, 0.0);
    EXPECT_LE(gap, sc.charge * emax * max_abs(dpd) * (1 + 1e-12)) << a;
  }
}

TEST(KineticRhs, ValidatesScenario) {
  const PhaseGrid g(Grid1D::spanning(0, 1, 5), Grid1D::spanning(0, 1, 5));
  const auto f = PhaseField::constant(g, 1.0);
  KineticScenario sc;
  sc.mass = 0.0;
  EXPECT_THROW(kinetic_rhs(f, sc, one), DomainError);
  sc.mass = 1.0;
  sc.magnetic = {0, 0, 1};
  EXPECT_THROW(kinetic_rhs(f, sc, one), GridError);
  sc.magnetic = {0, 0, 0};
  sc.electric = {[](std::span<const double>) { return 1.0; },
                 [](std::span<const double>) { return 1.0; }};
  EXPECT_THROW(kinetic_rhs(f, sc, one), GridError);
}

namespace {

constexpr std::size_t kModes = 1024;
constexpr double kPeriod = 100.0;

PhaseGrid periodic_grid(double period = kPeriod, std::size_t modes = kModes) {
  return PhaseGrid(Grid1D(-0.5 * period, period / static_cast<double>(modes), modes),
                   Grid1D(0.25, 0.25, 3));
}

KineticScenario point_source(double alpha, double g) {
  KineticScenario sc;
  sc.order = FractionalOrder(alpha);
  sc.point_source = 0.0;
  sc.transport = {g};
  return sc;
}

// q-profile of the first p line.
std::vector<double> q_profile(const PhaseField& f) {
  const std::size_t np = f.grid.p_axes()[0].count;
  std::vector<double> out(f.grid.q_axes()[0].count);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = f.values[i * np];
  }
  return out;
}

} // namespace

TEST(LinearEvolve, ZeroStepsReturnsInitialData) {
  const PhaseGrid g(Grid1D::cell_centred(0, 4, 32), Grid1D(0.5, 0.25, 5));
  KineticScenario sc;
  sc.perturbation = [](std::span<const double> x) { return gauss(x[0], 2, 0.4); };
  const auto init = PhaseField::sample(g, sc.perturbation);
  for (auto solver : {LinearSolver::caputo_grid, LinearSolver::riesz_spectral}) {
    sc.transport = {1.0};
    const auto run = linear_evolve(sc, g, 0.01, 0, solver);
    ASSERT_EQ(run.snapshots.size(), 1u);
    EXPECT_EQ(run.snapshots[0].field.values, init.values);
    EXPECT_EQ(run.log.size(), 1u);
  }
}

TEST(LinearEvolve, GaussLimitFromPointSource) {
  const auto run = linear_evolve(point_source(2.0, 1.0), periodic_grid(), 0.05, 20,
                                 LinearSolver::riesz_spectral);
  const auto& last = run.snapshots.back();
  EXPECT_NEAR(last.time, 1.0, 1e-12);
  const auto prof = q_profile(last.field);
  const Grid1D q = periodic_grid().q_axes()[0];
  double err = 0.0;
  for (std::size_t i = 0; i < q.count; ++i) {
    const double x = q.node(i);
    err = std::max(err, std::abs(prof[i] - std::exp(-x * x / 4.0) / (2.0 * std::sqrt(std::numbers::pi))));
  }
  EXPECT_LE(err, 1e-3);
  EXPECT_LE(run.log.back().get("linf_vs_analytic"), 1e-3);
}

TEST(LinearEvolve, LevyProfileFromPointSource) {
  const auto start = std::chrono::steady_clock::now();
  const auto run = linear_evolve(point_source(1.5, 1.0), periodic_grid(), 0.1, 10,
                                 LinearSolver::riesz_spectral);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double err = run.log.back().get("linf_vs_analytic");
  RecordProperty("linf", std::to_string(err));
  RecordProperty("seconds", std::to_string(secs));
  EXPECT_LE(err, 1e-3);
  EXPECT_LT(secs, 10.0);
}

TEST(LinearEvolve, SpectralStreamingKeepsMass) {
  const auto run = linear_evolve(point_source(1.5, 0.7), periodic_grid(), 0.25, 16,
                                 LinearSolver::riesz_spectral, 4);
  ASSERT_EQ(run.log.size(), 5u);
  for (const auto& r : run.log.records()) {
    EXPECT_NEAR(r.plain_mass, run.log.front().plain_mass, 1e-13);
  }
}

namespace {

// Trigonometric interpolant of a periodic profile at an arbitrary point.
double trig_eval(const std::vector<double>& v, double lower, double period, double x) {
  const std::size_t n = v.size();
  RealSpectrum fft(n);
  fft.forward(v);
  double acc = 0.0;
  for (std::size_t j = 0; j < fft.mode_count(); ++j) {
    const double k = fft.wavenumber(j, period);
    const double w = (j == 0 || j == n / 2) ? 1.0 : 2.0;
    acc += w * std::real(fft.mode(j) * std::exp(std::complex<double>(0.0, k * (x - lower))));
  }
  return acc / static_cast<double>(n);
}

} // namespace

TEST(LinearEvolve, SpectralStreamingIsSelfSimilar) {
  const auto g = periodic_grid();
  {
    // alpha = 2: q -> 2q maps nodes onto nodes.
    const auto run = linear_evolve(point_source(2.0, 1.0), g, 0.5, 8, LinearSolver::riesz_spectral, 2);
    const auto p1 = q_profile(run.snapshots[1].field), p4 = q_profile(run.snapshots[4].field);
    ASSERT_NEAR(run.snapshots[1].time, 1.0, 1e-12);
    ASSERT_NEAR(run.snapshots[4].time, 4.0, 1e-12);
    const std::size_t zero = kModes / 2;
    double err = 0.0;
    for (std::size_t i = zero - 200; i <= zero + 200; ++i) {
      const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(zero);
      const std::size_t jj = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(zero) + 2 * off);
      err = std::max(err, std::abs(p4[jj] - 0.5 * p1[i]));
    }
    EXPECT_LE(err, 1e-6);
  }
  {
    // Periodic images break exact self-similarity by about t P^-(1+alpha),
    // so this half runs on a longer period.
    const double alpha = 1.5, period = 800.0;
    const std::size_t modes = 4096;
    const auto lg = periodic_grid(period, modes);
    const Grid1D lq = lg.q_axes()[0];
    auto sc = point_source(alpha, 1.0);
    sc.compare_free_streaming = false;
    const auto run = linear_evolve(sc, lg, 0.5, 8, LinearSolver::riesz_spectral, 2);
    const auto p1 = q_profile(run.snapshots[1].field), p4 = q_profile(run.snapshots[4].field);
    const double s = std::pow(4.0, 1.0 / alpha);
    double err = 0.0;
    for (std::size_t i = modes / 2 - 150; i <= modes / 2 + 150; ++i) {
      const double x = lq.node(i);
      err = std::max(err, std::abs(trig_eval(p4, lq.lower, period, x * s) - p1[i] / s));
    }
    RecordProperty("self_similarity_gap", std::to_string(err));
    EXPECT_LE(err, 1e-6);
  }
}

TEST(LinearEvolve, UniformFieldFeedsTheZeroMode) {
  const auto g = periodic_grid();
  auto sc = point_source(1.5, 1.0);
  sc.charge = 2.0;
  sc.electric = {[](std::span<const double>) { return 0.25; }};
  sc.background = [](std::span<const double> p) { return 3.0 + p[0] * p[0]; };
  const auto run = linear_evolve(sc, g, 0.1, 5, LinearSolver::riesz_spectral);
  const auto free = linear_evolve(point_source(1.5, 1.0), g, 0.1, 5, LinearSolver::riesz_spectral);
  // S D^1.5 p^2 = Gamma(1/2) p^(1/2) * 2 p^(1/2) / Gamma(3/2) = 4 p, so the
  // source is -e E 4 p = -2 p everywhere and delta f shifts by -2 p t.
  auto expected = free.snapshots.back().field.values;
  const auto& L = g.layout();
  for (std::size_t i = 0; i < L.size(); ++i) {
    expected[i] -= 2.0 * L.coordinate(i, 1) * 0.5;
  }
  EXPECT_LE(max_diff(run.snapshots.back().field.values, expected), 1e-12);
}

TEST(LinearEvolve, ClassicalGridTransportsBump) {
  const PhaseGrid g(Grid1D::spanning(0, 8, 161), Grid1D(0.99, 0.01, 3));
  KineticScenario sc;
  sc.perturbation = [](std::span<const double> x) { return gauss(x[0], 2.0, 0.4); };
  const double dt = 0.02;
  const auto run = linear_evolve(sc, g, dt, 50, LinearSolver::caputo_grid);
  const auto& f = run.snapshots.back().field;
  const auto& L = g.layout();
  double m = 0.0, mq = 0.0;
  for (std::size_t i = 0; i < L.size(); ++i) {
    const double w = L.trapezoid_weight(i);
    m += w * f.values[i];
    mq += w * f.values[i] * L.coordinate(i, 0);
  }
  EXPECT_NEAR(mq / m, 3.0, g.q_axes()[0].h);
  EXPECT_NEAR(run.log.back().plain_mass, run.log.front().plain_mass, 1e-6);
}

TEST(LinearEvolve, ErrorsAreReported) {
  const PhaseGrid g(Grid1D::spanning(0, 8, 100), Grid1D(0.5, 0.5, 3));
  KineticScenario sc;
  sc.perturbation = [](std::span<const double> x) { return gauss(x[0], 4.0, 0.5); };
  sc.transport = {1.0};
  EXPECT_THROW(linear_evolve(sc, g, 0.01, 1, LinearSolver::riesz_spectral), GridError);
  EXPECT_THROW(linear_evolve(sc, g, 1.0, 1, LinearSolver::caputo_grid), StabilityError);
  EXPECT_THROW(linear_evolve(sc, g, -1.0, 1, LinearSolver::caputo_grid), DomainError);
  KineticScenario empty;
  EXPECT_THROW(linear_evolve(empty, g, 0.01, 1, LinearSolver::caputo_grid), DomainError);
}

namespace {

double centroid_q(const PhaseField& f) {
  const auto& L = f.grid.layout();
  double m = 0.0, mq = 0.0;
  for (std::size_t i = 0; i < L.size(); ++i) {
    m += f.values[i];
    mq += f.values[i] * L.coordinate(i, 0);
  }
  return mq / m;
}

} // namespace

// With one particle the mean field drops out and the run is plain Liouville.
TEST(VlasovEvolve, SingleParticleIsLiouville) {
  const PhaseGrid g(Grid1D::spanning(-5, 5, 33), Grid1D::spanning(-5, 5, 33));
  const auto rho0 = gaussian_density(g, 1.0, 0.0, 0.6, 0.6);
  const auto K = PairForceKernel::linear_coupling(0.5, 1.0);
  const auto v = vlasov_evolve(rho0, K, one, 1, 0.02, 10, 5);
  const auto H = HamiltonianSpec::from_fields(
      {PhaseField::sample(g, [](std::span<const double> x) { return x[1]; })},
      {PhaseField::sample(g, [](std::span<const double> x) { return -x[0]; })});
  const auto l = liouville_evolve(rho0, H, one, 0.02, 10);
  EXPECT_LE(max_diff(v.rho.values, l.rho.values()), 1e-13);
  ASSERT_EQ(v.log.size(), 3u);
  EXPECT_NEAR(v.log.back().time, 0.2, 1e-12);
}

// Linear coupling cancels in the mean: the centroid oscillates as q0 cos t.
TEST(VlasovEvolve, CentroidFollowsTheTrap) {
  const PhaseGrid g(Grid1D::spanning(-5, 5, 33), Grid1D::spanning(-5, 5, 33));
  const auto rho0 = gaussian_density(g, 1.0, 0.0, 0.7, 0.7);
  const auto run = vlasov_evolve(rho0, PairForceKernel::linear_coupling(0.3, 1.0), one, 4, 0.01, 100);
  EXPECT_NEAR(centroid_q(run.rho), std::cos(1.0), 2e-3);
  // Only the Gaussian tails reach the absorbing faces.
  EXPECT_NEAR(run.log.back().plain_mass, 1.0, 1e-5);
}

TEST(VlasovEvolve, EnforcesTheBound) {
  const PhaseGrid g(Grid1D::spanning(-5, 5, 21), Grid1D::spanning(-5, 5, 21));
  const auto rho0 = gaussian_density(g, 0.0, 0.0, 0.8, 0.8);
  EXPECT_THROW(vlasov_evolve(rho0, PairForceKernel::zero(), one, 2, 1.0, 1), StabilityError);
}

// One caputo-grid step with B equals RK4 on kinetic_rhs plus q-face absorption.
TEST(LinearEvolve, MagneticTermEntersTheGridSolver) {
  const Grid1D q = Grid1D::spanning(0.5, 1.5, 3), p = Grid1D(0.25, 0.25, 4);
  const PhaseGrid g(std::vector<Grid1D>(3, q), std::vector<Grid1D>(3, p));
  KineticScenario sc;
  sc.magnetic = {0.0, 0.0, 2.0};
  sc.perturbation = [](std::span<const double> x) {
    return gauss(x[3], 0.6, 0.3) * gauss(x[4], 0.5, 0.3) * gauss(x[5], 0.4, 0.3);
  };
  const double dt = 0.01;
  const auto run = linear_evolve(sc, g, dt, 1, LinearSolver::caputo_grid);
  std::vector<double> y = PhaseField::sample(g, sc.perturbation).values;
  rk4_step(y, dt, [&](const std::vector<double>& s) { return kinetic_rhs(PhaseField(g, s), sc, one).values; });
  const auto& L = g.layout();
  for (std::size_t i = 0; i < L.size(); ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      const std::size_t k = L.index_along(i, a);
      if (k == 0 || k + 1 == q.count) y[i] = 0.0;
    }
  }
  EXPECT_LE(max_diff(run.snapshots.back().field.values, y), 1e-14);
  KineticScenario off = sc;
  off.magnetic = {0.0, 0.0, 0.0};
  EXPECT_GT(max_diff(linear_evolve(off, g, dt, 1, LinearSolver::caputo_grid).snapshots.back().field.values, y),
            1e-6);
  EXPECT_THROW(linear_evolve(sc, g, dt, 1, LinearSolver::riesz_spectral), DomainError);
  sc.magnetic = {0.0, 0.0, 1e4};
  EXPECT_THROW(linear_evolve(sc, g, dt, 1, LinearSolver::caputo_grid), StabilityError);
}
