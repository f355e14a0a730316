#ifndef FRACKIN_CLI_RUNNER_HPP
#define FRACKIN_CLI_RUNNER_HPP

// Dispatch from a validated Scenario to the numerics, producing tables and a
// metric summary. Nothing here touches the file system except write_outputs.

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"

#include "frackin/bogoliubov.hpp"
#include "frackin/cli/config.hpp"
#include "frackin/cli/registry.hpp"
#include "frackin/cli/table.hpp"
#include "frackin/frac_core.hpp"
#include "frackin/kinetic.hpp"
#include "frackin/levy.hpp"
#include "frackin/phase.hpp"

namespace frackin::cli {

struct Output {
  std::string suffix; // appended to the scenario name; "" for the main table
  Table table;
};

struct RunResult {
  std::vector<Output> outputs;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  /// Tolerance checks from the scenario that did not hold.
  std::vector<std::string> failures;
};

namespace detail {

// Six significant digits: enough for a message.
inline std::string brief(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline Grid1D axis_grid(const Scenario& s, const std::string& axis) {
  const std::string k = "grid." + axis;
  return Grid1D(s.real(k + ".lower"), s.real(k + ".h"), static_cast<std::size_t>(s.integer(k + ".n")));
}

inline double gauss(double x, double c, double sigma) {
  const double z = (x - c) / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

/// One row per record; metric columns are the union of the records' keys in
/// order of first appearance, with missing cells left empty.
inline Table diagnostics_table(const DiagnosticsLog& log) {
  std::vector<std::string> cols{"time", "plain_mass", "fractional_mass", "min_value", "l2_norm"};
  const std::size_t fixed = cols.size();
  for (const auto& r : log.records()) {
    for (const auto& [k, v] : r.metrics) {
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) {
        cols.push_back(k);
      }
    }
  }
  Table t(cols);
  for (const auto& r : log.records()) {
    std::vector<double> row{r.time, r.plain_mass, r.fractional_mass, r.min_value, r.l2_norm};
    for (std::size_t c = fixed; c < cols.size(); ++c) {
      double v = missing;
      for (const auto& [k, x] : r.metrics) {
        if (k == cols[c]) v = x;
      }
      row.push_back(v);
    }
    t.add(std::move(row));
  }
  return t;
}

inline void summarize_log(const DiagnosticsLog& log, nlohmann::ordered_json& j) {
  const auto& first = log.front();
  double pd = 0.0, fd = 0.0, mn = first.min_value;
  for (const auto& r : log.records()) {
    pd = std::max(pd, std::abs(r.plain_mass - first.plain_mass));
    fd = std::max(fd, std::abs(r.fractional_mass - first.fractional_mass));
    mn = std::min(mn, r.min_value);
  }
  j["final_time"] = log.back().time;
  j["plain_mass_drift"] = pd;
  j["fractional_mass_drift"] = fd;
  j["min_value"] = mn;
  j["final_l2_norm"] = log.back().l2_norm;
  for (const auto& [k, v] : log.back().metrics) {
    j["final_" + k] = v;
  }
}

inline Table field_table(const PhaseField& f) {
  const auto& g = f.grid;
  std::vector<std::string> cols;
  for (std::size_t s = 0; s < g.dof(); ++s) cols.push_back(g.dof() == 1 ? "q" : "q" + std::to_string(s + 1));
  for (std::size_t s = 0; s < g.dof(); ++s) cols.push_back(g.dof() == 1 ? "p" : "p" + std::to_string(s + 1));
  cols.push_back("value");
  Table t(cols);
  const auto& L = g.layout();
  std::vector<double> x(L.rank());
  for (std::size_t i = 0; i < L.size(); ++i) {
    L.coordinates(i, x);
    std::vector<double> row(x);
    row.push_back(f.values[i]);
    t.add(std::move(row));
  }
  return t;
}

inline void check_drift(const Scenario& s, RunResult& r) {
  const double tol = s.real("tolerances.mass_drift");
  const double drift = r.summary["plain_mass_drift"].get<double>();
  if (tol > 0.0 && drift > tol) {
    r.failures.push_back("plain mass drift " + brief(drift) + " exceeds tolerances.mass_drift " +
                         brief(tol));
  }
}

inline RunResult run_levy(const Scenario& s) {
  const double a = s.alpha();
  const double lo = s.real("levy.x_min"), hi = s.real("levy.x_max"), step = s.real("levy.step");
  const bool series = s.flag("levy.series");
  const auto tail = static_cast<std::size_t>(s.integer("levy.tail_terms"));
  std::vector<std::string> cols{"x", "density"};
  if (series) cols.push_back("series");
  if (tail > 0) {
    cols.push_back("tail_asymptotic");
    cols.push_back("tail_standard");
  }
  Table t(cols);
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  double peak = 0.0, gap = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    const double d = levy_density_integral(a, x);
    std::vector<double> row{x, d};
    if (series) {
      const double sv = levy_density_series(a, x);
      gap = std::max(gap, std::abs(sv - d));
      row.push_back(sv);
    }
    if (tail > 0) {
      row.push_back(levy_tail_asymptotic(a, x, tail));
      row.push_back(levy_tail_standard(a, x, tail));
    }
    peak = std::max(peak, d);
    mass += (i == 0 || i + 1 == n ? 0.5 : 1.0) * step * d;
    t.add(std::move(row));
  }
  RunResult r;
  r.summary["rows"] = n;
  r.summary["max_density"] = peak;
  r.summary["trapezoid_mass"] = mass;
  if (series) r.summary["max_series_gap"] = gap;
  r.outputs.push_back({"", std::move(t)});
  return r;
}

inline RunResult run_liouville(const Scenario& s) {
  const FractionalOrder order(s.alpha());
  const PhaseGrid g(axis_grid(s, "q"), axis_grid(s, "p"));
  RuleParams prm;
  prm.omega = s.real("hamiltonian.omega");
  prm.E = s.real("hamiltonian.E");
  const auto H = hamiltonian_rule(s.text("hamiltonian.rule"), prm, s.text("hamiltonian.form") == "bracket", g);
  const double q0 = s.real("initial.q0"), p0 = s.real("initial.p0");
  const double sq = s.real("initial.sigma_q"), sp = s.real("initial.sigma_p");
  const auto rho0 = PhaseDensity::normalized(
      PhaseField::sample(g, [&](std::span<const double> x) { return gauss(x[0], q0, sq) * gauss(x[1], p0, sp); }),
      Weighting::plain());
  const double dt = s.real("time.dt");
  const auto steps = static_cast<std::size_t>(s.integer("time.steps"));
  const auto stride = static_cast<std::size_t>(s.integer("time.stride"));
  const auto run = liouville_evolve(rho0, H, order, dt, steps);
  DiagnosticsLog kept;
  for (std::size_t i = 0; i < run.log.size(); ++i) {
    if (i % stride == 0 || i + 1 == run.log.size()) kept.push(run.log.records()[i]);
  }
  RunResult r;
  r.summary["steps"] = steps;
  r.summary["dt"] = dt;
  r.summary["stable_dt"] = stable_time_step(g, H, order);
  summarize_log(run.log, r.summary);
  r.outputs.push_back({"", diagnostics_table(kept)});
  if (s.flag("output.field")) r.outputs.push_back({"_field", field_table(run.rho.field())});
  check_drift(s, r);
  return r;
}

inline PairForceKernel scenario_kernel(const Scenario& s) {
  RuleParams prm;
  prm.kappa = s.real("kernel.kappa");
  prm.omega = s.real("kernel.omega");
  prm.E = s.real("kernel.E");
  return kernel_rule(s.text("kernel.pair"), s.text("kernel.external"), prm);
}

inline RunResult run_bogoliubov(const Scenario& s) {
  const FractionalOrder order(s.alpha());
  const auto n = static_cast<std::size_t>(s.integer("particles"));
  const Grid1D q = axis_grid(s, "q"), p = axis_grid(s, "p");
  const auto rho0 = NBodyDensity::sample(
      n, q, p,
      correlated_gaussian(s.real("initial.q0"), s.real("initial.p0"), s.real("initial.sigma"),
                          s.real("initial.correlation")));
  const double gate = s.real("tolerances.gate");
  const auto run = bogoliubov_residual_run(rho0, scenario_kernel(s), unit_mass_velocity(), order,
                                           s.real("time.dt"),
                                           static_cast<std::size_t>(s.integer("time.warmup")), gate);
  Table t({"particles", "nodes", "dt", "time", "mass", "residual"});
  t.add({static_cast<double>(n), static_cast<double>(run.nodes), run.dt, run.time, run.mass, run.residual});
  RunResult r;
  r.summary["residual"] = run.residual;
  r.summary["dt"] = run.dt;
  r.summary["time"] = run.time;
  r.summary["nodes"] = run.nodes;
  r.outputs.push_back({"", std::move(t)});
  if (s.flag("output.field")) {
    // Config labels are 1-based; the library counts particles from 0.
    std::vector<std::size_t> keep;
    for (long long k : s.integers("reduce.keep")) keep.push_back(static_cast<std::size_t>(k - 1));
    const auto m = reduce(rho0, keep);
    std::vector<std::string> cols;
    for (std::size_t k : keep) {
      cols.push_back("q" + std::to_string(k + 1));
      cols.push_back("p" + std::to_string(k + 1));
    }
    cols.push_back("value");
    Table f(cols);
    const auto& L = m.layout();
    std::vector<double> x(L.rank());
    for (std::size_t i = 0; i < L.size(); ++i) {
      L.coordinates(i, x);
      std::vector<double> row(x);
      row.push_back(m.values()[i]);
      f.add(std::move(row));
    }
    r.outputs.push_back({"_marginal", std::move(f)});
  }
  const double tol = s.real("tolerances.residual");
  if (tol > 0.0 && run.residual > tol) {
    r.failures.push_back("residual " + brief(run.residual) + " exceeds tolerances.residual " +
                         brief(tol));
  }
  return r;
}

inline RunResult run_vlasov(const Scenario& s) {
  const FractionalOrder order(s.alpha());
  const PhaseGrid g(axis_grid(s, "q"), axis_grid(s, "p"));
  const double q0 = s.real("initial.q0"), p0 = s.real("initial.p0");
  const double sq = s.real("initial.sigma_q"), sp = s.real("initial.sigma_p");
  const auto rho0 = PhaseDensity::normalized(
      PhaseField::sample(g, [&](std::span<const double> x) { return gauss(x[0], q0, sq) * gauss(x[1], p0, sp); }),
      Weighting::plain());
  const double dt = s.real("time.dt");
  const auto steps = static_cast<std::size_t>(s.integer("time.steps"));
  const auto run = vlasov_evolve(rho0, scenario_kernel(s), order, static_cast<std::size_t>(s.integer("particles")),
                                 dt, steps, static_cast<std::size_t>(s.integer("time.stride")));
  RunResult r;
  r.summary["steps"] = steps;
  r.summary["dt"] = dt;
  summarize_log(run.log, r.summary);
  r.outputs.push_back({"", diagnostics_table(run.log)});
  if (s.flag("output.field")) r.outputs.push_back({"_field", field_table(run.rho)});
  check_drift(s, r);
  return r;
}

inline RunResult run_kinetic(const Scenario& s) {
  const auto pairs = static_cast<std::size_t>(s.integer("grid.pairs"));
  const Grid1D q = axis_grid(s, "q"), p = axis_grid(s, "p");
  const PhaseGrid g(std::vector<Grid1D>(pairs, q), std::vector<Grid1D>(pairs, p));
  KineticScenario sc;
  sc.order = FractionalOrder(s.alpha());
  sc.mass = s.real("physics.mass");
  sc.charge = s.real("physics.charge");
  sc.light_speed = s.real("physics.light_speed");
  sc.transport.assign(pairs, s.real("physics.transport"));
  sc.electric = electric_rule(s.text("field.electric"), s.real("field.E"), pairs);
  sc.magnetic = magnetic_rule(s.text("field.magnetic"), s.reals("field.B"));
  if (s.text("background.shape") == "maxwellian") {
    const double n0 = s.real("background.density"), c = s.real("background.p0"), w = s.real("background.sigma");
    sc.background = [=](std::span<const double> pv) {
      double v = n0;
      for (double x : pv) v *= gauss(x, c, w);
      return v;
    };
  }
  const double q0 = s.real("initial.q0"), p0 = s.real("initial.p0");
  const double sq = s.real("initial.sigma_q"), sp = s.real("initial.sigma_p");
  const bool point = s.text("initial.shape") == "point";
  if (point) sc.point_source = q0;
  if (!point || sp > 0.0) {
    sc.perturbation = [=](std::span<const double> x) {
      double v = 1.0;
      for (std::size_t k = 0; k < pairs; ++k) {
        if (!point) v *= gauss(x[k], q0, sq);
        if (sp > 0.0) v *= gauss(x[pairs + k], p0, sp);
      }
      return v;
    };
  }
  const double dt = s.real("time.dt");
  const auto steps = static_cast<std::size_t>(s.integer("time.steps"));
  const auto solver = s.text("solver") == "riesz-spectral" ? LinearSolver::riesz_spectral : LinearSolver::caputo_grid;
  const auto run = linear_evolve(sc, g, dt, steps, solver, static_cast<std::size_t>(s.integer("time.stride")));
  RunResult r;
  r.summary["steps"] = steps;
  r.summary["dt"] = dt;
  summarize_log(run.log, r.summary);
  r.outputs.push_back({"", diagnostics_table(run.log)});
  if (s.flag("output.field")) r.outputs.push_back({"_field", field_table(run.snapshots.back().field)});
  const double tol = s.real("tolerances.analytic");
  if (tol > 0.0) {
    const auto& last = run.log.back().metrics;
    auto it = std::find_if(last.begin(), last.end(), [](const auto& kv) { return kv.first == "linf_vs_analytic"; });
    if (it == last.end()) {
      r.failures.push_back("tolerances.analytic is set but this run has no analytic comparison");
    } else if (it->second > tol) {
      r.failures.push_back("linf_vs_analytic " + brief(it->second) + " exceeds tolerances.analytic " +
                           brief(tol));
    }
  }
  return r;
}

inline RunResult run_convergence(const Scenario& s) {
  const FractionalOrder order(s.alpha());
  const double a = s.alpha(), beta = s.real("sweep.beta"), x = s.real("sweep.x");
  const std::string& op = s.text("sweep.operator");
  double exact = 0.0;
  if (op == "integral") {
    exact = gamma(beta + 1.0) / gamma(beta + 1.0 + a) * std::pow(x, beta + a);
  } else {
    exact = gamma(beta + 1.0) / gamma(beta + 1.0 - a) * std::pow(x, beta - a);
  }
  Table t({"n", "h", "value", "exact", "error", "ratio", "order"});
  double min_order = INFINITY, min_ratio = INFINITY, prev_err = 0.0, prev_h = 0.0;
  const auto& ns = s.integers("sweep.n");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const Grid1D g(0.0, x / static_cast<double>(ns[i]), static_cast<std::size_t>(ns[i]) + 1);
    const auto f = SampledField::sample(g, [beta](double z) { return std::pow(z, beta); });
    double v = 0.0;
    if (op == "caputo") {
      v = caputo_deriv(f, order).values.back();
    } else if (op == "riemann-liouville") {
      v = riemann_liouville_deriv(f, order).values.back();
    } else {
      v = fractional_integral(f, order).values.back();
    }
    const double err = std::abs(v - exact);
    double ratio = missing, ord = missing;
    if (i > 0) {
      ratio = prev_err / err;
      ord = std::log(ratio) / std::log(prev_h / g.h);
      min_ratio = std::min(min_ratio, ratio);
      min_order = std::min(min_order, ord);
    }
    t.add({static_cast<double>(ns[i]), g.h, v, exact, err, ratio, ord});
    prev_err = err;
    prev_h = g.h;
  }
  RunResult r;
  r.summary["final_error"] = prev_err;
  r.summary["min_ratio"] = min_ratio;
  r.summary["min_order"] = min_order;
  r.outputs.push_back({"", std::move(t)});
  const double tol = s.real("tolerances.min_order");
  if (tol > 0.0 && !(min_order >= tol)) {
    r.failures.push_back("observed order " + brief(min_order) + " is below tolerances.min_order " +
                         brief(tol));
  }
  return r;
}

} // namespace detail

/// Runs the scenario in-process. Library errors propagate unchanged.
inline RunResult execute(const Scenario& s) {
  const std::string& k = s.kind();
  if (k == "levy-table") return detail::run_levy(s);
  if (k == "liouville") return detail::run_liouville(s);
  if (k == "bogoliubov-residual") return detail::run_bogoliubov(s);
  if (k == "vlasov") return detail::run_vlasov(s);
  if (k == "kinetic-linear") return detail::run_kinetic(s);
  if (k == "convergence-sweep") return detail::run_convergence(s);
  throw Error("no runner for scenario kind '" + k + "'");
}

/// Writes `<name><suffix>.csv` plus a JSON sidecar for every output table.
/// Returns the paths written.
inline std::vector<std::filesystem::path> write_outputs(const Scenario& s, const RunResult& r,
                                                        const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  nlohmann::ordered_json summary = r.summary;
  summary["failures"] = r.failures;
  const auto echo = s.echo();
  for (const auto& o : r.outputs) {
    const auto path = out_dir / (s.name() + o.suffix + ".csv");
    emit_table(o.table, path, echo, summary);
    written.push_back(path);
    written.push_back(std::filesystem::path(path).replace_extension(".json"));
  }
  return written;
}

} // namespace frackin::cli

#endif // FRACKIN_CLI_RUNNER_HPP
