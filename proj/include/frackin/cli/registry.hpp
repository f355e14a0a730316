#ifndef FRACKIN_CLI_REGISTRY_HPP
#define FRACKIN_CLI_REGISTRY_HPP

// Named analytic field and force rules. Configs refer to these by name;
// adding a rule means adding an entry here plus its builder branch.

#include <algorithm>
#include <array>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "frackin/bogoliubov.hpp"
#include "frackin/error.hpp"
#include "frackin/phase.hpp"

namespace frackin::cli {

/// Where a rule may be plugged in.
enum class Role { hamiltonian, pair, external, electric, magnetic };

inline std::string_view role_name(Role r) {
  switch (r) {
  case Role::hamiltonian: return "hamiltonian";
  case Role::pair: return "pair force";
  case Role::external: return "external force";
  case Role::electric: return "electric field";
  case Role::magnetic: return "magnetic field";
  }
  return "?";
}

struct Rule {
  std::string_view name;
  std::vector<Role> roles;
  std::string_view summary;

  bool serves(Role r) const { return std::find(roles.begin(), roles.end(), r) != roles.end(); }
};

inline const std::vector<Rule>& rules() {
  static const std::vector<Rule> all{
      {"harmonic",
       {Role::hamiltonian, Role::external},
       "H = p^2/2 + omega^2 q^2/2; external force -omega^2 q"},
      {"linear-coupling", {Role::pair}, "pair force kappa (q2 - q1) on particle 1"},
      {"constant-E",
       {Role::hamiltonian, Role::external, Role::electric},
       "uniform field E: H = p^2/2 - E q, force E"},
      {"uniform-B", {Role::magnetic}, "constant magnetic vector B"},
      {"zero",
       {Role::hamiltonian, Role::pair, Role::external, Role::electric, Role::magnetic},
       "no field"},
  };
  return all;
}

inline const Rule* find_rule(std::string_view name) {
  for (const auto& r : rules()) {
    if (r.name == name) {
      return &r;
    }
  }
  return nullptr;
}

inline std::string rule_names(Role role) {
  std::string out;
  for (const auto& r : rules()) {
    if (r.serves(role)) {
      out += out.empty() ? "" : ", ";
      out += r.name;
    }
  }
  return out;
}

struct RuleParams {
  double omega = 1.0;
  double E = 1.0;
  double kappa = 0.0;
};

/// Single-particle Liouville fields. `bracket` keeps H analytic; otherwise
/// V = p and F = -dH/dq are sampled for the continuity form.
inline HamiltonianSpec hamiltonian_rule(std::string_view name, const RuleParams& prm,
                                        bool bracket, const PhaseGrid& g) {
  std::function<double(double, double)> H, F;
  if (name == "harmonic") {
    const double w2 = prm.omega * prm.omega;
    H = [w2](double q, double p) { return 0.5 * p * p + 0.5 * w2 * q * q; };
    F = [w2](double q, double) { return -w2 * q; };
  } else if (name == "constant-E") {
    const double E = prm.E;
    H = [E](double q, double p) { return 0.5 * p * p - E * q; };
    F = [E](double, double) { return E; };
  } else if (name == "zero") {
    H = [](double, double) { return 0.0; };
    F = [](double, double) { return 0.0; };
  } else {
    throw Error("rule '" + std::string(name) + "' is not a hamiltonian");
  }
  if (g.dof() != 1) {
    throw GridError("registry hamiltonians act on one (q, p) pair");
  }
  if (bracket) {
    if (name == "zero") {
      return HamiltonianSpec::from_fields({PhaseField::constant(g, 0.0)},
                                          {PhaseField::constant(g, 0.0)});
    }
    return HamiltonianSpec::analytic([H](std::span<const double> x) { return H(x[0], x[1]); });
  }
  auto v = PhaseField::sample(g, [&](std::span<const double> x) {
    return name == "zero" ? 0.0 : x[1];
  });
  auto f = PhaseField::sample(g, [&](std::span<const double> x) { return F(x[0], x[1]); });
  return HamiltonianSpec::from_fields({std::move(v)}, {std::move(f)});
}

/// Pair plus external force kernel for the N-body and Vlasov runs.
inline PairForceKernel kernel_rule(std::string_view pair, std::string_view external,
                                   const RuleParams& prm) {
  PairForceKernel K = PairForceKernel::zero();
  if (pair == "linear-coupling") {
    const double k = prm.kappa;
    K.pair = [k](double q1, double, double q2, double) { return k * (q2 - q1); };
  } else if (pair != "zero") {
    throw Error("rule '" + std::string(pair) + "' is not a pair force");
  }
  if (external == "harmonic") {
    const double w2 = prm.omega * prm.omega;
    K.external = [w2](double q, double, double) { return -w2 * q; };
  } else if (external == "constant-E") {
    const double E = prm.E;
    K.external = [E](double, double, double) { return E; };
  } else if (external != "zero") {
    throw Error("rule '" + std::string(external) + "' is not an external force");
  }
  return K;
}

/// Electric field components, one per q axis; empty for "zero".
inline std::vector<std::function<double(std::span<const double>)>>
electric_rule(std::string_view name, double E, std::size_t dof) {
  if (name == "zero") {
    return {};
  }
  if (name != "constant-E") {
    throw Error("rule '" + std::string(name) + "' is not an electric field");
  }
  std::vector<std::function<double(std::span<const double>)>> out;
  for (std::size_t s = 0; s < dof; ++s) {
    out.emplace_back([E, s](std::span<const double>) { return s == 0 ? E : 0.0; });
  }
  return out;
}

inline std::array<double, 3> magnetic_rule(std::string_view name, std::span<const double> B) {
  if (name == "zero") {
    return {0.0, 0.0, 0.0};
  }
  if (name != "uniform-B" || B.size() != 3) {
    throw Error("rule '" + std::string(name) + "' is not a magnetic field");
  }
  return {B[0], B[1], B[2]};
}

} // namespace frackin::cli

#endif // FRACKIN_CLI_REGISTRY_HPP
