#ifndef FRACKIN_CLI_CONFIG_HPP
#define FRACKIN_CLI_CONFIG_HPP

// Scenario documents: a YAML tree of flat sections with typed scalars. Every
// kind has a fixed schema; keys outside it, type mismatches and out-of-range
// values abort before any computation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"

#include "frackin/cli/registry.hpp"
#include "frackin/error.hpp"

namespace frackin::cli {

/// Bad config: syntax, schema or value. Carries the offending key and, when
/// known, the 1-based source position.
class ConfigError : public Error {
public:
  ConfigError(const std::string& key, const std::string& what, int line = 0, int column = 0)
      : Error(format(key, what, line, column)), key_(key), line_(line), column_(column) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  static std::string format(const std::string& key, const std::string& what, int line,
                            int column) {
    std::string s;
    if (line > 0) {
      s = "line " + std::to_string(line) + ", column " + std::to_string(column) + ": ";
    }
    if (!key.empty()) {
      s += "'" + key + "': ";
    }
    return s + what;
  }

  std::string key_;
  int line_, column_;
};

enum class Type { real, integer, text, boolean, real_list, int_list, rule };

using Value = std::variant<double, long long, std::string, bool, std::vector<double>,
                           std::vector<long long>>;

/// One schema entry. A missing `fallback` makes the key required. `check`
/// returns an empty string when the value is acceptable.
struct KeySpec {
  std::string path;
  Type type;
  std::optional<Value> fallback;
  std::vector<std::string> choices = {};
  Role role = Role::hamiltonian;
  std::function<std::string(const Value&)> check = {};
};

inline const std::vector<std::string>& scenario_kinds() {
  static const std::vector<std::string> k{"levy-table",     "liouville",       "bogoliubov-residual",
                                          "vlasov",         "kinetic-linear", "convergence-sweep"};
  return k;
}

namespace detail {

using Check = std::function<std::string(const Value&)>;

inline Check positive() {
  return [](const Value& v) {
    const double x = std::holds_alternative<double>(v) ? std::get<double>(v)
                                                       : static_cast<double>(std::get<long long>(v));
    return x > 0.0 ? std::string() : "must be positive";
  };
}

inline Check non_negative() {
  return [](const Value& v) {
    const double x = std::holds_alternative<double>(v) ? std::get<double>(v)
                                                       : static_cast<double>(std::get<long long>(v));
    return x >= 0.0 ? std::string() : "must not be negative";
  };
}

inline Check at_least(long long lo) {
  return [lo](const Value& v) {
    return std::get<long long>(v) >= lo ? std::string()
                                        : "must be at least " + std::to_string(lo);
  };
}

inline Check one_of(std::vector<long long> allowed) {
  return [allowed](const Value& v) {
    const long long x = std::get<long long>(v);
    if (std::find(allowed.begin(), allowed.end(), x) != allowed.end()) {
      return std::string();
    }
    std::string s = "must be one of";
    for (long long a : allowed) {
      s += " " + std::to_string(a);
    }
    return s;
  };
}

inline Check unit_interval_open_right() {
  return [](const Value& v) {
    const double x = std::get<double>(v);
    return x >= 0.0 && x < 1.0 ? std::string() : "must lie in [0, 1)";
  };
}

inline void grid_keys(std::vector<KeySpec>& s, const std::string& axis) {
  s.push_back({"grid." + axis + ".lower", Type::real, std::nullopt});
  s.push_back({"grid." + axis + ".h", Type::real, std::nullopt, {}, Role::hamiltonian, positive()});
  s.push_back({"grid." + axis + ".n", Type::integer, std::nullopt, {}, Role::hamiltonian, at_least(3)});
}

inline void stepping_keys(std::vector<KeySpec>& s, bool auto_dt) {
  if (auto_dt) {
    // 0 selects 0.8 of the stable step.
    s.push_back({"time.dt", Type::real, Value(0.0), {}, Role::hamiltonian, non_negative()});
  } else {
    s.push_back({"time.dt", Type::real, std::nullopt, {}, Role::hamiltonian, positive()});
    s.push_back({"time.steps", Type::integer, std::nullopt, {}, Role::hamiltonian, at_least(1)});
    s.push_back({"time.stride", Type::integer, Value(1LL), {}, Role::hamiltonian, at_least(1)});
  }
}

inline void kernel_keys(std::vector<KeySpec>& s) {
  s.push_back({"kernel.pair", Type::rule, Value(std::string("linear-coupling")), {}, Role::pair});
  s.push_back({"kernel.kappa", Type::real, Value(0.1)});
  s.push_back({"kernel.external", Type::rule, Value(std::string("zero")), {}, Role::external});
  s.push_back({"kernel.omega", Type::real, Value(1.0), {}, Role::hamiltonian, positive()});
  s.push_back({"kernel.E", Type::real, Value(1.0)});
}

inline std::vector<KeySpec> build_schema(const std::string& kind) {
  std::vector<KeySpec> s;
  s.push_back({"kind", Type::text, std::nullopt, scenario_kinds()});
  s.push_back({"name", Type::text, Value(std::string())});
  s.push_back({"alpha", Type::real, Value(1.0), {}, Role::hamiltonian, [](const Value& v) {
                 const double a = std::get<double>(v);
                 return a > 0.0 && a <= 2.0 ? std::string() : "must lie in (0, 2], got " + std::to_string(a);
               }});
  if (kind == "levy-table") {
    s.push_back({"levy.x_min", Type::real, std::nullopt});
    s.push_back({"levy.x_max", Type::real, std::nullopt});
    s.push_back({"levy.step", Type::real, Value(0.1), {}, Role::hamiltonian, positive()});
    s.push_back({"levy.series", Type::boolean, Value(false)});
    s.push_back({"levy.tail_terms", Type::integer, Value(0LL), {}, Role::hamiltonian, at_least(0)});
  } else if (kind == "liouville") {
    grid_keys(s, "q");
    grid_keys(s, "p");
    s.push_back({"hamiltonian.rule", Type::rule, std::nullopt, {}, Role::hamiltonian});
    s.push_back({"hamiltonian.form", Type::text, Value(std::string("bracket")), {"bracket", "continuity"}});
    s.push_back({"hamiltonian.omega", Type::real, Value(1.0), {}, Role::hamiltonian, positive()});
    s.push_back({"hamiltonian.E", Type::real, Value(1.0)});
    s.push_back({"initial.q0", Type::real, Value(0.0)});
    s.push_back({"initial.p0", Type::real, Value(0.0)});
    s.push_back({"initial.sigma_q", Type::real, Value(0.5), {}, Role::hamiltonian, positive()});
    s.push_back({"initial.sigma_p", Type::real, Value(0.5), {}, Role::hamiltonian, positive()});
    stepping_keys(s, false);
    s.push_back({"tolerances.mass_drift", Type::real, Value(0.0), {}, Role::hamiltonian, non_negative()});
    s.push_back({"output.field", Type::boolean, Value(false)});
  } else if (kind == "bogoliubov-residual") {
    s.push_back({"particles", Type::integer, Value(2LL), {}, Role::hamiltonian, one_of({2, 3})});
    grid_keys(s, "q");
    grid_keys(s, "p");
    kernel_keys(s);
    s.push_back({"initial.q0", Type::real, Value(1.0)});
    s.push_back({"initial.p0", Type::real, Value(0.0)});
    s.push_back({"initial.sigma", Type::real, Value(0.8), {}, Role::hamiltonian, positive()});
    s.push_back({"initial.correlation", Type::real, Value(0.3), {}, Role::hamiltonian,
                 unit_interval_open_right()});
    stepping_keys(s, true);
    s.push_back({"time.warmup", Type::integer, Value(0LL), {}, Role::hamiltonian, at_least(0)});
    s.push_back({"reduce.keep", Type::int_list, Value(std::vector<long long>{1})});
    s.push_back({"tolerances.gate", Type::real, Value(1e-6), {}, Role::hamiltonian, positive()});
    s.push_back({"tolerances.residual", Type::real, Value(0.0), {}, Role::hamiltonian, non_negative()});
    s.push_back({"output.field", Type::boolean, Value(false)});
  } else if (kind == "vlasov") {
    s.push_back({"particles", Type::integer, Value(2LL), {}, Role::hamiltonian, at_least(1)});
    grid_keys(s, "q");
    grid_keys(s, "p");
    kernel_keys(s);
    s.push_back({"initial.q0", Type::real, Value(0.0)});
    s.push_back({"initial.p0", Type::real, Value(0.0)});
    s.push_back({"initial.sigma_q", Type::real, Value(0.5), {}, Role::hamiltonian, positive()});
    s.push_back({"initial.sigma_p", Type::real, Value(0.5), {}, Role::hamiltonian, positive()});
    stepping_keys(s, false);
    s.push_back({"tolerances.mass_drift", Type::real, Value(0.0), {}, Role::hamiltonian, non_negative()});
    s.push_back({"output.field", Type::boolean, Value(false)});
  } else if (kind == "kinetic-linear") {
    s.push_back({"solver", Type::text, Value(std::string("riesz-spectral")), {"caputo-grid", "riesz-spectral"}});
    s.push_back({"grid.pairs", Type::integer, Value(1LL), {}, Role::hamiltonian, one_of({1, 3})});
    grid_keys(s, "q");
    grid_keys(s, "p");
    s.push_back({"physics.mass", Type::real, Value(1.0), {}, Role::hamiltonian, positive()});
    s.push_back({"physics.charge", Type::real, Value(1.0)});
    s.push_back({"physics.light_speed", Type::real, Value(1.0), {}, Role::hamiltonian, positive()});
    s.push_back({"physics.transport", Type::real, Value(1.0), {}, Role::hamiltonian, positive()});
    s.push_back({"field.electric", Type::rule, Value(std::string("zero")), {}, Role::electric});
    s.push_back({"field.E", Type::real, Value(1.0)});
    s.push_back({"field.magnetic", Type::rule, Value(std::string("zero")), {}, Role::magnetic});
    s.push_back({"field.B", Type::real_list, Value(std::vector<double>{0.0, 0.0, 1.0}), {}, Role::hamiltonian,
                 [](const Value& v) {
                   return std::get<std::vector<double>>(v).size() == 3 ? std::string() : "needs 3 components";
                 }});
    s.push_back({"background.shape", Type::text, Value(std::string("zero")), {"zero", "maxwellian"}});
    s.push_back({"background.density", Type::real, Value(1.0)});
    s.push_back({"background.p0", Type::real, Value(0.0)});
    s.push_back({"background.sigma", Type::real, Value(1.0), {}, Role::hamiltonian, positive()});
    s.push_back({"initial.shape", Type::text, Value(std::string("point")), {"point", "gaussian"}});
    s.push_back({"initial.q0", Type::real, Value(0.0)});
    s.push_back({"initial.sigma_q", Type::real, Value(1.0), {}, Role::hamiltonian, positive()});
    s.push_back({"initial.p0", Type::real, Value(0.0)});
    // 0 makes the momentum profile flat.
    s.push_back({"initial.sigma_p", Type::real, Value(0.0), {}, Role::hamiltonian, non_negative()});
    stepping_keys(s, false);
    s.push_back({"tolerances.analytic", Type::real, Value(0.0), {}, Role::hamiltonian, non_negative()});
    s.push_back({"output.field", Type::boolean, Value(false)});
  } else if (kind == "convergence-sweep") {
    s.push_back({"sweep.operator", Type::text, std::nullopt, {"caputo", "riemann-liouville", "integral"}});
    s.push_back({"sweep.beta", Type::real, Value(3.0), {}, Role::hamiltonian, non_negative()});
    s.push_back({"sweep.x", Type::real, Value(1.0), {}, Role::hamiltonian, positive()});
    s.push_back({"sweep.n", Type::int_list, std::nullopt});
    s.push_back({"tolerances.min_order", Type::real, Value(0.0), {}, Role::hamiltonian, non_negative()});
  }
  return s;
}

inline std::optional<double> parse_real(const std::string& t) {
  double x = 0.0;
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data() + (t.starts_with('+') ? 1 : 0), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x)) {
    return std::nullopt;
  }
  return x;
}

inline std::optional<long long> parse_integer(const std::string& t) {
  long long x = 0;
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data() + (t.starts_with('+') ? 1 : 0), end, x);
  if (ec != std::errc() || ptr != end) {
    return std::nullopt;
  }
  return x;
}

inline const char* type_name(Type t) {
  switch (t) {
  case Type::real: return "a real number";
  case Type::integer: return "an integer";
  case Type::text: return "a string";
  case Type::boolean: return "true or false";
  case Type::real_list: return "a list of real numbers";
  case Type::int_list: return "a list of integers";
  case Type::rule: return "a rule name";
  }
  return "?";
}

inline Value convert(const KeySpec& k, const YAML::Node& n) {
  const int line = n.Mark().line + 1, col = n.Mark().column + 1;
  auto bad = [&]() -> ConfigError {
    return ConfigError(k.path, std::string("expected ") + type_name(k.type), line, col);
  };
  const bool list = k.type == Type::real_list || k.type == Type::int_list;
  if (list != n.IsSequence() || (!list && !n.IsScalar())) {
    throw bad();
  }
  switch (k.type) {
  case Type::real: {
    if (auto x = parse_real(n.Scalar())) return *x;
    throw bad();
  }
  case Type::integer: {
    if (auto x = parse_integer(n.Scalar())) return *x;
    throw bad();
  }
  case Type::boolean:
    if (n.Scalar() == "true") return true;
    if (n.Scalar() == "false") return false;
    throw bad();
  case Type::text:
  case Type::rule:
    return n.Scalar();
  case Type::real_list: {
    std::vector<double> out;
    for (const auto& e : n) {
      auto x = e.IsScalar() ? parse_real(e.Scalar()) : std::nullopt;
      if (!x) throw bad();
      out.push_back(*x);
    }
    return out;
  }
  case Type::int_list: {
    std::vector<long long> out;
    for (const auto& e : n) {
      auto x = e.IsScalar() ? parse_integer(e.Scalar()) : std::nullopt;
      if (!x) throw bad();
      out.push_back(*x);
    }
    return out;
  }
  }
  throw bad();
}

} // namespace detail

/// A validated scenario: every schema key resolved, in schema order.
class Scenario {
public:
  const std::string& kind() const { return text("kind"); }
  const std::string& name() const { return text("name"); }
  double alpha() const { return real("alpha"); }

  bool has(std::string_view path) const { return find(path) != nullptr; }
  double real(std::string_view path) const { return get<double>(path); }
  long long integer(std::string_view path) const { return get<long long>(path); }
  const std::string& text(std::string_view path) const { return get<std::string>(path); }
  bool flag(std::string_view path) const { return get<bool>(path); }
  const std::vector<double>& reals(std::string_view path) const { return get<std::vector<double>>(path); }
  const std::vector<long long>& integers(std::string_view path) const {
    return get<std::vector<long long>>(path);
  }

  const std::vector<std::pair<std::string, Value>>& entries() const noexcept { return entries_; }

  void set(const std::string& path, Value v) {
    for (auto& [k, x] : entries_) {
      if (k == path) {
        x = std::move(v);
        return;
      }
    }
    entries_.emplace_back(path, std::move(v));
  }

  /// Resolved scenario as nested JSON, keys in schema order.
  nlohmann::ordered_json echo() const {
    nlohmann::ordered_json root = nlohmann::ordered_json::object();
    for (const auto& [path, v] : entries_) {
      nlohmann::ordered_json* node = &root;
      std::size_t start = 0;
      for (std::size_t dot = path.find('.'); dot != std::string::npos; dot = path.find('.', start)) {
        node = &(*node)[path.substr(start, dot - start)];
        start = dot + 1;
      }
      std::visit([&](const auto& x) { (*node)[path.substr(start)] = x; }, v);
    }
    return root;
  }

private:
  const Value* find(std::string_view path) const {
    for (const auto& [k, v] : entries_) {
      if (k == path) {
        return &v;
      }
    }
    return nullptr;
  }

  template <class T>
  const T& get(std::string_view path) const {
    const Value* v = find(path);
    if (v == nullptr || !std::holds_alternative<T>(*v)) {
      throw Error("scenario has no key '" + std::string(path) + "' of the requested type");
    }
    return std::get<T>(*v);
  }

  std::vector<std::pair<std::string, Value>> entries_;
};

namespace detail {

struct Walker {
  const std::vector<KeySpec>& schema;
  std::map<std::string, std::pair<Value, YAML::Mark>> found;

  const KeySpec* spec(const std::string& path) const {
    for (const auto& k : schema) {
      if (k.path == path) {
        return &k;
      }
    }
    return nullptr;
  }

  bool is_section(const std::string& path) const {
    const std::string prefix = path + ".";
    return std::any_of(schema.begin(), schema.end(),
                       [&](const KeySpec& k) { return k.path.starts_with(prefix); });
  }

  void walk(const YAML::Node& map, const std::string& prefix) {
    std::set<std::string> seen;
    for (const auto& kv : map) {
      const YAML::Mark m = kv.first.Mark();
      if (!kv.first.IsScalar()) {
        throw ConfigError(prefix, "keys must be plain strings", m.line + 1, m.column + 1);
      }
      const std::string path = prefix.empty() ? kv.first.Scalar() : prefix + "." + kv.first.Scalar();
      if (!seen.insert(kv.first.Scalar()).second) {
        throw ConfigError(path, "duplicate key", m.line + 1, m.column + 1);
      }
      if (is_section(path)) {
        if (!kv.second.IsMap()) {
          throw ConfigError(path, "expected a section of keys", m.line + 1, m.column + 1);
        }
        walk(kv.second, path);
        continue;
      }
      const KeySpec* k = spec(path);
      if (k == nullptr) {
        throw ConfigError(path, "unknown key", m.line + 1, m.column + 1);
      }
      if (kv.second.IsNull()) {
        throw ConfigError(path, "has no value", m.line + 1, m.column + 1);
      }
      found.emplace(path, std::make_pair(convert(*k, kv.second), kv.second.Mark()));
    }
  }
};

inline void require_rule(const KeySpec& k, const std::string& name, int line, int col) {
  const Rule* r = find_rule(name);
  if (r == nullptr) {
    std::string all;
    for (const auto& x : rules()) {
      all += all.empty() ? "" : ", ";
      all += x.name;
    }
    throw ConfigError(k.path, "unknown rule '" + name + "' (registry: " + all + ")", line, col);
  }
  if (!r->serves(k.role)) {
    throw ConfigError(k.path,
                      "rule '" + name + "' is not a " + std::string(role_name(k.role)) +
                          " (choose from: " + rule_names(k.role) + ")",
                      line, col);
  }
}

inline void check_grid_axis(const Scenario& s, const std::string& axis, bool fractional) {
  const std::string key = "grid." + axis;
  const double lower = s.real(key + ".lower");
  if (fractional && !(lower > 0.0)) {
    throw ConfigError(key + ".lower", "fractional orders need nodes on x > 0 (the terminal is 0)");
  }
}

// Constraints that tie several keys together.
inline void cross_validate(const Scenario& s) {
  const std::string& kind = s.kind();
  const double a = s.alpha();
  if (kind == "levy-table") {
    if (!(s.real("levy.x_max") > s.real("levy.x_min"))) {
      throw ConfigError("levy.x_max", "must exceed levy.x_min");
    }
    if ((s.real("levy.x_max") - s.real("levy.x_min")) / s.real("levy.step") > 1e6) {
      throw ConfigError("levy.step", "table would exceed 10^6 rows");
    }
    if (s.flag("levy.series") && !(a > 1.0)) {
      throw ConfigError("levy.series", "the power series needs alpha in (1, 2]");
    }
    if (s.integer("levy.tail_terms") > 0) {
      if (!(a > 1.0 && a < 2.0)) {
        throw ConfigError("levy.tail_terms", "tail expansions need alpha in (1, 2)");
      }
      if (s.real("levy.x_min") <= 0.0 && s.real("levy.x_max") >= 0.0) {
        throw ConfigError("levy.tail_terms", "tail expansions need a range that excludes 0");
      }
    }
  }
  if (kind == "liouville" || kind == "bogoliubov-residual" || kind == "vlasov") {
    if (a >= 2.0) {
      throw ConfigError("alpha", "phase-space runs need alpha < 2");
    }
    check_grid_axis(s, "q", a != 1.0);
    check_grid_axis(s, "p", a != 1.0);
  }
  if (kind == "bogoliubov-residual") {
    const long long n = s.integer("particles");
    std::set<long long> keep;
    for (long long k : s.integers("reduce.keep")) {
      if (k < 1 || k > n) {
        throw ConfigError("reduce.keep", "particle labels run from 1 to " + std::to_string(n));
      }
      if (!keep.insert(k).second) {
        throw ConfigError("reduce.keep", "repeated particle label " + std::to_string(k));
      }
    }
    if (keep.empty()) {
      throw ConfigError("reduce.keep", "needs at least one particle label");
    }
  }
  if (kind == "kinetic-linear") {
    const bool spectral = s.text("solver") == "riesz-spectral";
    if (!spectral) {
      if (a >= 2.0) {
        throw ConfigError("alpha", "the caputo-grid solver needs alpha < 2");
      }
      check_grid_axis(s, "q", a != 1.0);
      check_grid_axis(s, "p", a != 1.0);
    }
    if (s.text("field.magnetic") != "zero") {
      if (spectral) {
        throw ConfigError("field.magnetic", "the magnetic term needs the caputo-grid solver");
      }
      if (s.integer("grid.pairs") != 3) {
        throw ConfigError("field.magnetic", "a magnetic field needs grid.pairs = 3");
      }
    }
    if (spectral && s.integer("grid.pairs") != 1 && s.text("field.electric") != "zero") {
      throw ConfigError("field.electric", "riesz-spectral takes an electric field on one pair only");
    }
  }
  if (kind == "convergence-sweep") {
    const auto& n = s.integers("sweep.n");
    if (n.size() < 2) {
      throw ConfigError("sweep.n", "needs at least two resolutions");
    }
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (n[i] < 4) {
        throw ConfigError("sweep.n", "resolutions must be at least 4");
      }
      if (i > 0 && n[i] <= n[i - 1]) {
        throw ConfigError("sweep.n", "resolutions must increase");
      }
    }
    const std::string& op = s.text("sweep.operator");
    const double beta = s.real("sweep.beta");
    if (a >= 2.0 && op != "integral") {
      throw ConfigError("alpha", "derivative sweeps need alpha < 2");
    }
    if (op == "caputo" && !(beta > a)) {
      throw ConfigError("sweep.beta", "the Caputo closed form needs beta > alpha");
    }
    if (op == "riemann-liouville" && !(a < 1.0)) {
      throw ConfigError("alpha", "the Riemann-Liouville sweep needs alpha < 1");
    }
  }
}

} // namespace detail

/// Parses and validates one scenario document. `default_name` fills the
/// `name` key when the document leaves it out (typically the file stem).
inline Scenario parse_scenario(const std::string& text, const std::string& default_name = "scenario") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsMap()) {
    throw ConfigError("", "a scenario document must be a mapping of keys",
                      root.Mark().line + 1, root.Mark().column + 1);
  }
  const YAML::Node kind_node = root["kind"];
  if (!kind_node) {
    throw ConfigError("kind", "missing required key");
  }
  if (!kind_node.IsScalar()) {
    throw ConfigError("kind", "expected a string", kind_node.Mark().line + 1, kind_node.Mark().column + 1);
  }
  const std::string kind = kind_node.Scalar();
  const auto& kinds = scenario_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
    std::string all;
    for (const auto& k : kinds) {
      all += (all.empty() ? "" : ", ") + k;
    }
    throw ConfigError("kind", "unknown scenario kind '" + kind + "' (choose from: " + all + ")",
                      kind_node.Mark().line + 1, kind_node.Mark().column + 1);
  }

  const auto schema = detail::build_schema(kind);
  detail::Walker w{schema, {}};
  w.walk(root, "");

  Scenario s;
  for (const auto& k : schema) {
    auto it = w.found.find(k.path);
    Value v;
    int line = 0, col = 0;
    if (it != w.found.end()) {
      v = it->second.first;
      line = it->second.second.line + 1;
      col = it->second.second.column + 1;
    } else if (k.fallback) {
      v = *k.fallback;
    } else {
      throw ConfigError(k.path, "missing required key");
    }
    if (!k.choices.empty()) {
      const auto& t = std::get<std::string>(v);
      if (std::find(k.choices.begin(), k.choices.end(), t) == k.choices.end()) {
        std::string all;
        for (const auto& c : k.choices) {
          all += (all.empty() ? "" : ", ") + c;
        }
        throw ConfigError(k.path, "'" + t + "' is not one of: " + all, line, col);
      }
    }
    if (k.type == Type::rule) {
      detail::require_rule(k, std::get<std::string>(v), line, col);
    }
    if (k.check) {
      if (const std::string why = k.check(v); !why.empty()) {
        throw ConfigError(k.path, why, line, col);
      }
    }
    if (k.path == "name") {
      auto& t = std::get<std::string>(v);
      if (t.empty()) {
        t = default_name;
      }
      if (t.empty() || t.find_first_of("/\\") != std::string::npos || t == "." || t == "..") {
        throw ConfigError("name", "must be a plain file stem", line, col);
      }
    }
    s.set(k.path, std::move(v));
  }
  detail::cross_validate(s);
  return s;
}

} // namespace frackin::cli

#endif // FRACKIN_CLI_CONFIG_HPP
