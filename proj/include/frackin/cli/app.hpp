#ifndef FRACKIN_CLI_APP_HPP
#define FRACKIN_CLI_APP_HPP

// `frackin run|sweep|validate`. Exit status: 0 success, 1 runtime error,
// 2 bad config or usage, 3 a gate or tolerance check failed.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "frackin/cli/config.hpp"
#include "frackin/cli/runner.hpp"
#include "frackin/cli/table.hpp"

namespace frackin::cli {

enum ExitCode : int { exit_ok = 0, exit_runtime = 1, exit_config = 2, exit_gate = 3 };

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError("", e.what());
  }
  return parse_scenario(text, path.stem().string());
}

/// A sweep document lists scenario files (relative to itself):
///   scenarios: [a.yaml, b.yaml]
inline std::vector<std::filesystem::path> load_sweep(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::Load(read_file(path));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.msg, e.mark.line + 1, e.mark.column + 1);
  } catch (const IoError& e) {
    throw ConfigError("", e.what());
  }
  if (!root.IsMap()) {
    throw ConfigError("", "a sweep document must be a mapping with a 'scenarios' list");
  }
  for (const auto& kv : root) {
    if (kv.first.Scalar() != "scenarios") {
      throw ConfigError(kv.first.Scalar(), "unknown key", kv.first.Mark().line + 1, kv.first.Mark().column + 1);
    }
  }
  const YAML::Node list = root["scenarios"];
  if (!list || !list.IsSequence() || list.size() == 0) {
    throw ConfigError("scenarios", "expected a non-empty list of scenario files");
  }
  std::vector<std::filesystem::path> out;
  for (const auto& e : list) {
    if (!e.IsScalar()) {
      throw ConfigError("scenarios", "entries must be file paths", e.Mark().line + 1, e.Mark().column + 1);
    }
    out.push_back(path.parent_path() / e.Scalar());
  }
  return out;
}

struct Outcome {
  int code = exit_ok;
  std::string message;
  std::vector<std::filesystem::path> files;
};

/// Runs one scenario and writes its artifacts; never throws.
inline Outcome run_one(const Scenario& s, const std::filesystem::path& out_dir) {
  Outcome o;
  const std::string ctx = "scenario '" + s.name() + "' (" + s.kind() + "): ";
  try {
    const RunResult r = execute(s);
    o.files = write_outputs(s, r, out_dir);
    if (!r.failures.empty()) {
      o.code = exit_gate;
      for (const auto& f : r.failures) {
        o.message += ctx + f + "\n";
      }
    }
  } catch (const GateError& e) {
    o.code = exit_gate;
    o.message = ctx + "gate failed: " + e.what() + "\n";
  } catch (const ConfigError& e) {
    o.code = exit_config;
    o.message = ctx + e.what() + "\n";
  } catch (const std::exception& e) {
    o.code = exit_runtime;
    o.message = ctx + e.what() + "\n";
  }
  return o;
}

inline int run_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Fractional phase-space kinetics scenarios", "frackin"};
  app.require_subcommand(1);
  std::string out_dir = ".";
  unsigned threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--out-dir", out_dir, "directory for CSV and JSON artifacts");
  app.add_option("--threads", threads, "sweep workers (0: one per hardware thread)");
  app.add_option("--seed", seed, "reserved; every current scenario is deterministic");
  std::string config;
  auto* run = app.add_subcommand("run", "run one scenario");
  auto* sweep = app.add_subcommand("sweep", "run every scenario listed in a sweep document");
  auto* validate = app.add_subcommand("validate", "parse a scenario and print it with defaults filled");
  for (auto* sc : {run, sweep, validate}) {
    sc->add_option("config", config, "config file")->required();
    sc->fallthrough();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "frackin: " << e.what() << "\n";
    return exit_config;
  }

  try {
    if (validate->parsed()) {
      const Scenario s = load_scenario(config);
      out << json_text(s.echo());
      return exit_ok;
    }
    if (run->parsed()) {
      const Scenario s = load_scenario(config);
      const Outcome o = run_one(s, out_dir);
      for (const auto& f : o.files) out << f.string() << "\n";
      err << o.message;
      return o.code;
    }
    // Sweep: parse everything before computing anything.
    const auto paths = load_sweep(config);
    std::vector<Scenario> scenarios;
    std::set<std::string> names;
    for (const auto& p : paths) {
      try {
        scenarios.push_back(load_scenario(p));
      } catch (const ConfigError& e) {
        throw ConfigError(e.key(), p.string() + ": " + e.what());
      }
      if (!names.insert(scenarios.back().name()).second) {
        throw ConfigError("name", p.string() + ": duplicate scenario name '" + scenarios.back().name() + "'");
      }
    }
    std::size_t workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, scenarios.size());
    std::vector<Outcome> outcomes(scenarios.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
          outcomes[i] = run_one(scenarios[i], out_dir);
        }
      });
    }
    for (auto& t : pool) t.join();

    int code = exit_ok;
    nlohmann::ordered_json index;
    index["git_describe"] = std::string(git_describe());
    index["scenarios"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      const Outcome& o = outcomes[i];
      for (const auto& f : o.files) out << f.string() << "\n";
      err << o.message;
      index["scenarios"].push_back({{"name", scenarios[i].name()}, {"kind", scenarios[i].kind()}, {"exit", o.code}});
      // Severity: runtime error, then config error, then a failed check.
      auto rank = [](int c) { return c == exit_runtime ? 3 : c == exit_config ? 2 : c == exit_gate ? 1 : 0; };
      if (rank(o.code) > rank(code)) code = o.code;
    }
    const auto index_path = std::filesystem::path(out_dir) / (std::filesystem::path(config).stem().string() + ".sweep.json");
    write_atomic(index_path, json_text(index));
    out << index_path.string() << "\n";
    return code;
  } catch (const ConfigError& e) {
    err << "frackin: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << "frackin: " << e.what() << "\n";
    return exit_runtime;
  }
}

} // namespace frackin::cli

#endif // FRACKIN_CLI_APP_HPP
