#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "coopman.h"

namespace fs = std::filesystem;

namespace {

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;      // config, model or I/O error
constexpr int kExitViolation = 2;  // funnel or saturation violation under --strict

struct Overrides {
  std::optional<std::string> controller;
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<uint64_t> seed;
};

struct ScenarioHandle {
  coopman_scenario* ptr = nullptr;
  ScenarioHandle() = default;
  ScenarioHandle(const ScenarioHandle&) = delete;
  ScenarioHandle& operator=(const ScenarioHandle&) = delete;
  ~ScenarioHandle() { coopman_scenario_free(ptr); }
};

struct RunHandle {
  coopman_run* ptr = nullptr;
  RunHandle() = default;
  RunHandle(const RunHandle&) = delete;
  RunHandle& operator=(const RunHandle&) = delete;
  ~RunHandle() { coopman_run_free(ptr); }
};

std::string diagnostic(const std::string& path) { return path + ": " + coopman_last_error(); }

// Loads and applies overrides. Returns an error message or nothing.
std::optional<std::string> load(const std::string& path, const Overrides& o, ScenarioHandle& h) {
  if (coopman_scenario_load(path.c_str(), &h.ptr) != COOPMAN_OK) return diagnostic(path);
  if (o.controller && coopman_scenario_set_controller(h.ptr, o.controller->c_str()) != COOPMAN_OK) {
    return diagnostic(path);
  }
  if (o.dt && coopman_scenario_set_dt(h.ptr, *o.dt) != COOPMAN_OK) return diagnostic(path);
  if (o.duration && coopman_scenario_set_duration(h.ptr, *o.duration) != COOPMAN_OK) return diagnostic(path);
  if (o.seed && coopman_scenario_set_seed(h.ptr, *o.seed) != COOPMAN_OK) return diagnostic(path);
  return std::nullopt;
}

struct Outcome {
  int exit_code = kExitOk;
  std::string line;
};

Outcome run_one(const std::string& path, const Overrides& o, const std::string& out_dir, bool strict) {
  ScenarioHandle h;
  if (auto err = load(path, o, h)) return {kExitError, *err};
  RunHandle r;
  if (coopman_run_scenario(h.ptr, &r.ptr) != COOPMAN_OK) return {kExitError, diagnostic(path)};
  if (coopman_run_write(r.ptr, out_dir.c_str()) != COOPMAN_OK) return {kExitError, diagnostic(path)};

  const std::string name = coopman_scenario_name(h.ptr);
  const long funnel = coopman_run_funnel_violations(r.ptr);
  const long saturation = coopman_run_saturation_violations(r.ptr);
  const coopman_status failure = coopman_run_failure(r.ptr);
  std::string line = name + ": funnel_violations=" + std::to_string(funnel) +
                     " saturation_violations=" + std::to_string(saturation);
  if (failure != COOPMAN_OK) line += "\n" + path + ": " + coopman_run_failure_message(r.ptr);
  if (failure != COOPMAN_OK && failure != COOPMAN_ERR_FUNNEL) return {kExitError, line};
  if (strict && (funnel > 0 || saturation > 0)) return {kExitViolation, line};
  return {kExitOk, line};
}

int cmd_run(const std::string& path, const Overrides& o, const std::string& out_dir, bool strict) {
  const Outcome r = run_one(path, o, out_dir, strict);
  (r.exit_code == kExitOk ? std::cout : std::cerr) << r.line << '\n';
  return r.exit_code;
}

int cmd_validate(const std::string& path, const Overrides& o) {
  ScenarioHandle h;
  if (auto err = load(path, o, h)) {
    std::cerr << *err << '\n';
    return kExitError;
  }
  std::cout << coopman_scenario_name(h.ptr) << ": valid\n";
  return kExitOk;
}

int cmd_bounds(const std::string& path, const Overrides& o, const std::string& out_dir) {
  ScenarioHandle h;
  if (auto err = load(path, o, h)) {
    std::cerr << *err << '\n';
    return kExitError;
  }
  const char* text = nullptr;
  const coopman_status s = coopman_scenario_bounds(h.ptr, &text);
  if (!text) {
    std::cerr << diagnostic(path) << '\n';
    return kExitError;
  }
  std::cout << text;
  // Keep the chain failure message; writing resets the thread's last error.
  const std::string chain_error = s != COOPMAN_OK ? diagnostic(path) : std::string();
  if (coopman_scenario_write_bounds(h.ptr, out_dir.c_str()) != COOPMAN_OK) {
    std::cerr << diagnostic(path) << '\n';
    return kExitError;
  }
  if (s != COOPMAN_OK) {
    std::cerr << chain_error << '\n';
    return kExitError;
  }
  return kExitOk;
}

int cmd_suite(const std::string& dir, const Overrides& o, const std::string& out_dir, unsigned jobs) {
  std::vector<std::string> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".toml") files.push_back(entry.path().string());
  }
  if (ec) {
    std::cerr << dir << ": " << ec.message() << '\n';
    return kExitError;
  }
  if (files.empty()) {
    std::cerr << dir << ": no scenarios\n";
    return kExitError;
  }
  std::sort(files.begin(), files.end());

  std::vector<std::string> lines(files.size());
  std::vector<bool> passed(files.size(), false);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      ScenarioHandle h;
      if (auto err = load(files[i], o, h)) {
        lines[i] = "FAIL " + *err;
        continue;
      }
      RunHandle r;
      if (coopman_run_scenario(h.ptr, &r.ptr) != COOPMAN_OK || coopman_run_write(r.ptr, out_dir.c_str()) != COOPMAN_OK) {
        lines[i] = "FAIL " + diagnostic(files[i]);
        continue;
      }
      passed[i] = coopman_run_passed(r.ptr) != 0;
      lines[i] = std::string(passed[i] ? "PASS " : "FAIL ") + coopman_scenario_name(h.ptr) +
                 " funnel_violations=" + std::to_string(coopman_run_funnel_violations(r.ptr)) +
                 " saturation_violations=" + std::to_string(coopman_run_saturation_violations(r.ptr));
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(files.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  bool all = true;
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::cout << lines[i] << '\n';
    all = all && passed[i];
  }
  return all ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative manipulation simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir = "out";
  std::string controller;
  double dt = 0.0, duration = 0.0;
  uint64_t seed = 0;
  bool strict = false;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  const auto add_common = [&](CLI::App* sub, const std::string& scenario_help) {
    sub->add_option("--scenario", scenario, scenario_help)->required();
    sub->add_option("--controller", controller, "Override controller type (none, adaptive, ppc)");
    sub->add_option("--dt", dt, "Override the integration step [s]");
    sub->add_option("--duration", duration, "Override the run length [s]");
    sub->add_option("--seed", seed, "Override the disturbance seed");
  };
  CLI::App* run = app.add_subcommand("run", "Run one scenario and write telemetry and report");
  add_common(run, "Scenario TOML file");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--strict", strict, "Exit 2 on funnel or saturation violations");
  CLI::App* validate = app.add_subcommand("validate", "Check a scenario file");
  add_common(validate, "Scenario TOML file");
  CLI::App* bounds = app.add_subcommand("bounds", "Compute the PPC bound chain for a scenario");
  add_common(bounds, "Scenario TOML file");
  bounds->add_option("--out", out_dir, "Output directory");
  CLI::App* suite = app.add_subcommand("suite", "Run every scenario in a directory");
  add_common(suite, "Directory of scenario TOML files");
  suite->add_option("--out", out_dir, "Output directory");
  suite->add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  Overrides o;
  CLI::App* active = app.get_subcommands().front();
  if (active->count("--controller")) o.controller = controller;
  if (active->count("--dt")) o.dt = dt;
  if (active->count("--duration")) o.duration = duration;
  if (active->count("--seed")) o.seed = seed;

  if (*run) return cmd_run(scenario, o, out_dir, strict);
  if (*validate) return cmd_validate(scenario, o);
  if (*bounds) return cmd_bounds(scenario, o, out_dir);
  return cmd_suite(scenario, o, out_dir, jobs);
}
