#include "coopman.h"

#include <filesystem>
#include <string>

#include "coopman/metrics.hpp"
#include "coopman/telemetry.hpp"
#include "coopman/simulator.hpp"

struct coopman_scenario {
  coopman::Scenario scenario;
  std::string bounds_text;
};

struct coopman_run {
  coopman::RunResult result;
  std::string report_json;
};

namespace {

thread_local std::string g_last_error;

coopman_status status_of(coopman::ErrorCode code) {
  using coopman::ErrorCode;
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::PitchBoundViolation:
    case ErrorCode::InitialConditionViolation:
      return COOPMAN_ERR_CONFIG;
    case ErrorCode::Io:
      return COOPMAN_ERR_IO;
    case ErrorCode::FunnelViolation:
      return COOPMAN_ERR_FUNNEL;
    case ErrorCode::InfeasibleBounds:
    case ErrorCode::NoFeasibleGains:
      return COOPMAN_ERR_BOUNDS;
    case ErrorCode::MalformedTelemetry:
      return COOPMAN_ERR_TELEMETRY;
    case ErrorCode::RepresentationSingularity:
    case ErrorCode::KinematicSingularity:
    case ErrorCode::RankDeficient:
    case ErrorCode::SingularJStar:
    case ErrorCode::UnsupportedModel:
    case ErrorCode::NumericalBlowUp:
      return COOPMAN_ERR_MODEL;
  }
  return COOPMAN_ERR_INTERNAL;
}

coopman_status fail(coopman_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

// Runs f, translating exceptions into status codes and the thread's last error.
template <class F>
coopman_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const coopman::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(COOPMAN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(COOPMAN_ERR_INTERNAL, "unknown exception");
  }
}

template <class Mutate>
coopman_status override(coopman_scenario* s, Mutate&& mutate) {
  if (!s) return fail(COOPMAN_ERR_INVALID_ARGUMENT, "null scenario");
  return guarded([&] {
    coopman::Scenario copy = s->scenario;
    mutate(copy);
    copy.validate();
    s->scenario = std::move(copy);
    return COOPMAN_OK;
  });
}

}  // namespace

extern "C" {

const char* coopman_version(void) { return "0.1.0"; }

const char* coopman_last_error(void) { return g_last_error.c_str(); }

coopman_status coopman_scenario_load(const char* path, coopman_scenario** out) {
  if (!path || !out) return fail(COOPMAN_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new coopman_scenario{coopman::load_scenario(path), {}};
    return COOPMAN_OK;
  });
}

coopman_status coopman_scenario_parse(const char* toml_text, coopman_scenario** out) {
  if (!toml_text || !out) return fail(COOPMAN_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new coopman_scenario{coopman::parse_scenario(toml_text), {}};
    return COOPMAN_OK;
  });
}

void coopman_scenario_free(coopman_scenario* scenario) { delete scenario; }

const char* coopman_scenario_name(const coopman_scenario* scenario) {
  return scenario ? scenario->scenario.name.c_str() : "";
}

coopman_status coopman_scenario_set_controller(coopman_scenario* scenario, const char* kind) {
  if (!kind) return fail(COOPMAN_ERR_INVALID_ARGUMENT, "null controller kind");
  return override(scenario, [&](coopman::Scenario& s) { s.controller = coopman::parse_controller_kind(kind); });
}

coopman_status coopman_scenario_set_dt(coopman_scenario* scenario, double dt) {
  // Validation rejects a step that does not divide the controller period.
  return override(scenario, [&](coopman::Scenario& s) { s.sim.dt = dt; });
}

coopman_status coopman_scenario_set_duration(coopman_scenario* scenario, double duration) {
  return override(scenario, [&](coopman::Scenario& s) { s.sim.duration = duration; });
}

coopman_status coopman_scenario_set_seed(coopman_scenario* scenario, uint64_t seed) {
  return override(scenario, [&](coopman::Scenario& s) { s.sim.seed = seed; });
}

coopman_status coopman_scenario_bounds(coopman_scenario* scenario, const char** report_text) {
  if (!scenario || !report_text) return fail(COOPMAN_ERR_INVALID_ARGUMENT, "null argument");
  *report_text = nullptr;
  return guarded([&] {
    const coopman::Scenario& sc = scenario->scenario;
    const coopman::TeamBounds team = coopman::sample_team_bounds(sc);
    std::string header;
    coopman::PpcGains gains = sc.ppc ? sc.ppc->gains : coopman::PpcGains{};
    if (sc.ppc && sc.ppc->tune) {
      try {
        gains = coopman::effective_ppc_gains(sc, team);
      } catch (const coopman::Error& e) {
        header += "tuner_error=" + std::string(e.what()) + "\n";
      }
    }
    const coopman::BoundReport report = coopman::bound_chain(coopman::ppc_bound_problem(sc, team, gains));
    char buf[64];
    const auto kv = [&](const std::string& key, double v) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      header += key + "=" + buf + "\n";
    };
    header = "scenario=" + sc.name + "\n" + header;
    kv("g_s", gains.g_s);
    kv("g_v", gains.g_v);
    kv("samples", team.samples);
    kv("inv_mass_upper", team.model.inv_mass_upper);
    kv("inv_mass_lower", team.model.inv_mass_lower);
    kv("gravity_bound", team.model.gravity);
    kv("coriolis_per_speed", team.model.coriolis_per_speed);
    kv("disturbance_base", team.model.disturbance_base);
    kv("disturbance_slope", team.model.disturbance_slope);
    const auto limits = coopman::wrench_limits(sc, team);
    for (std::size_t i = 0; i < limits.size(); ++i) kv("wrench_limit_" + std::to_string(i), limits[i]);
    scenario->bounds_text = header + report.to_text();
    *report_text = scenario->bounds_text.c_str();
    if (!report.finite) {
      return fail(COOPMAN_ERR_BOUNDS, "InfeasibleBounds: " + report.first_nonfinite + " is not representable");
    }
    return COOPMAN_OK;
  });
}

coopman_status coopman_scenario_write_bounds(const coopman_scenario* scenario, const char* directory) {
  if (!scenario || !directory) return fail(COOPMAN_ERR_INVALID_ARGUMENT, "null argument");
  if (scenario->bounds_text.empty()) return fail(COOPMAN_ERR_INVALID_ARGUMENT, "no bound report computed yet");
  return guarded([&] {
    const std::filesystem::path file = std::filesystem::path(directory) / (scenario->scenario.name + ".bounds.txt");
    coopman::write_file_atomic(file.string(), scenario->bounds_text);
    return COOPMAN_OK;
  });
}

coopman_status coopman_run_scenario(const coopman_scenario* scenario, coopman_run** out) {
  if (!scenario || !out) return fail(COOPMAN_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto run = new coopman_run{coopman::run_scenario(scenario->scenario), {}};
    run->report_json = run->result.report.to_json();
    *out = run;
    return COOPMAN_OK;
  });
}

void coopman_run_free(coopman_run* run) { delete run; }

int coopman_run_passed(const coopman_run* run) { return run && run->result.report.passed ? 1 : 0; }

int coopman_run_completed(const coopman_run* run) { return run && run->result.report.completed ? 1 : 0; }

long coopman_run_funnel_violations(const coopman_run* run) { return run ? run->result.report.funnel_violations : 0; }

long coopman_run_saturation_violations(const coopman_run* run) {
  return run ? run->result.report.saturation_violations : 0;
}

coopman_status coopman_run_failure(const coopman_run* run) {
  if (!run || !run->result.report.failure) return COOPMAN_OK;
  return status_of(run->result.report.failure->code);
}

const char* coopman_run_failure_message(const coopman_run* run) {
  if (!run || !run->result.report.failure) return "";
  return run->result.report.failure->message.c_str();
}

const char* coopman_run_report_json(const coopman_run* run) { return run ? run->report_json.c_str() : ""; }

coopman_status coopman_run_write(const coopman_run* run, const char* directory) {
  if (!run || !directory) return fail(COOPMAN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const std::filesystem::path dir(directory);
    const std::string name = run->result.report.scenario;
    coopman::write_file_atomic((dir / (name + ".csv")).string(), run->result.telemetry.to_csv());
    coopman::write_file_atomic((dir / (name + ".report.json")).string(), run->report_json);
    if (!run->result.telemetry.rows.empty()) {
      coopman::write_file_atomic((dir / (name + ".metrics.json")).string(),
                                 coopman::to_json(coopman::compute_metrics(run->result.telemetry)));
    }
    return COOPMAN_OK;
  });
}

}  // extern "C"
