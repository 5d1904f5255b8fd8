#include <doctest.h>

#include <cmath>
#include <limits>

#include "coopman/errors.hpp"
#include "coopman/ppc_bounds.hpp"
#include "coopman/scenario.hpp"
#include "coopman/simulator.hpp"
#include "support.hpp"

using namespace coopman;
using coopman::testing::kPi;
using coopman::testing::Sampler;
using coopman::testing::scenario_path;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

AxisFunctions envelopes(double rho0, double rho_inf, double decay) {
  AxisFunctions f;
  f.fill(PerformanceFunction{rho0, rho_inf, decay});
  return f;
}

// Slow funnels, mild dynamics: every link stays finite.
BoundProblem benign(const PpcGains& gains = PpcGains{1.0, 5.0, 0.1, 0.1}) {
  BoundProblem p;
  p.model = ModelBounds{0.5, 0.2, 1.0, 0.1, 0.1, 0.1};
  p.pose_rate_bound = 0.05;
  p.repr_bound = 1.1;
  p.gains = gains;
  p.pose = envelopes(1.0, 0.8, 0.01);
  p.velocity = envelopes(0.2, 0.15, 0.01);
  p.axes = {0, 1, 2, 3, 4, 5};
  p.pose_eps0_norm = 0.5;
  p.velocity_eps0_norm = 0.5;
  p.offset_norms = {0.2, 0.3};
  p.load_block_norms = {0.6, 0.4};
  return p;
}

std::vector<std::pair<std::string, double>> plain_entries(const BoundReport& r) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& e : r.entries()) {
    if (e.first.rfind("log10_", 0) != 0) out.push_back(e);
  }
  return out;
}

double entry(const BoundReport& r, const std::string& key) {
  for (const auto& [k, v] : r.entries()) {
    if (k == key) return v;
  }
  FAIL("missing key " << key);
  return 0.0;
}

}  // namespace

TEST_CASE("representation Jacobian bound equals the sampled maximum norm") {
  Sampler s(71);
  for (double pitch_max : {0.0, 0.3, 0.8, 1.2, 1.5}) {
    double sampled = 0.0;
    for (int n = 0; n < 4000; ++n) {
      const EulerAngles eta{s.uniform(-kPi, kPi), s.uniform(-pitch_max, pitch_max), s.uniform(-kPi, kPi)};
      sampled = std::max(sampled, spectral_norm(repr_jacobian(eta)));
    }
    const EulerAngles edge{0.0, -pitch_max, 0.0};
    sampled = std::max(sampled, spectral_norm(repr_jacobian(edge)));
    const double bound = repr_jacobian_bound(pitch_max);
    CHECK(sampled <= bound * (1 + 1e-12));
    CHECK(sampled >= bound * (1 - 1e-9));
  }
  CHECK_THROWS_AS((void)repr_jacobian_bound(kPi / 2), Error);
  CHECK_THROWS_AS((void)repr_jacobian_bound(-0.1), Error);
}

TEST_CASE("bound chain: link identities on a benign problem") {
  const BoundProblem p = benign();
  const BoundReport r = bound_calculator(p);
  REQUIRE(r.finite);
  CHECK(r.first_nonfinite.empty());
  const auto& b = r.value;
  CHECK(b.pose_xi == doctest::Approx(std::tanh(0.5 * b.pose_eps)).epsilon(1e-14));
  CHECK(b.pose_r == doctest::Approx(2.0 / (1.0 - b.pose_xi * b.pose_xi)).epsilon(1e-10));
  CHECK(b.velocity_xi == doctest::Approx(std::tanh(0.5 * b.velocity_eps)).epsilon(1e-14));
  CHECK(b.velocity_r == doctest::Approx(2.0 / (1.0 - b.velocity_xi * b.velocity_xi)).epsilon(1e-10));
  CHECK(b.pose_eps >= p.pose_eps0_norm);
  CHECK(b.velocity_eps >= p.velocity_eps0_norm);
  CHECK(b.object_speed > b.reference_speed);
  REQUIRE(b.agent_wrench.size() == 2);
  REQUIRE(b.agent_speed.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(b.agent_wrench[i] == doctest::Approx(p.gains.g_v * p.load_block_norms[i] / 0.15 * b.velocity_r *
                                               b.velocity_eps)
                                   .epsilon(1e-14));
    CHECK(b.agent_speed[i] == doctest::Approx((p.offset_norms[i] + 1.0) * b.object_speed).epsilon(1e-14));
  }
}

TEST_CASE("bound chain: log-domain evaluation agrees wherever the plain one is finite") {
  Sampler s(72);
  for (int n = 0; n < 200; ++n) {
    BoundProblem p = benign(PpcGains{s.uniform(0.2, 5.0), s.uniform(0.5, 50.0), 0.1, 0.1});
    p.model.gravity = s.uniform(0.0, 20.0);
    p.model.coriolis_per_speed = s.uniform(0.0, 2.0);
    const BoundReport r = bound_chain(p);
    for (const auto& [key, x] : plain_entries(r)) {
      if (!std::isfinite(x) || x <= 0.0) continue;
      CAPTURE(key);
      CHECK(std::abs(entry(r, "log10_" + key) - std::log10(x)) < 1e-9 * std::max(1.0, std::abs(std::log10(x))));
    }
  }
}

TEST_CASE("bound chain: monotone in every model bound and the pose-rate bound") {
  const BoundProblem base = benign();
  const BoundReport r0 = bound_chain(base);
  const auto bump = [&](auto&& edit) {
    BoundProblem p = base;
    edit(p);
    return bound_chain(p);
  };
  const std::vector<BoundReport> larger{
      bump([](BoundProblem& p) { p.model.gravity *= 2; }),
      bump([](BoundProblem& p) { p.model.coriolis_per_speed *= 2; }),
      bump([](BoundProblem& p) { p.model.disturbance_base *= 2; }),
      bump([](BoundProblem& p) { p.model.disturbance_slope *= 2; }),
      bump([](BoundProblem& p) { p.model.inv_mass_upper *= 2; }),
      bump([](BoundProblem& p) { p.model.inv_mass_lower *= 0.5; }),
      bump([](BoundProblem& p) { p.pose_rate_bound *= 2; }),
      bump([](BoundProblem& p) { p.repr_bound *= 1.5; }),
      bump([](BoundProblem& p) { p.velocity_eps0_norm *= 3; }),
  };
  for (const BoundReport& r : larger) {
    for (std::size_t i = 0; i < r.value.agent_wrench.size(); ++i) {
      CHECK(r.value.agent_wrench[i] >= r0.value.agent_wrench[i]);
    }
    CHECK(r.value.velocity_drift >= r0.value.velocity_drift);
  }
}

TEST_CASE("bound calculator: overflow is named, the log chain stays finite") {
  BoundProblem p = benign();
  p.gains.g_v = 0.01;
  const BoundReport r = bound_chain(p);
  REQUIRE_FALSE(r.finite);
  CHECK_FALSE(r.first_nonfinite.empty());
  for (const auto& [key, x] : r.entries()) {
    if (key.rfind("log10_", 0) == 0) CHECK(std::isfinite(x));
  }
  try {
    (void)bound_calculator(p);
    FAIL("expected infeasible bounds");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleBounds);
    CHECK(std::string(e.what()).find(r.first_nonfinite) != std::string::npos);
  }
}

TEST_CASE("bound report text lists every link as key=value") {
  const BoundReport r = bound_chain(benign());
  const std::string text = r.to_text();
  CHECK(text.rfind("finite=true\n", 0) == 0);
  for (const char* key : {"B_s=", "eps_s=", "r_s=", "v_O=", "v_0=", "v_1=", "B_v=", "eps_v=", "r_v=", "u_0=", "u_1=",
                          "log10_u_1="}) {
    CHECK(text.find(std::string("\n") + key) != std::string::npos);
  }
  CHECK(r.entries().size() == 2 * plain_entries(r).size());
}

TEST_CASE("bound problem inputs are validated") {
  BoundProblem p = benign();
  p.model.inv_mass_lower = 0.0;
  CHECK_THROWS_AS((void)bound_chain(p), Error);
  p = benign();
  p.axes.clear();
  CHECK_THROWS_AS((void)bound_chain(p), Error);
  p = benign();
  p.load_block_norms.pop_back();
  CHECK_THROWS_AS((void)bound_chain(p), Error);
  p = benign();
  p.pose_rate_bound = std::nan("");
  CHECK_THROWS_AS((void)bound_chain(p), Error);
  p = benign();
  p.velocity[3].rho_inf = 5.0;
  CHECK_THROWS_AS((void)bound_chain(p), Error);
}

TEST_CASE("gain tuner: keeps feasible defaults, finds the nearest feasible g_v, reports failure") {
  const PpcGains defaults{1.0, 5.0, 0.1, 0.1};
  const auto build = [](const PpcGains& g) { return benign(g); };
  const BoundReport at_defaults = bound_chain(benign(defaults));
  const double u0 = std::max(at_defaults.value.agent_wrench[0], at_defaults.value.agent_wrench[1]);

  const TunerResult kept = gain_tuner(build, defaults, {2 * u0, 2 * u0});
  CHECK(kept.defaults_kept);
  CHECK(kept.gains.g_v == defaults.g_v);
  CHECK(gain_tuner(build, defaults, {kInf, kInf}).defaults_kept);

  // A limit below the default bound but above the minimum over g_v.
  const std::vector<double> limits{0.8 * u0, 0.8 * u0};
  const TunerResult tuned = gain_tuner(build, defaults, limits);
  CHECK_FALSE(tuned.defaults_kept);
  for (int i = 0; i < 2; ++i) CHECK(tuned.report.value.agent_wrench[i] <= limits[i]);
  double worst = 0.0;
  for (int i = 0; i < 2; ++i) worst = std::max(worst, tuned.report.value.agent_wrench[i] / limits[i]);
  CHECK(worst > 1.0 - 1e-6);  // on the boundary: no slack given away

  try {
    (void)gain_tuner(build, defaults, {1e-12, 1e-12});
    FAIL("expected no feasible gains");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoFeasibleGains);
    CHECK(std::string(e.what()).find("agent") != std::string::npos);
  }
  CHECK_THROWS_AS((void)gain_tuner(build, defaults, {-1.0, 1.0}), Error);
}

TEST_CASE("sampled team bounds cover the run-time extremes of the clean scenarios") {
  for (const char* name : {"ur5quad_ppc.toml", "widowx_ppc.toml"}) {
    Scenario sc = load_scenario(scenario_path(name));
    sc.sim.duration = 3.0;
    const TeamBounds tb = sample_team_bounds(sc, 2000, 12345);
    const RunResult res = run_scenario(sc);
    REQUIRE(res.report.completed);
    const std::string label = name;
    CAPTURE(label);
    const ModelBounds& seen = res.report.run_bounds;
    CHECK(seen.inv_mass_upper <= tb.model.inv_mass_upper * (1 + 1e-9));
    CHECK(seen.inv_mass_lower >= tb.model.inv_mass_lower * (1 - 1e-9));
    CHECK(seen.gravity <= tb.model.gravity * (1 + 1e-9));
    CHECK(tb.load_block_norms.size() == static_cast<std::size_t>(sc.system.agent_count()));
    const std::vector<double> limits = wrench_limits(sc, tb);
    for (double w : limits) CHECK(w > 0.0);
  }
}

TEST_CASE("the bound chain of the reference scenarios overflows doubles but not its log form") {
  for (const char* name : {"ur5quad_ppc.toml", "widowx_ppc.toml"}) {
    const Scenario sc = load_scenario(scenario_path(name));
    const TeamBounds tb = sample_team_bounds(sc, 500, 12345);
    const BoundReport r = bound_chain(ppc_bound_problem(sc, tb, sc.ppc->gains));
    const std::string label = name;
    CAPTURE(label);
    CHECK_FALSE(r.finite);
    for (const auto& [key, x] : r.entries()) {
      if (key.rfind("log10_", 0) == 0 && key.find("xi") == std::string::npos) CHECK(x > 0.0);
    }
    MESSAGE(std::string(name) << ": first non-finite link " << r.first_nonfinite << ", log10 r_s = " << r.log10.pose_r
                 << ", log10 eps_v = " << r.log10.velocity_eps);
  }
}
