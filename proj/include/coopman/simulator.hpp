#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coopman/errors.hpp"
#include "coopman/ppc_bounds.hpp"
#include "coopman/scenario.hpp"
#include "coopman/telemetry.hpp"

namespace coopman {

struct HardFailure {
  ErrorCode code = ErrorCode::NumericalBlowUp;
  std::string message;
  double time = 0.0;
  VecX state;  // integrator state when the failure surfaced
};

struct AgentRunStats {
  VecX max_abs_torque;
  double max_wrench_norm = 0.0;
  double max_speed_norm = 0.0;
  long saturation_steps = 0;
};

struct RunReport {
  std::string scenario;
  std::string controller;
  std::string expect;
  std::string status;  // ok | funnel_violation | failed
  bool completed = false;
  bool passed = false;
  std::optional<HardFailure> failure;
  long steps = 0;
  double final_time = 0.0;
  double wall_clock = 0.0;
  std::optional<PpcGains> tuned_gains;

  long funnel_violations = 0;
  long saturation_violations = 0;  // plant steps with any |tau_j| > limit
  double first_saturation_time = -1.0;
  double early_peak_torque = 0.0;        // max |tau_j| over t <= 1 ms
  double early_peak_torque_ratio = 0.0;  // same, relative to the joint limit
  std::vector<AgentRunStats> agents;

  Vec6 max_abs_pose_error = Vec6::Zero();
  Vec6 max_abs_velocity_error = Vec6::Zero();
  double min_envelope_margin = 0.0;  // ppc only: min over axes and steps of rho - |e|
  double final_position_error = 0.0;
  double final_attitude_error = 0.0;  // |e_eps|
  double final_e_phi = 1.0;
  double min_e_phi = 1.0;

  // adaptive only
  double lyapunov_initial = 0.0;
  double lyapunov_final = 0.0;
  double lyapunov_max_increase = 0.0;  // largest step-to-step rise of V
  double max_vdot_analytic = 0.0;
  std::vector<double> initial_estimate_error;
  std::vector<double> max_estimate_error;

  double max_quaternion_drift = 0.0;  // | |zeta| - 1 | before renormalization, per step
  double max_grasp_identity_residual = 0.0;
  double max_grasp_jacobian_ratio = 0.0;  // |J_Oi| / (|p| + 1)
  double max_rigidity_residual = 0.0;
  double max_abs_pitch = 0.0;
  double energy_initial = 0.0;
  double max_energy_drift = 0.0;  // relative

  ModelBounds run_bounds;  // extremes seen along the run
  VecX final_state;

  std::string to_json() const;
};

struct RunResult {
  RunReport report;
  Telemetry telemetry;
};

// Model bounds sampled over the region the pose envelopes allow around the
// desired trajectory, plus the per-agent norms the bound chain and tuner need.
struct TeamBounds {
  ModelBounds model;
  std::vector<double> load_block_norms;  // max |J_Mi|
  std::vector<double> torque_map_norms;  // max |J_i^T|
  std::vector<double> max_joint_norms;   // max |q_i|
  int samples = 0;
};

TeamBounds sample_team_bounds(const Scenario& scenario, int samples = 2000, std::uint64_t seed = 12345);
BoundProblem ppc_bound_problem(const Scenario& scenario, const TeamBounds& bounds, const PpcGains& gains);
// Per-agent wrench limit min_j tau_max_j / |J_i^T|.
std::vector<double> wrench_limits(const Scenario& scenario, const TeamBounds& bounds);
// Gains the scenario will run with (tuned when requested).
PpcGains effective_ppc_gains(const Scenario& scenario, const TeamBounds& bounds);

// Fixed-step RK4 over [p_O, zeta_O, v_O, chi, estimates...].
class Simulation {
 public:
  explicit Simulation(Scenario scenario);
  ~Simulation();
  Simulation(Simulation&&) noexcept;
  Simulation& operator=(Simulation&&) noexcept;

  const Scenario& scenario() const;
  double time() const;
  long step_index() const;
  const VecX& state() const;
  ObjectState object() const;
  Vec3 chi() const;
  std::vector<AdaptiveEstimates> estimates() const;
  const std::optional<PpcGains>& tuned_gains() const;

  // One plant step. Throws on hard failures (funnel exit, blow-up, singularity).
  void step();
  // Full run with checks, telemetry and report; never throws on run failures.
  RunResult run();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

RunResult run_scenario(const Scenario& scenario);

}  // namespace coopman
