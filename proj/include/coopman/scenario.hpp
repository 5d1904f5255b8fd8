#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coopman/adaptive_controller.hpp"
#include "coopman/coupled_dynamics.hpp"
#include "coopman/disturbance.hpp"
#include "coopman/ppc_controller.hpp"
#include "coopman/trajectory.hpp"

namespace coopman {

enum class ControllerKind { None, Adaptive, Ppc };

// What a suite run counts as success.
enum class Expectation { Clean, SaturationViolation, FunnelViolation };

struct SimulationSettings {
  double dt = 1e-3;
  double duration = 1.0;
  double controller_period = 0.0;  // 0: evaluate at every integrator stage
  int log_every = 1;
  std::uint64_t seed = 1;
  double gravity = kStandardGravity;

  bool continuous() const { return controller_period == 0.0; }
  // Plant steps per controller update in hold mode.
  int substeps() const;
};

struct ObjectInitial {
  Vec3 position = Vec3::Zero();
  EulerAngles euler{};
  Vec6 twist = Vec6::Zero();
  bool flip_quaternion = false;  // negate after hemisphere alignment (same rotation)
};

struct AdaptiveSettings {
  AdaptiveGains gains;
  AttitudeErrorForm form = AttitudeErrorForm::Standard;
};

struct PpcSettings {
  PpcGains gains;
  EnvelopeSpec pose;
  EnvelopeSpec velocity;
  bool tune = false;  // replace gains by the torque-limit tuner result
};

struct DisturbanceSettings {
  bool enabled = false;
  std::vector<Vec6> agent_amplitudes;
  Vec6 object_amplitude = Vec6::Zero();
};

struct Scenario {
  std::string name;
  std::string description;
  Expectation expect = Expectation::Clean;
  SimulationSettings sim;
  CooperativeSystem system;
  ObjectInitial initial;
  SinusoidTrajectory trajectory;
  DisturbanceSettings disturbance;
  ControllerKind controller = ControllerKind::None;
  std::optional<AdaptiveSettings> adaptive;
  std::optional<PpcSettings> ppc;

  DisturbanceModel disturbance_model() const;
  ObjectState initial_state() const;
  // Throws Config or PitchBoundViolation naming the offending key path.
  void validate() const;
};

// Strict schema: unknown keys are rejected with their full path.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::string& path);

ControllerKind parse_controller_kind(const std::string& name);
std::string to_string(ControllerKind kind);
std::string to_string(Expectation e);

}  // namespace coopman
