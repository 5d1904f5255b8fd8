#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "coopman/coupled_dynamics.hpp"
#include "coopman/local_view.hpp"
#include "coopman/trajectory.hpp"

namespace coopman {

// rho(t) = (rho_0 - rho_inf) exp(-decay t) + rho_inf
struct PerformanceFunction {
  double rho_0 = 1.0;
  double rho_inf = 0.5;
  double decay = 1.0;

  void validate() const;
  double value(double t) const;
  double rate(double t) const;
  // Largest |rate|, attained at t = 0.
  double max_rate() const { return decay * (rho_0 - rho_inf); }
};

using AxisFunctions = std::array<PerformanceFunction, 6>;

struct PpcGains {
  double g_s = 1.0;
  double g_v = 1.0;
  double theta_star = 0.1;  // initial pitch envelope
  double alpha = 0.1;       // velocity envelope margin

  void validate() const;
};

// How the initial envelope width is chosen, per loop.
enum class EnvelopeMode {
  Explicit,      // rho_0 given per axis
  AxisOffset,    // rho_0,k = |e_k(0)| + offset_k
  NormOffset,    // rho_0,k = |e(0)| + alpha for every k
};

struct EnvelopeSpec {
  EnvelopeMode mode = EnvelopeMode::Explicit;
  Vec6 rho_0 = Vec6::Ones();
  Vec6 offset = Vec6::Zero();
  Vec6 rho_inf = Vec6::Constant(0.5);
  Vec6 decay = Vec6::Ones();
};

struct Envelopes {
  AxisFunctions pose;
  AxisFunctions velocity;
};

// Normalized error slice of one loop.
struct FunnelSlice {
  Vec6 rho = Vec6::Ones();
  Vec6 xi = Vec6::Zero();
  Vec6 eps = Vec6::Zero();
  Vec6 r = Vec6::Constant(2.0);
};

// xi = e / rho, eps = ln((1 + xi)/(1 - xi)), r = 2/(1 - xi^2). Throws FunnelViolation
// (never clamps) when |e_k| >= rho_k on an active axis.
FunnelSlice transform(const Vec6& error, const AxisFunctions& envelopes, double t, const std::vector<int>& axes,
                      std::string_view loop);

// e_s = [p_O - p_d; wrap(eta_O - eta_d)]
Vec6 pose_error_ppc(const Vec3& object_position, const EulerAngles& object_euler, const TrajectorySample& desired);

// v_r = -g_s J_O(eta_d + e_eta)^-1 rho^-1 r eps
Vec6 reference_velocity_vr(const FunnelSlice& pose, const Vec6& pose_error, const TrajectorySample& desired,
                           double g_s);

// u_i = -g_v J_Mi rho_v^-1 r_v eps_v
Vec6 control_ppc(const Mat6& load_block, const FunnelSlice& velocity, double g_v);

// Builds both envelope sets from the errors at t = 0. The pitch envelope starts
// at theta_star regardless of mode. Throws InitialConditionViolation naming the axis.
Envelopes funnel_init(const Vec6& pose_error0, const Vec6& object_twist0, const TrajectorySample& desired0,
                      const EnvelopeSpec& pose, const EnvelopeSpec& velocity, const PpcGains& gains,
                      const std::vector<int>& axes);
// Velocity envelopes alone, given e_v(0).
AxisFunctions velocity_envelopes(const Vec6& velocity_error0, const EnvelopeSpec& spec, const PpcGains& gains,
                                 const std::vector<int>& axes);

struct PpcOutput {
  Vec6 wrench = Vec6::Zero();
  Vec6 pose_error = Vec6::Zero();
  Vec6 velocity_error = Vec6::Zero();
  Vec6 reference = Vec6::Zero();
  FunnelSlice pose;
  FunnelSlice velocity;
  ObjectEstimate object;
  EulerAngles object_euler;
};

// Model-free: reads only grasp constants and load-distribution weights.
class PpcController {
 public:
  PpcController(CooperativeSystem team, SinusoidTrajectory trajectory, PpcGains gains, EnvelopeSpec pose,
                EnvelopeSpec velocity);

  const PpcGains& gains() const { return gains_; }
  const EnvelopeSpec& pose_spec() const { return pose_spec_; }
  const EnvelopeSpec& velocity_spec() const { return velocity_spec_; }

  Envelopes initialize(int agent, const AgentLocalView& view) const;
  PpcOutput evaluate(int agent, const AgentLocalView& view, const Envelopes& envelopes) const;

 private:
  CooperativeSystem team_;
  SinusoidTrajectory trajectory_;
  PpcGains gains_;
  EnvelopeSpec pose_spec_;
  EnvelopeSpec velocity_spec_;
};

}  // namespace coopman
