#pragma once

#include <vector>

#include "coopman/coupled_dynamics.hpp"
#include "coopman/disturbance.hpp"
#include "coopman/local_view.hpp"
#include "coopman/trajectory.hpp"

namespace coopman {

struct AdaptiveGains {
  Mat3 k_p = Mat3::Identity();
  Mat3 k_zeta = Mat3::Identity();
  Mat6 k_v = Mat6::Identity();  // diagonal
  double gamma_agent = 1.0;
  double gamma_object = 1.0;
  double beta_agent = 1.0;
  double beta_object = 1.0;

  void validate() const;
};

// Standard: e = [e_p; -e_eps]. ScalarWeighted: e = [e_p; -e_phi e_eps], which
// makes e_phi = -1 an equilibrium as well.
enum class AttitudeErrorForm { Standard, ScalarWeighted };

struct AdaptiveEstimates {
  VecX agent_params;
  VecX object_params;
  Vec6 agent_disturbance = Vec6::Zero();
  Vec6 object_disturbance = Vec6::Zero();

  static AdaptiveEstimates zeros(int agent_param_count);
  int size() const { return static_cast<int>(agent_params.size() + object_params.size()) + 12; }
  VecX flatten() const;
  static AdaptiveEstimates unflatten(const VecX& flat, int agent_param_count);
};

struct PoseErrors {
  Vec3 position = Vec3::Zero();        // e_p = p_O - p_d
  UnitQuaternion attitude{};           // e_zeta = zeta_d * conj(zeta_O)
  Vec6 stacked = Vec6::Zero();         // e
};

PoseErrors pose_errors(const Vec3& object_position, const UnitQuaternion& object_orientation,
                       const Vec3& desired_position, const UnitQuaternion& desired_orientation,
                       AttitudeErrorForm form = AttitudeErrorForm::Standard);

struct ReferenceVelocity {
  Vec6 value = Vec6::Zero();  // v_f
  Vec6 rate = Vec6::Zero();   // v_f_dot
};

// v_f = v_d - K_f e and its exact derivative along the object twist.
ReferenceVelocity reference_velocity_vf(const PoseErrors& errors, const TrajectorySample& desired,
                                        const Vec6& object_twist, const AdaptiveGains& gains,
                                        AttitudeErrorForm form = AttitudeErrorForm::Standard);

struct AdaptiveOutput {
  Vec6 wrench = Vec6::Zero();
  AdaptiveEstimates rates;
  PoseErrors errors;
  ReferenceVelocity reference;
  Vec6 velocity_error = Vec6::Zero();  // e_vf = v_O - v_f
  ObjectEstimate object;
};

// Reads only kinematic structure, grasp constants and regressor shapes from
// the team description; true dynamic parameters are never touched.
class AdaptiveController {
 public:
  AdaptiveController(CooperativeSystem team, SinusoidTrajectory trajectory, AdaptiveGains gains,
                     DisturbanceModel disturbance, AttitudeErrorForm form = AttitudeErrorForm::Standard);

  const AdaptiveGains& gains() const { return gains_; }
  AttitudeErrorForm form() const { return form_; }
  AdaptiveOutput evaluate(int agent, const AgentLocalView& view, const AdaptiveEstimates& estimates) const;

 private:
  CooperativeSystem team_;
  SinusoidTrajectory trajectory_;
  AdaptiveGains gains_;
  DisturbanceModel disturbance_;
  AttitudeErrorForm form_;
};

struct LyapunovSample {
  double value = 0.0;
  double rate_analytic = 0.0;
};

// Simulation-only diagnostic: needs the true parameters and the coupled inertia.
LyapunovSample lyapunov_monitor(const CooperativeSystem& truth, const DisturbanceModel& disturbance,
                                const Mat6& coupled_mass, const PoseErrors& errors, const Vec6& velocity_error,
                                const std::vector<AdaptiveEstimates>& estimates, const AdaptiveGains& gains,
                                AttitudeErrorForm form = AttitudeErrorForm::Standard);

}  // namespace coopman
