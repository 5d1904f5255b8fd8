#include "coopman/adaptive_controller.hpp"

#include <string>

#include "coopman/errors.hpp"

namespace coopman {

namespace {

bool is_spd(const Mat3& m) {
  return m.isApprox(m.transpose(), 1e-12) && Eigen::LLT<Mat3>(m).info() == Eigen::Success;
}

}  // namespace

void AdaptiveGains::validate() const {
  if (!is_spd(k_p)) throw Error(ErrorCode::Config, "controller.adaptive.k_p must be symmetric positive definite");
  if (!is_spd(k_zeta)) throw Error(ErrorCode::Config, "controller.adaptive.k_zeta must be symmetric positive definite");
  if (!k_v.isDiagonal() || !(k_v.diagonal().minCoeff() > 0.0)) {
    throw Error(ErrorCode::Config, "controller.adaptive.k_v must be diagonal with positive entries");
  }
  if (!(gamma_agent > 0.0 && gamma_object > 0.0 && beta_agent > 0.0 && beta_object > 0.0)) {
    throw Error(ErrorCode::Config, "controller.adaptive gamma/beta gains must be positive");
  }
}

AdaptiveEstimates AdaptiveEstimates::zeros(int agent_param_count) {
  AdaptiveEstimates e;
  e.agent_params = VecX::Zero(agent_param_count);
  e.object_params = VecX::Zero(ObjectModel::kParameterCount);
  return e;
}

VecX AdaptiveEstimates::flatten() const {
  VecX flat(size());
  flat << agent_params, object_params, agent_disturbance, object_disturbance;
  return flat;
}

AdaptiveEstimates AdaptiveEstimates::unflatten(const VecX& flat, int agent_param_count) {
  AdaptiveEstimates e;
  const int no = ObjectModel::kParameterCount;
  e.agent_params = flat.head(agent_param_count);
  e.object_params = flat.segment(agent_param_count, no);
  e.agent_disturbance = flat.segment<6>(agent_param_count + no);
  e.object_disturbance = flat.segment<6>(agent_param_count + no + 6);
  return e;
}

PoseErrors pose_errors(const Vec3& object_position, const UnitQuaternion& object_orientation,
                       const Vec3& desired_position, const UnitQuaternion& desired_orientation,
                       AttitudeErrorForm form) {
  PoseErrors e;
  e.position = object_position - desired_position;
  e.attitude = quat_error(desired_orientation, object_orientation);
  const double weight = form == AttitudeErrorForm::Standard ? 1.0 : e.attitude.phi;
  e.stacked << e.position, -weight * e.attitude.eps;
  return e;
}

ReferenceVelocity reference_velocity_vf(const PoseErrors& errors, const TrajectorySample& desired,
                                        const Vec6& object_twist, const AdaptiveGains& gains,
                                        AttitudeErrorForm form) {
  const Vec3& e_eps = errors.attitude.eps;
  const double e_phi = errors.attitude.phi;
  const Vec3 e_omega = object_twist.tail<3>() - desired.omega;
  const double e_phi_dot = 0.5 * e_eps.dot(e_omega);
  const Vec3 e_eps_dot = -0.5 * (e_phi * Mat3::Identity() + skew(e_eps)) * e_omega - e_eps.cross(desired.omega);
  const Vec3 e_p_dot = object_twist.head<3>() - desired.pose_rate.head<3>();

  Vec3 attitude = e_eps;
  Vec3 attitude_dot = e_eps_dot;
  if (form == AttitudeErrorForm::ScalarWeighted) {
    attitude = e_phi * e_eps;
    attitude_dot = e_phi_dot * e_eps + e_phi * e_eps_dot;
  }
  ReferenceVelocity ref;
  ref.value << desired.pose_rate.head<3>() - gains.k_p * errors.position, desired.omega + gains.k_zeta * attitude;
  ref.rate << desired.pose_accel.head<3>() - gains.k_p * e_p_dot, desired.omega_dot + gains.k_zeta * attitude_dot;
  return ref;
}

AdaptiveController::AdaptiveController(CooperativeSystem team, SinusoidTrajectory trajectory, AdaptiveGains gains,
                                       DisturbanceModel disturbance, AttitudeErrorForm form)
    : team_(std::move(team)),
      trajectory_(trajectory),
      gains_(gains),
      disturbance_(std::move(disturbance)),
      form_(form) {
  gains_.validate();
}

AdaptiveOutput AdaptiveController::evaluate(int agent, const AgentLocalView& view,
                                            const AdaptiveEstimates& estimates) const {
  const AgentModel& model = team_.agents[agent];
  const GraspGeometry& grasp = team_.grasps[agent];
  AdaptiveOutput out;
  out.object = object_from_agent(grasp, view, team_.planar);
  const ObjectEstimate& obj = out.object;
  const TrajectorySample desired = desired_trajectory(trajectory_, view.t);

  out.errors = pose_errors(obj.position, obj.orientation, desired.position(), desired.orientation, form_);
  out.reference = reference_velocity_vf(out.errors, desired, obj.twist, gains_, form_);
  if (team_.planar) {
    for (int k : {1, 3, 5}) {
      out.reference.value[k] = 0.0;
      out.reference.rate[k] = 0.0;
    }
  }
  out.velocity_error = obj.twist - out.reference.value;

  const Vec3 omega = obj.twist.tail<3>();
  const Mat6 j_oi = object_to_agent_jacobian(obj.rotation, grasp);
  const Mat6 j_oi_dot = object_to_agent_jacobian_dot(obj.rotation, grasp, omega);
  const Vec6& vf = out.reference.value;
  const Vec6& vf_dot = out.reference.rate;

  const MatX y_agent = task_regressor(model, view.q, view.qd, j_oi * vf, j_oi * vf_dot + j_oi_dot * vf);
  const MatX y_object = team_.object.regressor(obj.rotation, omega, vf, vf_dot);
  const Mat6 delta_agent = disturbance_.agent_regressor(agent, view.q, view.ee_twist, view.t);
  const Mat6 delta_object = disturbance_.object_regressor(obj.twist, view.t);
  const Mat6 j_mi = load_distribution_block(obj.rotation, team_.grasps, team_.distribution, agent);

  const Vec6 object_command = y_object * estimates.object_params + delta_object * estimates.object_disturbance -
                              out.errors.stacked - gains_.k_v * out.velocity_error;
  out.wrench = y_agent * estimates.agent_params + delta_agent * estimates.agent_disturbance + j_mi * object_command;

  const Vec6 agent_error = j_oi * out.velocity_error;
  out.rates.agent_params = -gains_.gamma_agent * (y_agent.transpose() * agent_error);
  out.rates.object_params = -gains_.gamma_object * (y_object.transpose() * out.velocity_error);
  out.rates.agent_disturbance = -gains_.beta_agent * (delta_agent.transpose() * agent_error);
  out.rates.object_disturbance = -gains_.beta_object * (delta_object.transpose() * out.velocity_error);
  return out;
}

LyapunovSample lyapunov_monitor(const CooperativeSystem& truth, const DisturbanceModel& disturbance,
                                const Mat6& coupled_mass, const PoseErrors& errors, const Vec6& velocity_error,
                                const std::vector<AdaptiveEstimates>& estimates, const AdaptiveGains& gains,
                                AttitudeErrorForm form) {
  LyapunovSample s;
  const double e_phi = errors.attitude.phi;
  const double attitude_term = form == AttitudeErrorForm::Standard ? 2.0 * (1.0 - e_phi) : 1.0 - e_phi * e_phi;
  s.value = 0.5 * errors.position.squaredNorm() + attitude_term +
            0.5 * velocity_error.dot(coupled_mass * velocity_error);
  for (int i = 0; i < truth.agent_count(); ++i) {
    s.value += 0.5 / gains.gamma_agent * (estimates[i].agent_params - truth.agents[i].parameters()).squaredNorm();
    s.value += 0.5 / gains.beta_agent * (estimates[i].agent_disturbance - disturbance.agent_amplitude(i)).squaredNorm();
  }
  // Every agent holds an identical copy of the object estimates; the first stands for all.
  s.value += 0.5 / gains.gamma_object * (estimates[0].object_params - truth.object.parameters()).squaredNorm();
  s.value += 0.5 / gains.beta_object * (estimates[0].object_disturbance - disturbance.object_amplitude()).squaredNorm();

  Mat6 k_f = Mat6::Zero();
  k_f.topLeftCorner<3, 3>() = gains.k_p;
  k_f.bottomRightCorner<3, 3>() = gains.k_zeta;
  s.rate_analytic = -errors.stacked.dot(k_f * errors.stacked) - velocity_error.dot(gains.k_v * velocity_error);
  return s;
}

}  // namespace coopman
