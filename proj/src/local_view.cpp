#include "coopman/local_view.hpp"

#include <cmath>

namespace coopman {

AgentLocalView make_local_view(const AgentModel& model, const AgentJointState& joints,
                               const EndEffectorState& sensed, double t) {
  AgentLocalView view;
  view.t = t;
  view.q = joints.q;
  view.qd = joints.qd;
  if (model.kind() == AgentKind::Planar3R) {
    const double angle = model.ee_angle(joints.q);
    view.ee_position = model.ee_position(joints.q);
    view.ee_orientation = UnitQuaternion::from_components(std::cos(0.5 * angle), Vec3(0.0, std::sin(0.5 * angle), 0.0));
    const VecX v = model.jacobian(joints.q) * joints.qd;
    view.ee_twist.setZero();
    const auto& axes = model.task_axes();
    for (std::size_t r = 0; r < axes.size(); ++r) view.ee_twist[axes[r]] = v[r];
  } else {
    view.ee_position = sensed.position;
    view.ee_orientation = sensed.orientation;
    view.ee_twist = sensed.twist;
  }
  return view;
}

ObjectEstimate object_from_agent(const GraspGeometry& grasp, const AgentLocalView& view, bool planar) {
  ObjectEstimate est;
  if (planar) {
    const double ee_angle = 2.0 * std::atan2(view.ee_orientation.eps.y(), view.ee_orientation.phi);
    const double angle = wrap_angle(ee_angle - grasp.relative_orientation.pitch);
    est.orientation = UnitQuaternion::from_components(std::cos(0.5 * angle), Vec3(0.0, std::sin(0.5 * angle), 0.0));
  } else {
    est.orientation = quat_mul(view.ee_orientation, quat_conj(grasp.relative_quaternion()));
  }
  est.rotation = rotation_matrix(est.orientation);
  est.position = view.ee_position - grasp.offset_world(est.rotation);
  est.twist = agent_to_object_jacobian(est.rotation, grasp) * view.ee_twist;
  return est;
}

}  // namespace coopman
