#include "coopman/coupled_dynamics.hpp"

#include <cmath>
#include <string>

#include "coopman/errors.hpp"

namespace coopman {

std::vector<int> CooperativeSystem::active_axes() const {
  if (planar) return {0, 2, 4};
  return {0, 1, 2, 3, 4, 5};
}

void CooperativeSystem::validate() const {
  if (agents.empty()) throw Error(ErrorCode::Config, "at least one agent is required");
  if (grasps.size() != agents.size()) throw Error(ErrorCode::Config, "one grasp per agent is required");
  object.validate();
  distribution.validate(grasps);
  for (int i = 0; i < agent_count(); ++i) {
    const bool is_planar = agents[i].kind() == AgentKind::Planar3R;
    if (is_planar != planar) {
      throw Error(ErrorCode::Config, "agents[" + std::to_string(i) + "] kind does not match the scenario plane");
    }
    if (planar) {
      const Vec3 off = grasps[i].offset_object();
      const EulerAngles& rel = grasps[i].relative_orientation;
      if (off.y() != 0.0 || rel.roll != 0.0 || rel.yaw != 0.0) {
        throw Error(ErrorCode::Config,
                    "agents[" + std::to_string(i) + "] grasp must stay in the x-z plane (pitch-only rotation)");
      }
    }
  }
}

EndEffectorState end_effector_state(const ObjectState& object, const GraspGeometry& grasp) {
  const Mat3 r = rotation_matrix(object.orientation);
  EndEffectorState ee;
  ee.position = object.position + grasp.offset_world(r);
  ee.orientation = quat_mul(object.orientation, grasp.relative_quaternion());
  ee.twist = object_to_agent_jacobian(r, grasp) * object.twist;
  return ee;
}

namespace {

// Rotation angle about +y of a quaternion known to rotate about y only.
double planar_angle(const UnitQuaternion& q) { return 2.0 * std::atan2(q.eps.y(), q.phi); }

}  // namespace

std::vector<AgentJointState> agent_states_from_object(const CooperativeSystem& sys, const ObjectState& object,
                                                      const Vec3& chi) {
  std::vector<AgentJointState> out;
  out.reserve(sys.agents.size());
  for (int i = 0; i < sys.agent_count(); ++i) {
    const AgentModel& model = sys.agents[i];
    const EndEffectorState ee = end_effector_state(object, sys.grasps[i]);
    AgentJointState s;
    if (model.kind() == AgentKind::Planar3R) {
      s.q = model.planar_inverse_kinematics(ee.position, planar_angle(ee.orientation));
      s.qd = joint_velocity(model, s.q, ee.twist);
    } else {
      s.q.resize(6);
      s.q << ee.position, chi + model.synthetic()->rotor_offset;
      s.qd = ee.twist;
    }
    out.push_back(std::move(s));
  }
  return out;
}

CoupledTerms assemble_coupled(const CooperativeSystem& sys, const ObjectState& object,
                              const std::vector<AgentJointState>& agents, const DisturbanceModel& disturbance,
                              double t) {
  const Mat3 r = rotation_matrix(object.orientation);
  const Vec3 omega = object.twist.tail<3>();
  CoupledTerms out;
  out.grasp = grasp_matrix(r, sys.grasps);
  out.grasp_dot = grasp_matrix_dot(r, sys.grasps, omega);
  out.mass = sys.object.mass_matrix(r);
  out.coriolis = sys.object.coriolis(r, omega);
  out.gravity = sys.object.gravity_wrench();
  out.object_disturbance = disturbance.object_disturbance(object.twist, t);
  out.disturbance = out.object_disturbance;
  for (int i = 0; i < sys.agent_count(); ++i) {
    const TaskDynamics td = task_dynamics(sys.agents[i], agents[i].q, agents[i].qd);
    const Mat6 j = out.grasp.block<6, 6>(6 * i, 0);
    const Mat6 jd = out.grasp_dot.block<6, 6>(6 * i, 0);
    const Vec6 vi = j * object.twist;
    const Vec6 di = disturbance.agent_disturbance(i, agents[i].q, vi, t);
    out.mass += j.transpose() * td.mass * j;
    out.coriolis += j.transpose() * (td.coriolis * j + td.mass * jd);
    out.gravity += j.transpose() * td.gravity;
    out.damping += j.transpose() * td.damping * j;
    out.disturbance += j.transpose() * di;
    out.agent_terms.push_back(td);
    out.agent_disturbances.push_back(di);
  }
  return out;
}

Vec6 object_acceleration(const CooperativeSystem& sys, const CoupledTerms& terms, const Vec6& twist,
                         const VecX& stacked_wrench) {
  const Vec6 rhs =
      terms.grasp.transpose() * stacked_wrench - (terms.coriolis + terms.damping) * twist - terms.gravity - terms.disturbance;
  const std::vector<int> axes = sys.active_axes();
  const int n = static_cast<int>(axes.size());
  MatX m(n, n);
  VecX b(n);
  for (int r = 0; r < n; ++r) {
    b[r] = rhs[axes[r]];
    for (int c = 0; c < n; ++c) m(r, c) = terms.mass(axes[r], axes[c]);
  }
  const Eigen::LLT<MatX> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalBlowUp, "coupled inertia lost positive definiteness");
  }
  const VecX a = llt.solve(b);
  Vec6 out = Vec6::Zero();
  for (int r = 0; r < n; ++r) out[axes[r]] = a[r];
  return out;
}

std::vector<Vec6> interaction_wrenches(const CooperativeSystem& sys, const CoupledTerms& terms,
                                       const Vec6& twist, const Vec6& acceleration, const VecX& stacked_wrench) {
  std::vector<Vec6> f;
  f.reserve(sys.agents.size());
  for (int i = 0; i < sys.agent_count(); ++i) {
    const Mat6 j = terms.grasp.block<6, 6>(6 * i, 0);
    const Mat6 jd = terms.grasp_dot.block<6, 6>(6 * i, 0);
    const Vec6 vi = j * twist;
    const Vec6 ai = j * acceleration + jd * twist;
    const TaskDynamics& td = terms.agent_terms[i];
    f.push_back(stacked_wrench.segment<6>(6 * i) -
                (td.mass * ai + (td.coriolis + td.damping) * vi + td.gravity + terms.agent_disturbances[i]));
  }
  return f;
}

double mechanical_energy(const CooperativeSystem& sys, const ObjectState& object,
                         const std::vector<AgentJointState>& agents) {
  const Mat3 r = rotation_matrix(object.orientation);
  double e = sys.object.kinetic_energy(r, object.twist) + sys.object.potential_energy(object.position);
  for (int i = 0; i < sys.agent_count(); ++i) {
    const JointDynamics jd = sys.agents[i].joint_dynamics(agents[i].q, agents[i].qd);
    e += 0.5 * agents[i].qd.dot(jd.mass * agents[i].qd) + sys.agents[i].potential_energy(agents[i].q);
  }
  return e;
}

}  // namespace coopman
