#pragma once

#include <vector>

#include "coopman/agent_model.hpp"
#include "coopman/disturbance.hpp"
#include "coopman/grasp.hpp"
#include "coopman/object_model.hpp"
#include "coopman/spatial.hpp"

namespace coopman {

struct CooperativeSystem {
  ObjectModel object;
  std::vector<AgentModel> agents;
  std::vector<GraspGeometry> grasps;
  LoadDistribution distribution;
  bool planar = false;  // motion restricted to x, z and rotation about y

  int agent_count() const { return static_cast<int>(agents.size()); }
  std::vector<int> active_axes() const;
  void validate() const;
};

struct ObjectState {
  Vec3 position = Vec3::Zero();
  UnitQuaternion orientation{};
  Vec6 twist = Vec6::Zero();  // [linear; angular], inertial frame
};

struct AgentJointState {
  VecX q;
  VecX qd;
};

// End-effector pose and twist implied by the object state through the rigid grasp.
struct EndEffectorState {
  Vec3 position;
  UnitQuaternion orientation;
  Vec6 twist;
};

EndEffectorState end_effector_state(const ObjectState& object, const GraspGeometry& grasp);
// Rigid-grasp back-solve of every agent's joint state. chi is the integral of
// the object angular velocity (the rotor coordinates of Synthetic6D agents).
std::vector<AgentJointState> agent_states_from_object(const CooperativeSystem& sys, const ObjectState& object,
                                                      const Vec3& chi);

struct CoupledTerms {
  Mat6 mass = Mat6::Zero();
  Mat6 coriolis = Mat6::Zero();
  Vec6 gravity = Vec6::Zero();
  Mat6 damping = Mat6::Zero();  // kept apart from coriolis so N = Mdot - 2C stays skew
  Vec6 disturbance = Vec6::Zero();
  MatX grasp;      // G
  MatX grasp_dot;  // dG/dt
  std::vector<TaskDynamics> agent_terms;
  std::vector<Vec6> agent_disturbances;
  Vec6 object_disturbance = Vec6::Zero();
};

CoupledTerms assemble_coupled(const CooperativeSystem& sys, const ObjectState& object,
                              const std::vector<AgentJointState>& agents, const DisturbanceModel& disturbance,
                              double t);

// v_O_dot = M~^-1 (G^T u - C~ v_O - g~ - d~) on the active axes; zero elsewhere.
Vec6 object_acceleration(const CooperativeSystem& sys, const CoupledTerms& terms, const Vec6& twist,
                         const VecX& stacked_wrench);

// f_i = u_i - (M_i v_i_dot + C_i v_i + g_i + d_i) with v_i_dot from the grasp constraint.
std::vector<Vec6> interaction_wrenches(const CooperativeSystem& sys, const CoupledTerms& terms,
                                       const Vec6& twist, const Vec6& acceleration, const VecX& stacked_wrench);

double mechanical_energy(const CooperativeSystem& sys, const ObjectState& object,
                         const std::vector<AgentJointState>& agents);

}  // namespace coopman
