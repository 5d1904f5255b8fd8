#pragma once

#include "coopman/agent_model.hpp"
#include "coopman/coupled_dynamics.hpp"
#include "coopman/grasp.hpp"

namespace coopman {

// Everything one agent senses at run time: its own joints and end-effector.
struct AgentLocalView {
  double t = 0.0;
  VecX q;
  VecX qd;
  Vec3 ee_position = Vec3::Zero();
  UnitQuaternion ee_orientation{};
  Vec6 ee_twist = Vec6::Zero();
};

// Planar agents derive the end-effector pose from forward kinematics; Synthetic6D
// agents have no orientation in q and take it from the end-effector sensor.
AgentLocalView make_local_view(const AgentModel& model, const AgentJointState& joints,
                               const EndEffectorState& sensed, double t);

// Object state an agent reconstructs from its own view and its grasp constants.
struct ObjectEstimate {
  Vec3 position;
  UnitQuaternion orientation;
  Mat3 rotation;
  Vec6 twist;
};

// Planar teams recover the object angle by wrapping into (-pi, pi], which keeps
// the scalar part positive and matches the integrated object quaternion.
ObjectEstimate object_from_agent(const GraspGeometry& grasp, const AgentLocalView& view, bool planar);

}  // namespace coopman
