#pragma once

#include "coopman/agent_model.hpp"
#include "coopman/spatial.hpp"

namespace coopman {

// Newton-Euler rigid body about its centre of mass, written in the inertial frame.
struct ObjectModel {
  double mass = 1.0;
  Mat3 inertia = Mat3::Identity();  // in the object frame
  double gravity = kStandardGravity;

  void validate() const;

  Mat6 mass_matrix(const Mat3& rotation) const;
  Mat6 coriolis(const Mat3& rotation, const Vec3& omega) const;
  Vec6 gravity_wrench() const;

  // [m, Ixx, Iyy, Izz, Ixy, Ixz, Iyz]
  static constexpr int kParameterCount = 7;
  VecX parameters() const;
  MatX regressor(const Mat3& rotation, const Vec3& omega, const Vec6& v_ref, const Vec6& vdot_ref) const;

  double kinetic_energy(const Mat3& rotation, const Vec6& twist) const;
  double potential_energy(const Vec3& position) const { return mass * gravity * position.z(); }
};

}  // namespace coopman
