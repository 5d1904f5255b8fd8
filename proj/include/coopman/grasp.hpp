#pragma once

#include <vector>

#include "coopman/spatial.hpp"

namespace coopman {

// Constant end-effector pose relative to the object frame. The end-effector
// orientation is R_E = R_O * R(relative_orientation).
struct GraspGeometry {
  Vec3 offset_ee = Vec3::Zero();             // p_{E/O} expressed in {E}
  EulerAngles relative_orientation{};

  static GraspGeometry from_object_frame(const Vec3& offset_object, const EulerAngles& relative);

  Mat3 relative_rotation() const { return rotation_from_euler(relative_orientation); }
  UnitQuaternion relative_quaternion() const { return quat_from_euler_smooth(relative_orientation); }
  // p_{E/O} expressed in {O}
  Vec3 offset_object() const { return relative_rotation() * offset_ee; }
  // p_{E/O} in the inertial frame
  Vec3 offset_world(const Mat3& object_rotation) const { return object_rotation * offset_object(); }
};

struct LoadDistribution {
  std::vector<double> mass_weights;      // m*_i
  std::vector<Mat3> inertia_weights;     // J*_i

  double total_mass_weight() const;
  // Checks positivity, SPD weights, and sum_i m*_i p_{O/E_i} = 0.
  void validate(const std::vector<GraspGeometry>& grasps) const;
};

// v_i = J_Oi v_O for a rigid grasp.
Mat6 object_to_agent_jacobian(const Mat3& object_rotation, const GraspGeometry& grasp);
Mat6 object_to_agent_jacobian_dot(const Mat3& object_rotation, const GraspGeometry& grasp, const Vec3& omega);
// Inverse of J_Oi (always invertible).
Mat6 agent_to_object_jacobian(const Mat3& object_rotation, const GraspGeometry& grasp);

// Stacked J_Oi blocks (6N x 6). Throws RankDeficient when rank < 6.
MatX grasp_matrix(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps);
MatX grasp_matrix_dot(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps, const Vec3& omega);

// J*_O = sum J*_i - sum m*_i S(p_{O/E_i})^2
Mat3 object_inertia_weight(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps,
                           const LoadDistribution& dist);
// Per-agent block J_Mi of the weighted right inverse of G^T. Throws SingularJStar.
Mat6 load_distribution_block(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps,
                             const LoadDistribution& dist, int agent);
MatX load_distribution_inverse(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps,
                               const LoadDistribution& dist);

// (I - G+_M G^T) f: wrench components that leave the object wrench unchanged.
VecX internal_force_term(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps,
                         const LoadDistribution& dist, const VecX& desired_internal);

}  // namespace coopman
