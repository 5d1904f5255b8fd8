#pragma once

#include <array>
#include <variant>
#include <vector>

#include "coopman/spatial.hpp"

namespace coopman {

inline constexpr double kStandardGravity = 9.81;

struct JointDynamics {
  MatX mass;
  MatX coriolis;
  VecX gravity;
};

// Revolute chain moving in the world x-z plane; every joint rotates about +y.
// Links are uniform rods unless com_fraction/inertia say otherwise.
struct Planar3RParams {
  std::array<double, 3> link_lengths{};
  std::array<double, 3> link_masses{};
  std::array<double, 3> com_fractions{0.5, 0.5, 0.5};
  std::array<double, 3> link_inertias{};  // about each link's COM
  Vec3 base_position = Vec3::Zero();      // y component must be zero
  double base_angle = 0.0;                // about +y
  int elbow = 1;                          // sign of the second joint in IK
  Vec3 torque_limits = Vec3::Constant(1e300);
  // Viscous joint friction seen only by the plant; no controller models it.
  Vec3 joint_damping = Vec3::Zero();
};

// Six task-space coordinates [p; chi] with chi_dot = omega, so the Jacobian is
// the identity. M(q) = A + sum_k b_k sin(q_k) S_k with fixed shapes S_k.
struct Synthetic6DParams {
  Mat6 base_inertia = Mat6::Identity();
  std::array<double, 6> modulation{};
  double gravity_mass = 0.0;             // weight along -z is gravity_mass * g
  Vec3 rotor_offset = Vec3::Zero();      // chi of this agent at chi_common = 0
  Vec6 torque_limits = Vec6::Constant(1e300);
};

enum class AgentKind { Planar3R, Synthetic6D };

class AgentModel {
 public:
  static AgentModel planar3r(const Planar3RParams& params, double gravity = kStandardGravity);
  static AgentModel synthetic6d(const Synthetic6DParams& params, double gravity = kStandardGravity);

  AgentKind kind() const;
  int dof() const;
  // Twist components (0..5) this agent spans, in the order of its Jacobian rows.
  const std::vector<int>& task_axes() const { return axes_; }
  double gravity() const { return gravity_; }
  VecX torque_limits() const;

  const Planar3RParams* planar() const { return std::get_if<Planar3RParams>(&params_); }
  const Synthetic6DParams* synthetic() const { return std::get_if<Synthetic6DParams>(&params_); }

  int parameter_count() const;
  // True parameters; read by the plant and by diagnostics, never by controllers.
  VecX parameters() const;
  JointDynamics joint_dynamics(const VecX& q, const VecX& qd) const;
  JointDynamics joint_dynamics_with(const VecX& params, const VecX& q, const VecX& qd) const;
  // Columns: dynamics with unit parameter vectors applied to (qd_ref, qdd_ref).
  MatX joint_regressor(const VecX& q, const VecX& qd, const VecX& qd_ref, const VecX& qdd_ref) const;
  double potential_energy(const VecX& q) const;

  // Square Jacobian onto task_axes().
  MatX jacobian(const VecX& q) const;
  MatX jacobian_dot(const VecX& q, const VecX& qd) const;

  Vec3 ee_position(const VecX& q) const;
  // Planar only: end-effector angle about +y.
  double ee_angle(const VecX& q) const;
  VecX planar_inverse_kinematics(const Vec3& position, double angle) const;

 private:
  AgentModel(std::variant<Planar3RParams, Synthetic6DParams> params, double gravity);

  std::variant<Planar3RParams, Synthetic6DParams> params_;
  double gravity_;
  std::vector<int> axes_;
};

// Shape matrix S_k of the Synthetic6D inertia modulation.
Mat6 synthetic_shape(int k);

// Task-space terms embedded in 6x6 on the agent's task axes (zeros elsewhere).
struct TaskDynamics {
  Mat6 mass = Mat6::Zero();
  Mat6 coriolis = Mat6::Zero();
  Vec6 gravity = Vec6::Zero();
  Mat6 damping = Mat6::Zero();  // J^-T B J^-1, plant-only dissipation
};

// Throws KinematicSingularity when det(J J^T) < 1e-8.
void require_regular(const AgentModel& model, const MatX& jacobian);
TaskDynamics task_dynamics(const AgentModel& model, const VecX& q, const VecX& qd);
// Y with Y*theta = M_x a + C_x b + g_x for task twist b and task acceleration a.
MatX task_regressor(const AgentModel& model, const VecX& q, const VecX& qd, const Vec6& b, const Vec6& a);
// Joint velocity reproducing the task twist on the agent's axes.
VecX joint_velocity(const AgentModel& model, const VecX& q, const Vec6& twist);
// tau = J^T u restricted to the agent's axes.
VecX joint_torque(const AgentModel& model, const VecX& q, const Vec6& wrench);

}  // namespace coopman
