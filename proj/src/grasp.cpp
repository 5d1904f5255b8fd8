#include "coopman/grasp.hpp"

#include <string>

#include "coopman/errors.hpp"

namespace coopman {

GraspGeometry GraspGeometry::from_object_frame(const Vec3& offset_object, const EulerAngles& relative) {
  GraspGeometry g;
  g.relative_orientation = relative;
  g.offset_ee = g.relative_rotation().transpose() * offset_object;
  return g;
}

double LoadDistribution::total_mass_weight() const {
  double sum = 0.0;
  for (double m : mass_weights) sum += m;
  return sum;
}

void LoadDistribution::validate(const std::vector<GraspGeometry>& grasps) const {
  if (mass_weights.size() != grasps.size() || inertia_weights.size() != grasps.size()) {
    throw Error(ErrorCode::Config, "load distribution needs one m_star and one j_star per agent");
  }
  Vec3 moment = Vec3::Zero();
  double scale = 0.0;
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    if (!(mass_weights[i] > 0.0)) {
      throw Error(ErrorCode::Config, "agents[" + std::to_string(i) + "].m_star must be positive");
    }
    const Mat3& j = inertia_weights[i];
    if (!j.isApprox(j.transpose(), 1e-12) || Eigen::LLT<Mat3>(j).info() != Eigen::Success) {
      throw Error(ErrorCode::Config, "agents[" + std::to_string(i) + "].j_star must be symmetric positive definite");
    }
    moment += mass_weights[i] * grasps[i].offset_object();
    scale += mass_weights[i] * grasps[i].offset_object().norm();
  }
  if (moment.norm() > 1e-9 * std::max(scale, 1.0)) {
    throw Error(ErrorCode::Config,
                "weighted grasp offsets must balance (sum m_star_i * p_i = 0); the load split would "
                "otherwise create internal wrenches");
  }
}

Mat6 object_to_agent_jacobian(const Mat3& object_rotation, const GraspGeometry& grasp) {
  Mat6 j = Mat6::Identity();
  j.topRightCorner<3, 3>() = -skew(grasp.offset_world(object_rotation));
  return j;
}

Mat6 object_to_agent_jacobian_dot(const Mat3& object_rotation, const GraspGeometry& grasp, const Vec3& omega) {
  Mat6 j = Mat6::Zero();
  j.topRightCorner<3, 3>() = -skew(omega.cross(grasp.offset_world(object_rotation)));
  return j;
}

Mat6 agent_to_object_jacobian(const Mat3& object_rotation, const GraspGeometry& grasp) {
  Mat6 j = Mat6::Identity();
  j.topRightCorner<3, 3>() = skew(grasp.offset_world(object_rotation));
  return j;
}

MatX grasp_matrix(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps) {
  const int n = static_cast<int>(grasps.size());
  if (n == 0) throw Error(ErrorCode::RankDeficient, "grasp matrix needs at least one agent");
  MatX g(6 * n, 6);
  for (int i = 0; i < n; ++i) g.block<6, 6>(6 * i, 0) = object_to_agent_jacobian(object_rotation, grasps[i]);
  Eigen::JacobiSVD<MatX> svd(g);
  const auto& s = svd.singularValues();
  if (s.size() < 6 || s(5) <= 1e-12 * std::max(1.0, s(0))) {
    throw Error(ErrorCode::RankDeficient, "grasp matrix has rank below 6");
  }
  return g;
}

MatX grasp_matrix_dot(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps, const Vec3& omega) {
  const int n = static_cast<int>(grasps.size());
  MatX g(6 * n, 6);
  for (int i = 0; i < n; ++i) {
    g.block<6, 6>(6 * i, 0) = object_to_agent_jacobian_dot(object_rotation, grasps[i], omega);
  }
  return g;
}

Mat3 object_inertia_weight(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps,
                           const LoadDistribution& dist) {
  Mat3 j = Mat3::Zero();
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    const Mat3 s = skew(-grasps[i].offset_world(object_rotation));
    j += dist.inertia_weights[i] - dist.mass_weights[i] * s * s;
  }
  return j;
}

Mat6 load_distribution_block(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps,
                             const LoadDistribution& dist, int agent) {
  const Mat3 j_object = object_inertia_weight(object_rotation, grasps, dist);
  const auto lu = j_object.fullPivLu();
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularJStar, "object inertia weight is singular");
  const Mat3 j_inv = lu.inverse();
  const double m = dist.mass_weights[agent];
  const Mat3 s = skew(-grasps[agent].offset_world(object_rotation));  // S(p_{O/E_i})
  Mat6 block = Mat6::Zero();
  block.topLeftCorner<3, 3>() = (m / dist.total_mass_weight()) * Mat3::Identity();
  block.topRightCorner<3, 3>() = m * s * j_inv;
  block.bottomRightCorner<3, 3>() = dist.inertia_weights[agent] * j_inv;
  return block;
}

MatX load_distribution_inverse(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps,
                               const LoadDistribution& dist) {
  const int n = static_cast<int>(grasps.size());
  MatX gm(6 * n, 6);
  for (int i = 0; i < n; ++i) {
    gm.block<6, 6>(6 * i, 0) = load_distribution_block(object_rotation, grasps, dist, i);
  }
  return gm;
}

VecX internal_force_term(const Mat3& object_rotation, const std::vector<GraspGeometry>& grasps,
                         const LoadDistribution& dist, const VecX& desired_internal) {
  const MatX g = grasp_matrix(object_rotation, grasps);
  const MatX gm = load_distribution_inverse(object_rotation, grasps, dist);
  return desired_internal - gm * (g.transpose() * desired_internal);
}

}  // namespace coopman
