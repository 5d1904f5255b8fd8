#include "coopman/object_model.hpp"

#include <array>

#include "coopman/errors.hpp"

namespace coopman {

namespace {

const std::array<Mat3, 6>& inertia_basis() {
  static const std::array<Mat3, 6> basis = [] {
    std::array<Mat3, 6> b;
    for (auto& m : b) m.setZero();
    b[0](0, 0) = 1.0;
    b[1](1, 1) = 1.0;
    b[2](2, 2) = 1.0;
    b[3](0, 1) = b[3](1, 0) = 1.0;
    b[4](0, 2) = b[4](2, 0) = 1.0;
    b[5](1, 2) = b[5](2, 1) = 1.0;
    return b;
  }();
  return basis;
}

}  // namespace

void ObjectModel::validate() const {
  if (!(mass > 0.0)) throw Error(ErrorCode::Config, "object.mass must be positive");
  if (!inertia.isApprox(inertia.transpose(), 1e-12)) {
    throw Error(ErrorCode::Config, "object.inertia must be symmetric");
  }
  if (Eigen::LLT<Mat3>(inertia).info() != Eigen::Success) {
    throw Error(ErrorCode::Config, "object.inertia must be positive definite");
  }
}

Mat6 ObjectModel::mass_matrix(const Mat3& rotation) const {
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = mass * Mat3::Identity();
  m.bottomRightCorner<3, 3>() = rotation * inertia * rotation.transpose();
  return m;
}

Mat6 ObjectModel::coriolis(const Mat3& rotation, const Vec3& omega) const {
  Mat6 c = Mat6::Zero();
  c.bottomRightCorner<3, 3>() = skew(omega) * rotation * inertia * rotation.transpose();
  return c;
}

Vec6 ObjectModel::gravity_wrench() const {
  Vec6 g = Vec6::Zero();
  g[2] = mass * gravity;
  return g;
}

VecX ObjectModel::parameters() const {
  VecX theta(kParameterCount);
  theta << mass, inertia(0, 0), inertia(1, 1), inertia(2, 2), inertia(0, 1), inertia(0, 2), inertia(1, 2);
  return theta;
}

MatX ObjectModel::regressor(const Mat3& rotation, const Vec3& omega, const Vec6& v_ref,
                            const Vec6& vdot_ref) const {
  MatX y = MatX::Zero(6, kParameterCount);
  y.col(0).head<3>() = vdot_ref.head<3>() + Vec3(0.0, 0.0, gravity);
  const Mat3 w = skew(omega);
  const auto& basis = inertia_basis();
  for (int k = 0; k < 6; ++k) {
    const Mat3 world = rotation * basis[k] * rotation.transpose();
    y.col(1 + k).tail<3>() = world * vdot_ref.tail<3>() + w * world * v_ref.tail<3>();
  }
  return y;
}

double ObjectModel::kinetic_energy(const Mat3& rotation, const Vec6& twist) const {
  return 0.5 * twist.dot(mass_matrix(rotation) * twist);
}

}  // namespace coopman
