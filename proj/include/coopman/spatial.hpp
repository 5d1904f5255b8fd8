#pragma once

#include <Eigen/Dense>

namespace coopman {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat43 = Eigen::Matrix<double, 4, 3>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Scalar part first: [phi, eps]. Kept at unit norm by every constructor.
struct UnitQuaternion {
  double phi = 1.0;
  Vec3 eps = Vec3::Zero();

  static UnitQuaternion identity() { return {}; }
  // Normalizes; throws on a zero or non-finite input.
  static UnitQuaternion from_components(double phi, const Vec3& eps);
  static UnitQuaternion from_coeffs(const Vec4& c) { return from_components(c[0], c.tail<3>()); }

  Vec4 coeffs() const { return Vec4(phi, eps.x(), eps.y(), eps.z()); }
  double norm() const { return coeffs().norm(); }
  UnitQuaternion operator-() const { return raw(-phi, -eps); }

  // No renormalization; for callers that already hold a unit 4-vector.
  static UnitQuaternion raw(double phi, const Vec3& eps) {
    UnitQuaternion q;
    q.phi = phi;
    q.eps = eps;
    return q;
  }
};

// Z-Y-X intrinsic: R = Rz(yaw) Ry(pitch) Rx(roll).
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  Vec3 vector() const { return Vec3(roll, pitch, yaw); }
  static EulerAngles from_vector(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

struct Twist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 v;
    v << linear, angular;
    return v;
  }
  static Twist from_stacked(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
};

struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 v;
    v << force, torque;
    return v;
  }
  static Wrench from_stacked(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
};

// Distance from +-pi/2 below which Euler extraction and the rate map are refused.
inline constexpr double kPitchSingularityMargin = 1e-9;

Mat3 skew(const Vec3& a);

UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b);
UnitQuaternion quat_conj(const UnitQuaternion& q);
Mat43 e_matrix(const UnitQuaternion& q);
// omega is expressed in the inertial frame.
Vec4 quat_derivative(const UnitQuaternion& q, const Vec3& omega);
// e = desired * conj(actual)
UnitQuaternion quat_error(const UnitQuaternion& desired, const UnitQuaternion& actual);

Mat3 rotation_matrix(const UnitQuaternion& q);
Mat3 rotation_from_euler(const EulerAngles& eta);
UnitQuaternion quat_from_rotation(const Mat3& r);

// Canonical sign (phi >= 0).
UnitQuaternion quat_from_euler(const EulerAngles& eta);
// Closed form without sign canonicalization; smooth in eta, so a smooth Euler
// trajectory maps to a smooth quaternion trajectory.
UnitQuaternion quat_from_euler_smooth(const EulerAngles& eta);
// Throws RepresentationSingularity within kPitchSingularityMargin of +-pi/2.
EulerAngles euler_from_quat(const UnitQuaternion& q);
// Never throws; yaw/roll split is arbitrary at the singularity.
EulerAngles euler_from_quat_unchecked(const UnitQuaternion& q);

// omega = T(eta) * eta_dot
Mat3 euler_rate_map(const EulerAngles& eta);
Mat3 euler_rate_map_inverse(const EulerAngles& eta);
Mat3 euler_rate_map_dot(const EulerAngles& eta, const Vec3& eta_dot);

// x_dot = J_O(eta) v with J_O = diag(I, T^-1).
Mat6 repr_jacobian(const EulerAngles& eta);
Mat6 repr_jacobian_inverse(const EulerAngles& eta);

double wrap_angle(double a);
double spectral_norm(const MatX& m);

}  // namespace coopman
