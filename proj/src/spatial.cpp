#include "coopman/spatial.hpp"

#include <cmath>
#include <numbers>

#include "coopman/errors.hpp"

namespace coopman {

namespace {

void require_regular_pitch(double pitch) {
  if (std::numbers::pi / 2.0 - std::abs(pitch) <= kPitchSingularityMargin) {
    throw Error(ErrorCode::RepresentationSingularity,
                "pitch " + std::to_string(pitch) + " at the Euler-angle singularity");
  }
}

}  // namespace

UnitQuaternion UnitQuaternion::from_components(double phi, const Vec3& eps) {
  const double n = std::sqrt(phi * phi + eps.squaredNorm());
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::NumericalBlowUp, "quaternion with zero or non-finite norm");
  }
  return raw(phi / n, eps / n);
}

Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return s;
}

UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b) {
  return UnitQuaternion::from_components(a.phi * b.phi - a.eps.dot(b.eps),
                                         a.phi * b.eps + b.phi * a.eps + a.eps.cross(b.eps));
}

UnitQuaternion quat_conj(const UnitQuaternion& q) { return UnitQuaternion::raw(q.phi, -q.eps); }

Mat43 e_matrix(const UnitQuaternion& q) {
  Mat43 e;
  e.row(0) = -q.eps.transpose();
  e.bottomRows<3>() = q.phi * Mat3::Identity() - skew(q.eps);
  return e;
}

Vec4 quat_derivative(const UnitQuaternion& q, const Vec3& omega) {
  return 0.5 * e_matrix(q) * omega;
}

UnitQuaternion quat_error(const UnitQuaternion& desired, const UnitQuaternion& actual) {
  const double e_phi = actual.phi * desired.phi + actual.eps.dot(desired.eps);
  const Vec3 e_eps = actual.phi * desired.eps - desired.phi * actual.eps + actual.eps.cross(desired.eps);
  return UnitQuaternion::from_components(e_phi, e_eps);
}

Mat3 rotation_matrix(const UnitQuaternion& q) {
  const Vec3& e = q.eps;
  return (q.phi * q.phi - e.squaredNorm()) * Mat3::Identity() + 2.0 * e * e.transpose() +
         2.0 * q.phi * skew(e);
}

Mat3 rotation_from_euler(const EulerAngles& eta) {
  const double cr = std::cos(eta.roll), sr = std::sin(eta.roll);
  const double cp = std::cos(eta.pitch), sp = std::sin(eta.pitch);
  const double cy = std::cos(eta.yaw), sy = std::sin(eta.yaw);
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp, cp * sr, cp * cr;
  return r;
}

UnitQuaternion quat_from_rotation(const Mat3& r) {
  const double trace = r.trace();
  double w, x, y, z;
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    w = 0.25 * s;
    x = (r(2, 1) - r(1, 2)) / s;
    y = (r(0, 2) - r(2, 0)) / s;
    z = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    w = (r(2, 1) - r(1, 2)) / s;
    x = 0.25 * s;
    y = (r(0, 1) + r(1, 0)) / s;
    z = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    w = (r(0, 2) - r(2, 0)) / s;
    x = (r(0, 1) + r(1, 0)) / s;
    y = 0.25 * s;
    z = (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    w = (r(1, 0) - r(0, 1)) / s;
    x = (r(0, 2) + r(2, 0)) / s;
    y = (r(1, 2) + r(2, 1)) / s;
    z = 0.25 * s;
  }
  if (w < 0.0) {
    w = -w, x = -x, y = -y, z = -z;
  }
  return UnitQuaternion::from_components(w, Vec3(x, y, z));
}

UnitQuaternion quat_from_euler_smooth(const EulerAngles& eta) {
  const double cr = std::cos(0.5 * eta.roll), sr = std::sin(0.5 * eta.roll);
  const double cp = std::cos(0.5 * eta.pitch), sp = std::sin(0.5 * eta.pitch);
  const double cy = std::cos(0.5 * eta.yaw), sy = std::sin(0.5 * eta.yaw);
  return UnitQuaternion::from_components(cr * cp * cy + sr * sp * sy,
                                         Vec3(sr * cp * cy - cr * sp * sy,
                                              cr * sp * cy + sr * cp * sy,
                                              cr * cp * sy - sr * sp * cy));
}

UnitQuaternion quat_from_euler(const EulerAngles& eta) {
  const UnitQuaternion q = quat_from_euler_smooth(eta);
  return q.phi < 0.0 ? -q : q;
}

EulerAngles euler_from_quat_unchecked(const UnitQuaternion& q) {
  const double w = q.phi, x = q.eps.x(), y = q.eps.y(), z = q.eps.z();
  const double r00 = 1.0 - 2.0 * (y * y + z * z);
  const double r10 = 2.0 * (x * y + w * z);
  const double r20 = 2.0 * (x * z - w * y);
  const double r21 = 2.0 * (y * z + w * x);
  const double r22 = 1.0 - 2.0 * (x * x + y * y);
  EulerAngles eta;
  eta.pitch = std::atan2(-r20, std::hypot(r00, r10));
  eta.roll = std::atan2(r21, r22);
  eta.yaw = std::atan2(r10, r00);
  return eta;
}

EulerAngles euler_from_quat(const UnitQuaternion& q) {
  const EulerAngles eta = euler_from_quat_unchecked(q);
  require_regular_pitch(eta.pitch);
  return eta;
}

Mat3 euler_rate_map(const EulerAngles& eta) {
  const double cp = std::cos(eta.pitch), sp = std::sin(eta.pitch);
  const double cy = std::cos(eta.yaw), sy = std::sin(eta.yaw);
  Mat3 t;
  t << cy * cp, -sy, 0.0,
       sy * cp, cy, 0.0,
       -sp, 0.0, 1.0;
  return t;
}

Mat3 euler_rate_map_inverse(const EulerAngles& eta) {
  require_regular_pitch(eta.pitch);
  const double cp = std::cos(eta.pitch), tp = std::tan(eta.pitch);
  const double cy = std::cos(eta.yaw), sy = std::sin(eta.yaw);
  Mat3 t;
  t << cy / cp, sy / cp, 0.0,
       -sy, cy, 0.0,
       cy * tp, sy * tp, 1.0;
  return t;
}

Mat3 euler_rate_map_dot(const EulerAngles& eta, const Vec3& eta_dot) {
  const double cp = std::cos(eta.pitch), sp = std::sin(eta.pitch);
  const double cy = std::cos(eta.yaw), sy = std::sin(eta.yaw);
  const double dp = eta_dot.y(), dy = eta_dot.z();
  Mat3 t;
  t << -sy * dy * cp - cy * sp * dp, -cy * dy, 0.0,
       cy * dy * cp - sy * sp * dp, -sy * dy, 0.0,
       -cp * dp, 0.0, 0.0;
  return t;
}

Mat6 repr_jacobian(const EulerAngles& eta) {
  Mat6 j = Mat6::Identity();
  j.bottomRightCorner<3, 3>() = euler_rate_map_inverse(eta);
  return j;
}

Mat6 repr_jacobian_inverse(const EulerAngles& eta) {
  require_regular_pitch(eta.pitch);
  Mat6 j = Mat6::Identity();
  j.bottomRightCorner<3, 3>() = euler_rate_map(eta);
  return j;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - std::numbers::pi;
}

double spectral_norm(const MatX& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatX> svd(m);
  return svd.singularValues()(0);
}

}  // namespace coopman
