#include <doctest.h>

#include <Eigen/Geometry>

#include "coopman/errors.hpp"
#include "coopman/spatial.hpp"
#include "support.hpp"

using namespace coopman;
using coopman::testing::kPi;
using coopman::testing::max_abs;
using coopman::testing::Sampler;

namespace {

Eigen::Quaterniond to_eigen(const UnitQuaternion& q) { return {q.phi, q.eps.x(), q.eps.y(), q.eps.z()}; }

// Independent rotation oracle: Rodrigues from the quaternion's axis and angle.
Mat3 rodrigues(const UnitQuaternion& q) {
  const double s = q.eps.norm();
  if (s < 1e-300) return Mat3::Identity();
  const double angle = 2.0 * std::atan2(s, q.phi);
  const Mat3 k = skew(q.eps / s);
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

// Independent Z-Y-X oracle built from Eigen's axis-angle products.
Mat3 zyx(const EulerAngles& e) {
  return (Eigen::AngleAxisd(e.yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(e.pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(e.roll, Vec3::UnitX()))
      .toRotationMatrix();
}

Mat3 rotation_exp(const Vec3& w) {
  const double a = w.norm();
  if (a < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(a, w / a).toRotationMatrix();
}

bool same_rotation(const UnitQuaternion& a, const UnitQuaternion& b, double tol) {
  return (a.coeffs() - b.coeffs()).norm() < tol || (a.coeffs() + b.coeffs()).norm() < tol;
}

}  // namespace

TEST_CASE("skew: zero, basis and cross-product oracle") {
  CHECK(skew(Vec3::Zero()).isZero(0.0));
  CHECK(skew(Vec3::UnitX()) * Vec3::UnitY() == Vec3::UnitZ());
  Sampler s(11);
  for (int n = 0; n < 1000; ++n) {
    const Vec3 a = s.vec3(10.0), b = s.vec3(10.0);
    const Mat3 m = skew(a);
    CHECK(max_abs(m + m.transpose()) == 0.0);
    const Vec3 cross(a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(), a.x() * b.y() - a.y() * b.x());
    CHECK(max_abs(m * b - cross) < 1e-14 * std::max(1.0, a.norm() * b.norm()));
  }
}

TEST_CASE("quat_mul: identity, inverse and composition") {
  Sampler s(12);
  const UnitQuaternion z = s.quaternion();
  CHECK(max_abs(quat_mul(UnitQuaternion::identity(), z).coeffs() - z.coeffs()) < 1e-15);
  const UnitQuaternion one = quat_mul(z, quat_conj(z));
  CHECK(max_abs(one.coeffs() - Vec4(1, 0, 0, 0)) < 1e-15);
  for (int n = 0; n < 1000; ++n) {
    const UnitQuaternion a = s.quaternion(), b = s.quaternion();
    const UnitQuaternion ab = quat_mul(a, b);
    CHECK(std::abs(ab.norm() - 1.0) < 1e-12);
    CHECK(max_abs(rotation_matrix(ab) - rotation_matrix(a) * rotation_matrix(b)) < 1e-12);
    const Eigen::Quaterniond oracle = to_eigen(a) * to_eigen(b);
    CHECK(max_abs(ab.coeffs() - Vec4(oracle.w(), oracle.x(), oracle.y(), oracle.z())) < 1e-14);
  }
}

TEST_CASE("quat_conj: sign flip and transpose oracle") {
  CHECK(quat_conj(UnitQuaternion::identity()).coeffs() == Vec4(1, 0, 0, 0));
  CHECK(quat_conj(UnitQuaternion::raw(0, Vec3::UnitX())).coeffs() == Vec4(0, -1, 0, 0));
  Sampler s(13);
  for (int n = 0; n < 1000; ++n) {
    const UnitQuaternion z = s.quaternion();
    CHECK(max_abs(rotation_matrix(quat_conj(z)) - rotation_matrix(z).transpose()) < 1e-12);
  }
}

TEST_CASE("rotation_matrix matches the Rodrigues oracle") {
  Sampler s(14);
  for (int n = 0; n < 1000; ++n) {
    const UnitQuaternion z = s.quaternion();
    CHECK(max_abs(rotation_matrix(z) - rodrigues(z)) < 1e-12);
  }
}

TEST_CASE("e_matrix: identity layout, orthonormal columns, rate inversion") {
  Mat43 expected = Mat43::Zero();
  expected.bottomRows<3>() = Mat3::Identity();
  CHECK(e_matrix(UnitQuaternion::identity()) == expected);
  Sampler s(15);
  double worst = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const UnitQuaternion z = s.quaternion();
    const Mat43 e = e_matrix(z);
    worst = std::max(worst, max_abs(e.transpose() * e - Mat3::Identity()));
    const Vec3 w = s.vec3(5.0);
    CHECK(max_abs(2.0 * e.transpose() * quat_derivative(z, w) - w) < 1e-13);
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("quat_derivative: zero rate, direct substitution, finite difference") {
  Sampler s(16);
  CHECK(quat_derivative(s.quaternion(), Vec3::Zero()).isZero(0.0));
  CHECK(quat_derivative(UnitQuaternion::identity(), Vec3(0, 0, 2)) == Vec4(0, 0, 0, 1));
  // Exact propagation under constant inertial rate: R(t) = exp(S(w) t) R(0).
  const double h = 1e-5;
  for (int n = 0; n < 200; ++n) {
    const UnitQuaternion z = s.quaternion();
    const Vec3 w = s.vec3(3.0);
    const auto step = [&](double t) {
      const Eigen::Quaterniond dq(Eigen::AngleAxisd(w.norm() * t, w.normalized()));
      const Eigen::Quaterniond q = dq * to_eigen(z);
      return Vec4(q.w(), q.x(), q.y(), q.z());
    };
    const Vec4 fd = (step(h) - step(-h)) / (2.0 * h);
    CHECK((fd - quat_derivative(z, w)).norm() < 1e-6);
  }
}

TEST_CASE("quat_from_euler: identity, rotation oracle, near-singular round trip") {
  CHECK(quat_from_euler({0, 0, 0}).coeffs() == Vec4(1, 0, 0, 0));
  Sampler s(17);
  for (int n = 0; n < 1000; ++n) {
    const EulerAngles e = s.euler();
    const UnitQuaternion z = quat_from_euler(e);
    CHECK(z.phi >= 0.0);
    CHECK(max_abs(rotation_matrix(z) - zyx(e)) < 1e-12);
    CHECK(max_abs(rotation_from_euler(e) - zyx(e)) < 1e-12);
    CHECK(same_rotation(quat_from_euler_smooth(e), z, 1e-14));
  }
  const EulerAngles near{0.0, kPi / 2 - 1e-3, 0.0};
  const EulerAngles back = euler_from_quat(quat_from_euler(near));
  CHECK(std::abs(back.roll - near.roll) < 1e-9);
  CHECK(std::abs(back.pitch - near.pitch) < 1e-9);
  CHECK(std::abs(back.yaw - near.yaw) < 1e-9);
}

TEST_CASE("euler round trip over the regular set") {
  Sampler s(18);
  double worst = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const EulerAngles e = s.euler(1e-3);
    const EulerAngles back = euler_from_quat(quat_from_euler(e));
    worst = std::max({worst, std::abs(back.roll - e.roll), std::abs(back.pitch - e.pitch),
                      std::abs(back.yaw - e.yaw)});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("euler_from_quat refuses the pitch singularity") {
  const UnitQuaternion up = quat_from_euler({0.3, kPi / 2, -0.2});
  CHECK_THROWS_AS(euler_from_quat(up), Error);
  try {
    euler_from_quat(up);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RepresentationSingularity);
  }
  CHECK_NOTHROW(euler_from_quat_unchecked(up));
  CHECK(std::abs(euler_from_quat_unchecked(up).pitch - kPi / 2) < 1e-6);
}

TEST_CASE("quat_error: identical, opposite, product form, expansion") {
  Sampler s(19);
  const UnitQuaternion z = s.quaternion();
  CHECK(max_abs(quat_error(z, z).coeffs() - Vec4(1, 0, 0, 0)) < 1e-15);
  CHECK(max_abs(quat_error(z, -z).coeffs() - Vec4(-1, 0, 0, 0)) < 1e-15);
  for (int n = 0; n < 1000; ++n) {
    const UnitQuaternion d = s.quaternion(), o = s.quaternion();
    const UnitQuaternion e = quat_error(d, o);
    CHECK(max_abs(e.coeffs() - quat_mul(d, quat_conj(o)).coeffs()) < 1e-14);
    CHECK(std::abs(e.phi - (o.phi * d.phi + o.eps.dot(d.eps))) < 1e-14);
    CHECK(max_abs(e.eps - (o.phi * d.eps - d.phi * o.eps + skew(o.eps) * d.eps)) < 1e-14);
  }
}

TEST_CASE("quaternion norm survives long operation chains") {
  Sampler s(20);
  UnitQuaternion z = s.quaternion();
  for (int n = 0; n < 100000; ++n) {
    z = quat_mul(z, s.quaternion());
    if (n % 3 == 0) z = quat_error(s.quaternion(), z);
    REQUIRE(std::abs(z.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("repr_jacobian: identity at zero, inverse bound, norm closed form") {
  CHECK(repr_jacobian({0, 0, 0}) == Mat6::Identity());
  Sampler s(21);
  double worst_inverse = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const EulerAngles e = s.euler(1e-2);
    const double sp = std::abs(std::sin(e.pitch));
    worst_inverse = std::max(worst_inverse, spectral_norm(repr_jacobian_inverse(e)));
    const double closed = std::sqrt((sp + 1.0) / (1.0 - sp * sp));
    CHECK(std::abs(spectral_norm(repr_jacobian(e)) - closed) < 1e-9 * closed);
  }
  CHECK(worst_inverse <= std::sqrt(2.0) + 1e-12);
}

TEST_CASE("repr_jacobian maps twists to Euler rates (finite difference)") {
  Sampler s(22);
  const double h = 1e-6;
  for (int n = 0; n < 500; ++n) {
    const EulerAngles e = s.euler(0.2);
    const Vec3 w = s.vec3(1.0);
    const Mat3 r0 = zyx(e);
    const auto angles = [&](double t) { return euler_from_quat(quat_from_rotation(rotation_exp(w * t) * r0)).vector(); };
    Vec3 rate = (angles(h) - angles(-h)) / (2.0 * h);
    for (int k = 0; k < 3; ++k) rate[k] = wrap_angle(rate[k] * 2.0 * h) / (2.0 * h);
    Vec6 v;
    v << Vec3::Zero(), w;
    const Vec6 x_dot = repr_jacobian(e) * v;
    CHECK((x_dot.tail<3>() - rate).norm() < 1e-6);
    CHECK(max_abs(euler_rate_map(e) * rate - w) < 1e-6);
  }
}

TEST_CASE("repr_jacobian inverse pair and rate-map derivative") {
  Sampler s(23);
  const double limit = 85.0 * kPi / 180.0;
  for (int n = 0; n < 2000; ++n) {
    EulerAngles e = s.euler();
    e.pitch = s.uniform(-limit, limit);
    CHECK(max_abs(repr_jacobian(e) * repr_jacobian_inverse(e) - Mat6::Identity()) < 1e-10);
    const Vec3 rate = s.vec3(1.0);
    const double h = 1e-6;
    const EulerAngles ep = EulerAngles::from_vector(e.vector() + h * rate);
    const EulerAngles em = EulerAngles::from_vector(e.vector() - h * rate);
    const Mat3 fd = (euler_rate_map(ep) - euler_rate_map(em)) / (2.0 * h);
    CHECK(max_abs(fd - euler_rate_map_dot(e, rate)) < 1e-7);
  }
  CHECK_THROWS_AS(repr_jacobian({0, kPi / 2, 0}), Error);
  CHECK_THROWS_AS(repr_jacobian_inverse({0, -kPi / 2, 0}), Error);
}

TEST_CASE("wrap_angle and spectral_norm basics") {
  CHECK(std::abs(wrap_angle(3 * kPi / 2) + kPi / 2) < 1e-15);
  CHECK(std::abs(wrap_angle(-3 * kPi / 2) - kPi / 2) < 1e-15);
  CHECK(wrap_angle(0.25) == 0.25);
  MatX m(2, 2);
  m << 3, 0, 0, -4;
  CHECK(std::abs(spectral_norm(m) - 4.0) < 1e-14);
}
