#include "coopman/agent_model.hpp"

#include <cmath>
#include <string>

#include "coopman/errors.hpp"

namespace coopman {

namespace {

constexpr double kGolden = 1.6180339887498949;  // spectral norm of every shape S_k

// Lagrangian terms from a mass matrix and its partials: C_ab = sum_c Gamma_abc qd_c.
MatX christoffel_coriolis(const std::vector<MatX>& dmass, const VecX& qd) {
  const int n = static_cast<int>(qd.size());
  MatX c = MatX::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) {
        sum += 0.5 * (dmass[k](a, b) + dmass[b](a, k) - dmass[a](b, k)) * qd[k];
      }
      c(a, b) = sum;
    }
  }
  return c;
}

// ---- Planar3R -------------------------------------------------------------

std::array<double, 3> absolute_angles(const Planar3RParams& p, const VecX& q) {
  std::array<double, 3> phi{};
  double acc = p.base_angle;
  for (int k = 0; k < 3; ++k) {
    acc += q[k];
    phi[k] = acc;
  }
  return phi;
}

// Base parameters: P00 P11 P22 P01 P02 P12 G0 G1 G2.
VecX planar_parameters(const Planar3RParams& p) {
  const auto& l = p.link_lengths;
  const auto& m = p.link_masses;
  std::array<double, 3> r{};
  for (int k = 0; k < 3; ++k) r[k] = p.com_fractions[k] * l[k];
  auto w = [&](int k, int j) { return j < k ? l[j] : r[k]; };
  Mat3 pm = Mat3::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = std::max(i, j); k < 3; ++k) pm(i, j) += m[k] * w(k, i) * w(k, j);
    }
    pm(i, i) += p.link_inertias[i];
  }
  VecX theta(9);
  theta << pm(0, 0), pm(1, 1), pm(2, 2), pm(0, 1), pm(0, 2), pm(1, 2),
      m[0] * r[0] + l[0] * (m[1] + m[2]), m[1] * r[1] + l[1] * m[2], m[2] * r[2];
  return theta;
}

JointDynamics planar_dynamics(const Planar3RParams& p, double g0, const VecX& theta, const VecX& q,
                              const VecX& qd) {
  Mat3 pm;
  pm << theta[0], theta[3], theta[4],
        theta[3], theta[1], theta[5],
        theta[4], theta[5], theta[2];
  const auto phi = absolute_angles(p, q);

  JointDynamics out{MatX::Zero(3, 3), MatX::Zero(3, 3), VecX::Zero(3)};
  std::vector<MatX> dmass(3, MatX::Zero(3, 3));
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int i = a; i < 3; ++i) {
        for (int j = b; j < 3; ++j) {
          const double d = phi[i] - phi[j];
          out.mass(a, b) += pm(i, j) * std::cos(d);
          const double s = pm(i, j) * std::sin(d);
          for (int c = 0; c < 3; ++c) {
            const int sel = (c <= i ? 1 : 0) - (c <= j ? 1 : 0);
            if (sel != 0) dmass[c](a, b) -= s * sel;
          }
        }
      }
    }
  }
  out.coriolis = christoffel_coriolis(dmass, qd);
  for (int a = 0; a < 3; ++a) {
    for (int j = a; j < 3; ++j) out.gravity[a] -= g0 * std::cos(phi[j]) * theta[6 + j];
  }
  return out;
}

// ---- Synthetic6D ----------------------------------------------------------

VecX synthetic_parameters(const Synthetic6DParams& p) {
  VecX theta(28);
  int idx = 0;
  for (int i = 0; i < 6; ++i) {
    for (int j = i; j < 6; ++j) theta[idx++] = p.base_inertia(i, j);
  }
  for (int k = 0; k < 6; ++k) theta[idx++] = p.modulation[k];
  theta[idx] = p.gravity_mass;
  return theta;
}

JointDynamics synthetic_dynamics(double g0, const VecX& theta, const VecX& q, const VecX& qd) {
  Mat6 a;
  int idx = 0;
  for (int i = 0; i < 6; ++i) {
    for (int j = i; j < 6; ++j) {
      a(i, j) = theta[idx];
      a(j, i) = theta[idx];
      ++idx;
    }
  }
  JointDynamics out{MatX(a), MatX::Zero(6, 6), VecX::Zero(6)};
  std::vector<MatX> dmass(6);
  for (int k = 0; k < 6; ++k) {
    const Mat6 shape = synthetic_shape(k);
    const double b = theta[21 + k];
    out.mass += b * std::sin(q[k]) * shape;
    dmass[k] = b * std::cos(q[k]) * shape;
  }
  out.coriolis = christoffel_coriolis(dmass, qd);
  out.gravity[2] = theta[27] * g0;
  return out;
}

}  // namespace

Mat6 synthetic_shape(int k) {
  const int m = (k + 1) % 6;
  Mat6 s = Mat6::Zero();
  s(k, k) = 1.0;
  s(k, m) = 1.0;
  s(m, k) = 1.0;
  return s;
}

AgentModel::AgentModel(std::variant<Planar3RParams, Synthetic6DParams> params, double gravity)
    : params_(std::move(params)), gravity_(gravity) {
  if (planar()) {
    axes_ = {0, 2, 4};
  } else {
    axes_ = {0, 1, 2, 3, 4, 5};
  }
}

AgentModel AgentModel::planar3r(const Planar3RParams& params, double gravity) {
  for (int k = 0; k < 3; ++k) {
    if (!(params.link_lengths[k] > 0.0) || params.link_masses[k] < 0.0 || params.link_inertias[k] < 0.0 ||
        params.com_fractions[k] < 0.0 || params.com_fractions[k] > 1.0) {
      throw Error(ErrorCode::Config, "planar3r link " + std::to_string(k) + " has invalid geometry or mass");
    }
  }
  if (!(params.joint_damping.minCoeff() >= 0.0)) {
    throw Error(ErrorCode::Config, "planar3r joint_damping must be non-negative");
  }
  if (params.base_position.y() != 0.0) {
    throw Error(ErrorCode::Config, "planar3r base must lie in the x-z plane");
  }
  if (params.elbow != 1 && params.elbow != -1) {
    throw Error(ErrorCode::Config, "planar3r elbow must be +1 or -1");
  }
  return AgentModel(params, gravity);
}

AgentModel AgentModel::synthetic6d(const Synthetic6DParams& params, double gravity) {
  const Mat6& a = params.base_inertia;
  if (!a.isApprox(a.transpose(), 1e-12)) {
    throw Error(ErrorCode::Config, "synthetic6d base inertia must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat6> eig(a);
  double modulation = 0.0;
  for (double b : params.modulation) modulation += std::abs(b);
  if (!(eig.eigenvalues().minCoeff() > kGolden * modulation)) {
    throw Error(ErrorCode::Config, "synthetic6d inertia modulation can break positive definiteness");
  }
  return AgentModel(params, gravity);
}

AgentKind AgentModel::kind() const { return planar() ? AgentKind::Planar3R : AgentKind::Synthetic6D; }

int AgentModel::dof() const { return planar() ? 3 : 6; }

VecX AgentModel::torque_limits() const {
  if (const auto* p = planar()) return p->torque_limits;
  return synthetic()->torque_limits;
}

int AgentModel::parameter_count() const { return planar() ? 9 : 28; }

VecX AgentModel::parameters() const {
  if (const auto* p = planar()) return planar_parameters(*p);
  return synthetic_parameters(*synthetic());
}

JointDynamics AgentModel::joint_dynamics(const VecX& q, const VecX& qd) const {
  return joint_dynamics_with(parameters(), q, qd);
}

JointDynamics AgentModel::joint_dynamics_with(const VecX& params, const VecX& q, const VecX& qd) const {
  if (const auto* p = planar()) return planar_dynamics(*p, gravity_, params, q, qd);
  return synthetic_dynamics(gravity_, params, q, qd);
}

MatX AgentModel::joint_regressor(const VecX& q, const VecX& qd, const VecX& qd_ref, const VecX& qdd_ref) const {
  const int n = parameter_count();
  MatX y(dof(), n);
  VecX unit = VecX::Zero(n);
  for (int k = 0; k < n; ++k) {
    unit[k] = 1.0;
    const JointDynamics d = joint_dynamics_with(unit, q, qd);
    y.col(k) = d.mass * qdd_ref + d.coriolis * qd_ref + d.gravity;
    unit[k] = 0.0;
  }
  return y;
}

double AgentModel::potential_energy(const VecX& q) const {
  const VecX theta = parameters();
  if (const auto* p = planar()) {
    const auto phi = absolute_angles(*p, q);
    double u = 0.0;
    for (int j = 0; j < 3; ++j) u -= gravity_ * std::sin(phi[j]) * theta[6 + j];
    double mass = 0.0;
    for (double m : p->link_masses) mass += m;
    return u + mass * gravity_ * p->base_position.z();
  }
  return theta[27] * gravity_ * q[2];
}

MatX AgentModel::jacobian(const VecX& q) const {
  const auto* p = planar();
  if (!p) return MatX::Identity(6, 6);
  const auto phi = absolute_angles(*p, q);
  MatX j = MatX::Zero(3, 3);
  for (int c = 0; c < 3; ++c) {
    for (int k = c; k < 3; ++k) {
      j(0, c) -= p->link_lengths[k] * std::sin(phi[k]);
      j(1, c) -= p->link_lengths[k] * std::cos(phi[k]);
    }
    j(2, c) = 1.0;
  }
  return j;
}

MatX AgentModel::jacobian_dot(const VecX& q, const VecX& qd) const {
  const auto* p = planar();
  if (!p) return MatX::Zero(6, 6);
  const auto phi = absolute_angles(*p, q);
  std::array<double, 3> rate{};
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) {
    acc += qd[k];
    rate[k] = acc;
  }
  MatX jd = MatX::Zero(3, 3);
  for (int c = 0; c < 3; ++c) {
    for (int k = c; k < 3; ++k) {
      jd(0, c) -= p->link_lengths[k] * std::cos(phi[k]) * rate[k];
      jd(1, c) += p->link_lengths[k] * std::sin(phi[k]) * rate[k];
    }
  }
  return jd;
}

Vec3 AgentModel::ee_position(const VecX& q) const {
  const auto* p = planar();
  if (!p) return q.head<3>();
  const auto phi = absolute_angles(*p, q);
  Vec3 pos = p->base_position;
  for (int k = 0; k < 3; ++k) {
    pos.x() += p->link_lengths[k] * std::cos(phi[k]);
    pos.z() -= p->link_lengths[k] * std::sin(phi[k]);
  }
  return pos;
}

double AgentModel::ee_angle(const VecX& q) const {
  const auto* p = planar();
  if (!p) throw Error(ErrorCode::UnsupportedModel, "ee_angle is defined for planar agents only");
  return absolute_angles(*p, q)[2];
}

VecX AgentModel::planar_inverse_kinematics(const Vec3& position, double angle) const {
  const auto* p = planar();
  if (!p) throw Error(ErrorCode::UnsupportedModel, "closed-form IK is defined for planar agents only");
  const auto& l = p->link_lengths;
  const Vec3 wrist = position - p->base_position -
                     l[2] * Vec3(std::cos(angle), 0.0, -std::sin(angle));
  const double x = wrist.x();
  const double y = -wrist.z();
  const double c2 = (x * x + y * y - l[0] * l[0] - l[1] * l[1]) / (2.0 * l[0] * l[1]);
  if (!(std::abs(c2) < 1.0)) {
    throw Error(ErrorCode::KinematicSingularity, "planar target outside the reachable workspace");
  }
  const double q2 = p->elbow * std::acos(c2);
  const double phi1 = std::atan2(y, x) - std::atan2(l[1] * std::sin(q2), l[0] + l[1] * std::cos(q2));
  VecX q(3);
  q << wrap_angle(phi1 - p->base_angle), q2, wrap_angle(angle - phi1 - q2);
  return q;
}

void require_regular(const AgentModel& model, const MatX& jacobian) {
  const double det = (jacobian * jacobian.transpose()).determinant();
  if (!(det >= 1e-8)) {
    throw Error(ErrorCode::KinematicSingularity,
                "agent Jacobian is singular (det(J J^T)=" + std::to_string(det) + ")");
  }
  (void)model;
}

namespace {

template <typename Dense>
Mat6 embed_square(const std::vector<int>& axes, const Dense& m) {
  Mat6 out = Mat6::Zero();
  for (std::size_t r = 0; r < axes.size(); ++r) {
    for (std::size_t c = 0; c < axes.size(); ++c) out(axes[r], axes[c]) = m(r, c);
  }
  return out;
}

VecX restrict(const std::vector<int>& axes, const Vec6& v) {
  VecX out(axes.size());
  for (std::size_t r = 0; r < axes.size(); ++r) out[r] = v[axes[r]];
  return out;
}

}  // namespace

TaskDynamics task_dynamics(const AgentModel& model, const VecX& q, const VecX& qd) {
  const MatX j = model.jacobian(q);
  require_regular(model, j);
  const JointDynamics jd = model.joint_dynamics(q, qd);
  const MatX jinv = j.partialPivLu().inverse();
  const MatX jdot = model.jacobian_dot(q, qd);
  const auto& axes = model.task_axes();
  TaskDynamics out;
  out.mass = embed_square(axes, MatX(jinv.transpose() * jd.mass * jinv));
  out.coriolis = embed_square(axes, MatX(jinv.transpose() * (jd.coriolis - jd.mass * jinv * jdot) * jinv));
  const VecX g = jinv.transpose() * jd.gravity;
  for (std::size_t r = 0; r < axes.size(); ++r) out.gravity[axes[r]] = g[r];
  if (const auto* p = model.planar(); p != nullptr && !p->joint_damping.isZero()) {
    const MatX b = p->joint_damping.asDiagonal();
    out.damping = embed_square(axes, MatX(jinv.transpose() * b * jinv));
  }
  return out;
}

MatX task_regressor(const AgentModel& model, const VecX& q, const VecX& qd, const Vec6& b, const Vec6& a) {
  const MatX j = model.jacobian(q);
  require_regular(model, j);
  const auto lu = j.partialPivLu();
  const auto& axes = model.task_axes();
  const VecX qd_ref = lu.solve(restrict(axes, b));
  const VecX qdd_ref = lu.solve(restrict(axes, a) - model.jacobian_dot(q, qd) * qd_ref);
  const MatX yq = model.joint_regressor(q, qd, qd_ref, qdd_ref);
  const MatX yx = lu.inverse().transpose() * yq;
  MatX out = MatX::Zero(6, yq.cols());
  for (std::size_t r = 0; r < axes.size(); ++r) out.row(axes[r]) = yx.row(r);
  return out;
}

VecX joint_velocity(const AgentModel& model, const VecX& q, const Vec6& twist) {
  const MatX j = model.jacobian(q);
  require_regular(model, j);
  return j.partialPivLu().solve(restrict(model.task_axes(), twist));
}

VecX joint_torque(const AgentModel& model, const VecX& q, const Vec6& wrench) {
  return model.jacobian(q).transpose() * restrict(model.task_axes(), wrench);
}

}  // namespace coopman
