#include "coopman/trajectory.hpp"

#include <cmath>

namespace coopman {

double SinusoidTrajectory::pitch_bound() const {
  return std::abs(offset[4]) + std::hypot(sin_amplitude[4], cos_amplitude[4]);
}

double SinusoidTrajectory::pose_bound() const {
  double sq = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double b = std::abs(offset[k]) + std::hypot(sin_amplitude[k], cos_amplitude[k]);
    sq += b * b;
  }
  return std::sqrt(sq);
}

double SinusoidTrajectory::pose_rate_bound() const {
  double sq = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double b = std::abs(frequency[k]) * std::hypot(sin_amplitude[k], cos_amplitude[k]);
    sq += b * b;
  }
  return std::sqrt(sq);
}

Vec6 TrajectorySample::twist() const {
  Vec6 v;
  v << pose_rate.head<3>(), omega;
  return v;
}

Vec6 TrajectorySample::twist_rate() const {
  Vec6 v;
  v << pose_accel.head<3>(), omega_dot;
  return v;
}

TrajectorySample desired_trajectory(const SinusoidTrajectory& traj, double t) {
  TrajectorySample s;
  for (int k = 0; k < 6; ++k) {
    const double w = traj.frequency[k];
    const double sn = std::sin(w * t), cs = std::cos(w * t);
    const double a = traj.sin_amplitude[k], b = traj.cos_amplitude[k];
    s.pose[k] = traj.offset[k] + a * sn + b * cs;
    s.pose_rate[k] = w * (a * cs - b * sn);
    s.pose_accel[k] = -w * w * (a * sn + b * cs);
  }
  const EulerAngles eta = s.euler();
  const Vec3 eta_dot = s.pose_rate.tail<3>();
  const Mat3 rate_map = euler_rate_map(eta);
  s.orientation = quat_from_euler_smooth(eta);
  s.omega = rate_map * eta_dot;
  s.omega_dot = euler_rate_map_dot(eta, eta_dot) * eta_dot + rate_map * s.pose_accel.tail<3>();
  return s;
}

}  // namespace coopman
