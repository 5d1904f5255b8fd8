#pragma once

#include "coopman/spatial.hpp"

namespace coopman {

// Per pose axis (x, y, z, roll, pitch, yaw):
//   offset + sin_amplitude sin(w t) + cos_amplitude cos(w t)
struct SinusoidTrajectory {
  Vec6 offset = Vec6::Zero();
  Vec6 sin_amplitude = Vec6::Zero();
  Vec6 cos_amplitude = Vec6::Zero();
  Vec6 frequency = Vec6::Zero();  // rad/s

  // Upper bound on |pitch_d(t)|.
  double pitch_bound() const;
  // Upper bounds on |x_d(t)| and |x_d_dot(t)| (vector 2-norms).
  double pose_bound() const;
  double pose_rate_bound() const;
};

struct TrajectorySample {
  Vec6 pose;        // [p_d; eta_d]
  Vec6 pose_rate;
  Vec6 pose_accel;
  UnitQuaternion orientation;  // smooth in t
  Vec3 omega;
  Vec3 omega_dot;

  Vec6 twist() const;
  Vec6 twist_rate() const;
  Vec3 position() const { return pose.head<3>(); }
  EulerAngles euler() const { return EulerAngles::from_vector(pose.tail<3>()); }
};

TrajectorySample desired_trajectory(const SinusoidTrajectory& traj, double t);

}  // namespace coopman
