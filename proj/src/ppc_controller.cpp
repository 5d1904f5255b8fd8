#include "coopman/ppc_controller.hpp"

#include <cmath>
#include <string>

#include "coopman/errors.hpp"

namespace coopman {

namespace {

constexpr int kPitchAxis = 4;

const char* axis_name(int k) {
  static const char* names[] = {"x", "y", "z", "roll", "pitch", "yaw"};
  return names[k];
}

double active_norm(const Vec6& v, const std::vector<int>& axes) {
  double sq = 0.0;
  for (int k : axes) sq += v[k] * v[k];
  return std::sqrt(sq);
}

AxisFunctions build_envelopes(const Vec6& error0, const EnvelopeSpec& spec, double alpha,
                              const std::vector<int>& axes, const char* loop) {
  AxisFunctions out{};
  const double norm0 = active_norm(error0, axes);
  for (int k : axes) {
    double rho0 = spec.rho_0[k];
    if (spec.mode == EnvelopeMode::AxisOffset) rho0 = std::abs(error0[k]) + spec.offset[k];
    if (spec.mode == EnvelopeMode::NormOffset) rho0 = norm0 + alpha;
    out[k] = PerformanceFunction{rho0, spec.rho_inf[k], spec.decay[k]};
  }
  (void)loop;
  return out;
}

void check_inside(const Vec6& error0, const AxisFunctions& env, const std::vector<int>& axes, const char* loop) {
  for (int k : axes) {
    env[k].validate();
    if (!(std::abs(error0[k]) < env[k].rho_0)) {
      throw Error(ErrorCode::InitialConditionViolation,
                  std::string(loop) + " axis " + axis_name(k) + ": |e(0)|=" + std::to_string(std::abs(error0[k])) +
                      " is not inside rho_0=" + std::to_string(env[k].rho_0));
    }
  }
}

}  // namespace

void PerformanceFunction::validate() const {
  if (!(rho_inf > 0.0 && rho_inf < rho_0 && decay > 0.0 && std::isfinite(rho_0))) {
    throw Error(ErrorCode::Config, "performance function needs 0 < rho_inf < rho_0 and decay > 0 (rho_0=" +
                                       std::to_string(rho_0) + ", rho_inf=" + std::to_string(rho_inf) + ")");
  }
}

double PerformanceFunction::value(double t) const { return (rho_0 - rho_inf) * std::exp(-decay * t) + rho_inf; }

double PerformanceFunction::rate(double t) const { return -decay * (rho_0 - rho_inf) * std::exp(-decay * t); }

void PpcGains::validate() const {
  if (!(g_s > 0.0 && g_v > 0.0 && theta_star > 0.0 && alpha > 0.0)) {
    throw Error(ErrorCode::Config, "controller.ppc gains g_s, g_v, theta_star, alpha must be positive");
  }
}

FunnelSlice transform(const Vec6& error, const AxisFunctions& envelopes, double t, const std::vector<int>& axes,
                      std::string_view loop) {
  FunnelSlice s;
  for (int k : axes) {
    const double rho = envelopes[k].value(t);
    const double xi = error[k] / rho;
    if (!(std::abs(xi) < 1.0)) throw FunnelViolation(t, k, loop, error[k], rho);
    s.rho[k] = rho;
    s.xi[k] = xi;
    s.eps[k] = std::log((1.0 + xi) / (1.0 - xi));
    s.r[k] = 2.0 / (1.0 - xi * xi);
  }
  return s;
}

Vec6 pose_error_ppc(const Vec3& object_position, const EulerAngles& object_euler, const TrajectorySample& desired) {
  Vec6 e;
  e.head<3>() = object_position - desired.position();
  const Vec3 d = object_euler.vector() - desired.pose.tail<3>();
  for (int k = 0; k < 3; ++k) e[3 + k] = wrap_angle(d[k]);
  return e;
}

Vec6 reference_velocity_vr(const FunnelSlice& pose, const Vec6& pose_error, const TrajectorySample& desired,
                           double g_s) {
  const EulerAngles eta = EulerAngles::from_vector(desired.pose.tail<3>() + pose_error.tail<3>());
  const Vec6 scaled = pose.r.cwiseProduct(pose.eps).cwiseQuotient(pose.rho);
  return -g_s * (repr_jacobian_inverse(eta) * scaled);
}

Vec6 control_ppc(const Mat6& load_block, const FunnelSlice& velocity, double g_v) {
  const Vec6 scaled = velocity.r.cwiseProduct(velocity.eps).cwiseQuotient(velocity.rho);
  return -g_v * (load_block * scaled);
}

AxisFunctions velocity_envelopes(const Vec6& velocity_error0, const EnvelopeSpec& spec, const PpcGains& gains,
                                 const std::vector<int>& axes) {
  AxisFunctions env = build_envelopes(velocity_error0, spec, gains.alpha, axes, "velocity");
  check_inside(velocity_error0, env, axes, "velocity");
  return env;
}

Envelopes funnel_init(const Vec6& pose_error0, const Vec6& object_twist0, const TrajectorySample& desired0,
                      const EnvelopeSpec& pose, const EnvelopeSpec& velocity, const PpcGains& gains,
                      const std::vector<int>& axes) {
  Envelopes env;
  env.pose = build_envelopes(pose_error0, pose, gains.alpha, axes, "pose");
  for (int k : axes) {
    if (k == kPitchAxis) env.pose[k].rho_0 = gains.theta_star;
  }
  check_inside(pose_error0, env.pose, axes, "pose");
  const FunnelSlice s0 = transform(pose_error0, env.pose, 0.0, axes, "pose");
  const Vec6 vr0 = reference_velocity_vr(s0, pose_error0, desired0, gains.g_s);
  env.velocity = velocity_envelopes(object_twist0 - vr0, velocity, gains, axes);
  return env;
}

PpcController::PpcController(CooperativeSystem team, SinusoidTrajectory trajectory, PpcGains gains, EnvelopeSpec pose,
                             EnvelopeSpec velocity)
    : team_(std::move(team)),
      trajectory_(trajectory),
      gains_(gains),
      pose_spec_(pose),
      velocity_spec_(velocity) {
  gains_.validate();
  if (trajectory_.pitch_bound() + gains_.theta_star >= 1.5707963267948966) {
    throw Error(ErrorCode::PitchBoundViolation, "desired pitch bound plus theta_star must stay below pi/2");
  }
}

Envelopes PpcController::initialize(int agent, const AgentLocalView& view) const {
  const ObjectEstimate obj = object_from_agent(team_.grasps[agent], view, team_.planar);
  const TrajectorySample desired = desired_trajectory(trajectory_, view.t);
  const Vec6 e_s = pose_error_ppc(obj.position, euler_from_quat(obj.orientation), desired);
  return funnel_init(e_s, obj.twist, desired, pose_spec_, velocity_spec_, gains_, team_.active_axes());
}

PpcOutput PpcController::evaluate(int agent, const AgentLocalView& view, const Envelopes& envelopes) const {
  const auto axes = team_.active_axes();
  PpcOutput out;
  out.object = object_from_agent(team_.grasps[agent], view, team_.planar);
  out.object_euler = euler_from_quat(out.object.orientation);
  const TrajectorySample desired = desired_trajectory(trajectory_, view.t);
  out.pose_error = pose_error_ppc(out.object.position, out.object_euler, desired);
  out.pose = transform(out.pose_error, envelopes.pose, view.t, axes, "pose");
  out.reference = reference_velocity_vr(out.pose, out.pose_error, desired, gains_.g_s);
  out.velocity_error = out.object.twist - out.reference;
  out.velocity = transform(out.velocity_error, envelopes.velocity, view.t, axes, "velocity");
  const Mat6 j_mi = load_distribution_block(out.object.rotation, team_.grasps, team_.distribution, agent);
  out.wrench = control_ppc(j_mi, out.velocity, gains_.g_v);
  return out;
}

}  // namespace coopman
