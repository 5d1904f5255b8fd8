#include "coopman/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "coopman/log.hpp"

namespace coopman {

namespace {

constexpr int kPos = 0;
constexpr int kQuat = 3;
constexpr int kTwist = 7;
constexpr int kChi = 13;
constexpr int kBase = 16;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Stacked wrench and estimate rates applied over one controller interval.
struct Control {
  VecX wrench;
  VecX rates;
};

ObjectState decode_object(const VecX& x) {
  ObjectState o;
  o.position = x.segment<3>(kPos);
  o.orientation = UnitQuaternion::from_coeffs(x.segment<4>(kQuat));
  o.twist = x.segment<6>(kTwist);
  return o;
}

AgentLocalView view_of(const CooperativeSystem& sys, int i, const ObjectState& obj,
                       const std::vector<AgentJointState>& joints, double t) {
  return make_local_view(sys.agents[i], joints[i], end_effector_state(obj, sys.grasps[i]), t);
}

// Extreme eigenvalues of M~^-1 restricted to the active axes.
void active_block_inverse_extremes(const Mat6& m, const std::vector<int>& axes, double* inv_upper,
                                   double* inv_lower) {
  const int n = static_cast<int>(axes.size());
  MatX sub(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) sub(r, c) = m(axes[r], axes[c]);
  }
  const Eigen::SelfAdjointEigenSolver<MatX> eig(sub);
  *inv_upper = 1.0 / eig.eigenvalues().minCoeff();
  *inv_lower = 1.0 / eig.eigenvalues().maxCoeff();
}

double masked_norm(const Vec6& v, const std::vector<int>& axes) {
  double s = 0.0;
  for (int k : axes) s += v[k] * v[k];
  return std::sqrt(s);
}

double limit_of(const AgentModel& m, int j) { return m.torque_limits()[j]; }

}  // namespace

// ---------------------------------------------------------------------------
// Bound sampling

TeamBounds sample_team_bounds(const Scenario& sc, int samples, std::uint64_t seed) {
  const CooperativeSystem& sys = sc.system;
  const auto axes = sys.active_axes();
  const int n = sys.agent_count();
  TeamBounds out;
  out.load_block_norms.assign(n, 0.0);
  out.torque_map_norms.assign(n, 0.0);
  out.max_joint_norms.assign(n, 0.0);
  out.model.inv_mass_upper = 0.0;
  out.model.inv_mass_lower = kInf;

  // Pose region: the pose envelopes at t when PPC is configured, otherwise a
  // fixed band around the desired trajectory.
  AxisFunctions pose{};
  for (auto& f : pose) f = PerformanceFunction{0.05, 0.01, 1.0};
  if (sc.ppc) {
    const ObjectState obj0 = sc.initial_state();
    const auto joints0 = agent_states_from_object(sys, obj0, Vec3::Zero());
    const PpcController ctl(sys, sc.trajectory, sc.ppc->gains, sc.ppc->pose, sc.ppc->velocity);
    pose = ctl.initialize(0, view_of(sys, 0, obj0, joints0, 0.0)).pose;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> when(0.0, sc.sim.duration);
  const DisturbanceModel none = DisturbanceModel::none(n, axes);

  for (int s = 0; s < samples; ++s) {
    const double t = when(rng);
    const TrajectorySample d = desired_trajectory(sc.trajectory, t);
    Vec6 pose_sample = d.pose;
    for (int k : axes) pose_sample[k] += unit(rng) * pose[k].value(t);
    ObjectState obj;
    obj.position = pose_sample.head<3>();
    obj.orientation = quat_from_euler(EulerAngles::from_vector(pose_sample.tail<3>()));
    Vec3 chi = Vec3::Zero();
    if (!sys.planar) chi = Vec3(unit(rng), unit(rng), unit(rng)) * std::numbers::pi;

    std::vector<AgentJointState> joints;
    try {
      joints = agent_states_from_object(sys, obj, chi);
    } catch (const Error&) {
      continue;  // outside the reachable workspace
    }
    const CoupledTerms terms = assemble_coupled(sys, obj, joints, none, t);
    double inv_upper = 0.0, inv_lower = 0.0;
    active_block_inverse_extremes(terms.mass, axes, &inv_upper, &inv_lower);
    out.model.inv_mass_upper = std::max(out.model.inv_mass_upper, inv_upper);
    out.model.inv_mass_lower = std::min(out.model.inv_mass_lower, inv_lower);
    out.model.gravity = std::max(out.model.gravity, masked_norm(terms.gravity, axes));

    // C~ is linear in the twist; probe unit directions on the active axes.
    std::vector<Vec6> dirs;
    for (int k : axes) dirs.push_back(Vec6::Unit(k));
    for (int r = 0; r < 4; ++r) {
      Vec6 v = Vec6::Zero();
      for (int k : axes) v[k] = unit(rng);
      if (v.norm() > 1e-6) dirs.push_back(v.normalized());
    }
    for (const Vec6& v : dirs) {
      ObjectState moving = obj;
      moving.twist = v;
      const auto jm = agent_states_from_object(sys, moving, chi);
      const CoupledTerms tm = assemble_coupled(sys, moving, jm, none, t);
      out.model.coriolis_per_speed = std::max(out.model.coriolis_per_speed, spectral_norm(tm.coriolis));
    }

    const Mat3 r = rotation_matrix(obj.orientation);
    for (int i = 0; i < n; ++i) {
      out.load_block_norms[i] =
          std::max(out.load_block_norms[i], spectral_norm(load_distribution_block(r, sys.grasps, sys.distribution, i)));
      out.torque_map_norms[i] =
          std::max(out.torque_map_norms[i], spectral_norm(sys.agents[i].jacobian(joints[i].q).transpose()));
      out.max_joint_norms[i] = std::max(out.max_joint_norms[i], joints[i].q.norm());
    }
    ++out.samples;
  }
  if (out.samples == 0) throw Error(ErrorCode::Config, "no reachable bound samples around the desired trajectory");

  // |d~| <= sum (|p_i|+1) |d_i| + |d_O| with |delta_i| <= |q_i| + |v_i| and |delta_O| <= 2 |v_O|.
  if (sc.disturbance.enabled) {
    for (int i = 0; i < n; ++i) {
      const double lever = sys.grasps[i].offset_ee.norm() + 1.0;
      const double amp = sc.disturbance.agent_amplitudes[i].norm();
      out.model.disturbance_base += lever * amp * out.max_joint_norms[i];
      out.model.disturbance_slope += lever * lever * amp;
    }
    out.model.disturbance_slope += 2.0 * sc.disturbance.object_amplitude.norm();
  }
  return out;
}

BoundProblem ppc_bound_problem(const Scenario& sc, const TeamBounds& bounds, const PpcGains& gains) {
  if (!sc.ppc) throw Error(ErrorCode::Config, "controller.ppc: section required for bounds");
  const CooperativeSystem& sys = sc.system;
  const PpcController ctl(sys, sc.trajectory, gains, sc.ppc->pose, sc.ppc->velocity);
  const ObjectState obj0 = sc.initial_state();
  const auto joints0 = agent_states_from_object(sys, obj0, Vec3::Zero());
  const AgentLocalView view0 = view_of(sys, 0, obj0, joints0, 0.0);
  const Envelopes env = ctl.initialize(0, view0);
  const PpcOutput out0 = ctl.evaluate(0, view0, env);

  BoundProblem p;
  p.model = bounds.model;
  p.pose_rate_bound = sc.trajectory.pose_rate_bound();
  p.repr_bound = repr_jacobian_bound(sc.trajectory.pitch_bound() + gains.theta_star);
  p.gains = gains;
  p.pose = env.pose;
  p.velocity = env.velocity;
  p.axes = sys.active_axes();
  p.pose_eps0_norm = masked_norm(out0.pose.eps, p.axes);
  p.velocity_eps0_norm = masked_norm(out0.velocity.eps, p.axes);
  for (const auto& g : sys.grasps) p.offset_norms.push_back(g.offset_ee.norm());
  p.load_block_norms = bounds.load_block_norms;
  return p;
}

std::vector<double> wrench_limits(const Scenario& sc, const TeamBounds& bounds) {
  std::vector<double> out;
  for (int i = 0; i < sc.system.agent_count(); ++i) {
    out.push_back(sc.system.agents[i].torque_limits().minCoeff() / bounds.torque_map_norms[i]);
  }
  return out;
}

PpcGains effective_ppc_gains(const Scenario& sc, const TeamBounds& bounds) {
  if (!sc.ppc) throw Error(ErrorCode::Config, "controller.ppc: section required");
  if (!sc.ppc->tune) return sc.ppc->gains;
  const auto build = [&](const PpcGains& g) { return ppc_bound_problem(sc, bounds, g); };
  return gain_tuner(build, sc.ppc->gains, wrench_limits(sc, bounds)).gains;
}

// ---------------------------------------------------------------------------
// Simulation

struct Simulation::Impl {
  Scenario sc;
  DisturbanceModel dist;
  std::vector<int> axes;
  std::optional<AdaptiveController> adaptive;
  std::optional<PpcController> ppc;
  std::optional<PpcGains> tuned;
  std::vector<Envelopes> envelopes;
  std::vector<int> param_counts;
  std::vector<int> est_offset;
  int state_size = kBase;
  VecX x;
  double t = 0.0;
  long k = 0;
  Control held;
  long held_step = -1;  // step index the held control was computed at
  double last_quat_drift = 0.0;

  explicit Impl(Scenario s) : sc(std::move(s)) {
    sc.validate();
    dist = sc.disturbance_model();
    axes = sc.system.active_axes();
    const int n = sc.system.agent_count();
    for (int i = 0; i < n; ++i) {
      const int pc = sc.controller == ControllerKind::Adaptive ? sc.system.agents[i].parameter_count() : 0;
      param_counts.push_back(pc);
      est_offset.push_back(state_size);
      if (sc.controller == ControllerKind::Adaptive) state_size += AdaptiveEstimates::zeros(pc).size();
    }
    x = VecX::Zero(state_size);
    const ObjectState o = sc.initial_state();
    x.segment<3>(kPos) = o.position;
    x.segment<4>(kQuat) = o.orientation.coeffs();
    x.segment<6>(kTwist) = o.twist;

    if (sc.controller == ControllerKind::Adaptive) {
      adaptive.emplace(sc.system, sc.trajectory, sc.adaptive->gains, dist, sc.adaptive->form);
    } else if (sc.controller == ControllerKind::Ppc) {
      PpcGains gains = sc.ppc->gains;
      if (sc.ppc->tune) {
        gains = effective_ppc_gains(sc, sample_team_bounds(sc));
        tuned = gains;
        log::info("tuned gains g_s=" + std::to_string(gains.g_s) + " g_v=" + std::to_string(gains.g_v));
      }
      ppc.emplace(sc.system, sc.trajectory, gains, sc.ppc->pose, sc.ppc->velocity);
      const ObjectState obj = object();
      const auto joints = agent_states_from_object(sc.system, obj, chi());
      for (int i = 0; i < n; ++i) envelopes.push_back(ppc->initialize(i, view_of(sc.system, i, obj, joints, 0.0)));
    }
    held = Control{VecX::Zero(6 * n), VecX::Zero(state_size - kBase)};
  }

  ObjectState object() const { return decode_object(x); }
  Vec3 chi() const { return x.segment<3>(kChi); }

  AdaptiveEstimates estimates_of(const VecX& s, int i) const {
    const int size = AdaptiveEstimates::zeros(param_counts[i]).size();
    return AdaptiveEstimates::unflatten(s.segment(est_offset[i], size), param_counts[i]);
  }

  Control control(double time, const VecX& s, const ObjectState& obj, const std::vector<AgentJointState>& joints) const {
    const int n = sc.system.agent_count();
    Control c{VecX::Zero(6 * n), VecX::Zero(state_size - kBase)};
    for (int i = 0; i < n; ++i) {
      if (sc.controller == ControllerKind::None) break;
      const AgentLocalView view = view_of(sc.system, i, obj, joints, time);
      if (adaptive) {
        const AdaptiveOutput out = adaptive->evaluate(i, view, estimates_of(s, i));
        c.wrench.segment<6>(6 * i) = out.wrench;
        const VecX r = out.rates.flatten();
        c.rates.segment(est_offset[i] - kBase, r.size()) = r;
      } else {
        c.wrench.segment<6>(6 * i) = ppc->evaluate(i, view, envelopes[i]).wrench;
      }
    }
    return c;
  }

  VecX derivative(double time, const VecX& s, const Control* hold) const {
    const ObjectState obj = decode_object(s);
    const auto joints = agent_states_from_object(sc.system, obj, s.segment<3>(kChi));
    const Control c = hold ? *hold : control(time, s, obj, joints);
    const CoupledTerms terms = assemble_coupled(sc.system, obj, joints, dist, time);
    const Vec6 acc = object_acceleration(sc.system, terms, obj.twist, c.wrench);
    VecX dx(state_size);
    const Vec3 omega = obj.twist.tail<3>();
    const Vec4 raw = s.segment<4>(kQuat);
    dx.segment<3>(kPos) = obj.twist.head<3>();
    dx.segment<4>(kQuat) = quat_derivative(UnitQuaternion::raw(raw[0], raw.tail<3>()), omega);
    dx.segment<6>(kTwist) = acc;
    dx.segment<3>(kChi) = omega;
    dx.tail(state_size - kBase) = c.rates;
    return dx;
  }

  bool update_due() const { return sc.sim.continuous() || k % sc.sim.substeps() == 0; }

  void step() {
    const double dt = sc.sim.dt;
    const Control* hold = nullptr;
    if (!sc.sim.continuous()) {
      if (update_due() && held_step != k) {
        const ObjectState obj = object();
        held = control(t, x, obj, agent_states_from_object(sc.system, obj, chi()));
        held_step = k;
      }
      hold = &held;
    }
    const VecX k1 = derivative(t, x, hold);
    const VecX k2 = derivative(t + 0.5 * dt, x + 0.5 * dt * k1, hold);
    const VecX k3 = derivative(t + 0.5 * dt, x + 0.5 * dt * k2, hold);
    const VecX k4 = derivative(t + dt, x + dt * k3, hold);
    VecX next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) throw Error(ErrorCode::NumericalBlowUp, "non-finite state at t=" + std::to_string(t + dt));
    const double norm = next.segment<4>(kQuat).norm();
    last_quat_drift = std::abs(norm - 1.0);
    next.segment<4>(kQuat) /= norm;
    x = std::move(next);
    ++k;
    t = static_cast<double>(k) * dt;
  }
};

Simulation::Simulation(Scenario scenario) : impl_(std::make_unique<Impl>(std::move(scenario))) {}
Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

const Scenario& Simulation::scenario() const { return impl_->sc; }
double Simulation::time() const { return impl_->t; }
long Simulation::step_index() const { return impl_->k; }
const VecX& Simulation::state() const { return impl_->x; }
ObjectState Simulation::object() const { return impl_->object(); }
Vec3 Simulation::chi() const { return impl_->chi(); }
const std::optional<PpcGains>& Simulation::tuned_gains() const { return impl_->tuned; }

std::vector<AdaptiveEstimates> Simulation::estimates() const {
  std::vector<AdaptiveEstimates> out;
  if (impl_->sc.controller != ControllerKind::Adaptive) return out;
  for (int i = 0; i < impl_->sc.system.agent_count(); ++i) out.push_back(impl_->estimates_of(impl_->x, i));
  return out;
}

void Simulation::step() { impl_->step(); }

namespace {

std::vector<std::string> telemetry_columns(const Scenario& sc) {
  std::vector<std::string> c{"t"};
  const auto add6 = [&](const std::string& base) {
    for (int k = 0; k < 6; ++k) c.push_back(base + "_" + std::to_string(k));
  };
  add6("x_O");
  for (int k = 0; k < 4; ++k) c.push_back("zeta_O_" + std::to_string(k));
  add6("v_O");
  if (sc.controller == ControllerKind::Adaptive) {
    add6("e");
    c.push_back("e_phi");
    add6("e_vf");
    c.push_back("V");
    c.push_back("Vdot");
  } else if (sc.controller == ControllerKind::Ppc) {
    add6("e_s");
    add6("e_v");
    add6("rho_s");
    add6("rho_v");
    add6("xi_s");
    add6("xi_v");
  }
  for (int i = 0; i < sc.system.agent_count(); ++i) {
    for (int k = 0; k < 6; ++k) c.push_back("u_" + std::to_string(i) + "_" + std::to_string(k));
  }
  for (int i = 0; i < sc.system.agent_count(); ++i) {
    for (int j = 0; j < sc.system.agents[i].dof(); ++j) c.push_back("tau_" + std::to_string(i) + "_" + std::to_string(j));
  }
  c.push_back("E");
  return c;
}

nlohmann::json vec_json(const VecX& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

RunResult Simulation::run() {
  Impl& s = *impl_;
  const Scenario& sc = s.sc;
  const CooperativeSystem& sys = sc.system;
  const int n = sys.agent_count();
  const auto wall_start = std::chrono::steady_clock::now();
  const long total = std::lround(sc.sim.duration / sc.sim.dt);

  RunResult result;
  RunReport& rep = result.report;
  rep.scenario = sc.name;
  rep.controller = to_string(sc.controller);
  rep.expect = to_string(sc.expect);
  rep.tuned_gains = s.tuned;
  rep.agents.resize(n);
  for (int i = 0; i < n; ++i) rep.agents[i].max_abs_torque = VecX::Zero(sys.agents[i].dof());
  rep.run_bounds.inv_mass_upper = 0.0;
  rep.run_bounds.inv_mass_lower = kInf;
  rep.min_envelope_margin = kInf;
  result.telemetry.columns = telemetry_columns(sc);

  std::vector<VecX> true_params;
  if (sc.controller == ControllerKind::Adaptive) {
    for (int i = 0; i < n; ++i) true_params.push_back(sys.agents[i].parameters());
    rep.max_estimate_error.assign(n, 0.0);
  }
  double previous_v = 0.0;

  // Checks and logging at the current state. Throws on hard failures.
  const auto observe = [&](bool log_row) {
    const double t = s.t;
    const ObjectState obj = s.object();
    const auto joints = agent_states_from_object(sys, obj, s.chi());
    Control c;
    if (sc.sim.continuous()) {
      c = s.control(t, s.x, obj, joints);
    } else {
      if (s.update_due() && s.held_step != s.k) {
        s.held = s.control(t, s.x, obj, joints);
        s.held_step = s.k;
      }
      c = s.held;
    }
    const CoupledTerms terms = assemble_coupled(sys, obj, joints, s.dist, t);
    const Mat3 r = rotation_matrix(obj.orientation);
    const EulerAngles euler = euler_from_quat_unchecked(obj.orientation);

    std::vector<double> row;
    if (log_row) {
      row.push_back(t);
      for (int k = 0; k < 3; ++k) row.push_back(obj.position[k]);
      for (double a : {euler.roll, euler.pitch, euler.yaw}) row.push_back(a);
      for (int k = 0; k < 4; ++k) row.push_back(obj.orientation.coeffs()[k]);
      for (int k = 0; k < 6; ++k) row.push_back(obj.twist[k]);
    }

    // Controller diagnostics from agent 0's own view.
    const AgentLocalView view0 = view_of(sys, 0, obj, joints, t);
    if (s.adaptive) {
      const AdaptiveOutput out = s.adaptive->evaluate(0, view0, s.estimates_of(s.x, 0));
      std::vector<AdaptiveEstimates> est;
      for (int i = 0; i < n; ++i) est.push_back(s.estimates_of(s.x, i));
      const LyapunovSample ly = lyapunov_monitor(sys, s.dist, terms.mass, out.errors, out.velocity_error, est,
                                                 sc.adaptive->gains, sc.adaptive->form);
      if (s.k == 0) {
        rep.lyapunov_initial = ly.value;
        rep.max_vdot_analytic = ly.rate_analytic;
        for (int i = 0; i < n; ++i) rep.initial_estimate_error.push_back((est[i].agent_params - true_params[i]).norm());
      } else {
        rep.lyapunov_max_increase = std::max(rep.lyapunov_max_increase, ly.value - previous_v);
        rep.max_vdot_analytic = std::max(rep.max_vdot_analytic, ly.rate_analytic);
      }
      previous_v = ly.value;
      rep.lyapunov_final = ly.value;
      for (int i = 0; i < n; ++i) {
        rep.max_estimate_error[i] = std::max(rep.max_estimate_error[i], (est[i].agent_params - true_params[i]).norm());
      }
      for (int k = 0; k < 6; ++k) {
        rep.max_abs_pose_error[k] = std::max(rep.max_abs_pose_error[k], std::abs(out.errors.stacked[k]));
        rep.max_abs_velocity_error[k] = std::max(rep.max_abs_velocity_error[k], std::abs(out.velocity_error[k]));
      }
      rep.final_position_error = out.errors.position.norm();
      rep.final_attitude_error = out.errors.attitude.eps.norm();
      rep.final_e_phi = out.errors.attitude.phi;
      rep.min_e_phi = s.k == 0 ? out.errors.attitude.phi : std::min(rep.min_e_phi, out.errors.attitude.phi);
      if (log_row) {
        for (int k = 0; k < 6; ++k) row.push_back(out.errors.stacked[k]);
        row.push_back(out.errors.attitude.phi);
        for (int k = 0; k < 6; ++k) row.push_back(out.velocity_error[k]);
        row.push_back(ly.value);
        row.push_back(ly.rate_analytic);
      }
    } else if (s.ppc) {
      const PpcOutput out = s.ppc->evaluate(0, view0, s.envelopes[0]);
      for (int k : s.axes) {
        rep.max_abs_pose_error[k] = std::max(rep.max_abs_pose_error[k], std::abs(out.pose_error[k]));
        rep.max_abs_velocity_error[k] = std::max(rep.max_abs_velocity_error[k], std::abs(out.velocity_error[k]));
        rep.min_envelope_margin = std::min({rep.min_envelope_margin, out.pose.rho[k] - std::abs(out.pose_error[k]),
                                            out.velocity.rho[k] - std::abs(out.velocity_error[k])});
      }
      rep.final_position_error = out.pose_error.head<3>().norm();
      if (log_row) {
        for (const Vec6* v : {&out.pose_error, &out.velocity_error, &out.pose.rho, &out.velocity.rho, &out.pose.xi,
                              &out.velocity.xi}) {
          for (int k = 0; k < 6; ++k) row.push_back((*v)[k]);
        }
      }
    }

    // Torques, wrench and agent speed norms.
    std::vector<VecX> taus;
    bool saturated = false;
    for (int i = 0; i < n; ++i) {
      const Vec6 u = c.wrench.segment<6>(6 * i);
      const VecX tau = joint_torque(sys.agents[i], joints[i].q, u);
      AgentRunStats& st = rep.agents[i];
      bool agent_sat = false;
      for (int j = 0; j < tau.size(); ++j) {
        st.max_abs_torque[j] = std::max(st.max_abs_torque[j], std::abs(tau[j]));
        const double lim = limit_of(sys.agents[i], j);
        if (std::abs(tau[j]) > lim) agent_sat = true;
        if (t <= 1e-3 + 1e-12) {
          rep.early_peak_torque = std::max(rep.early_peak_torque, std::abs(tau[j]));
          rep.early_peak_torque_ratio = std::max(rep.early_peak_torque_ratio, std::abs(tau[j]) / lim);
        }
      }
      if (agent_sat) ++st.saturation_steps;
      saturated = saturated || agent_sat;
      st.max_wrench_norm = std::max(st.max_wrench_norm, u.norm());
      const Vec6 v_i = object_to_agent_jacobian(r, sys.grasps[i]) * obj.twist;
      st.max_speed_norm = std::max(st.max_speed_norm, v_i.norm());
      taus.push_back(tau);
    }
    if (saturated) {
      ++rep.saturation_violations;
      if (rep.first_saturation_time < 0.0) rep.first_saturation_time = t;
    }

    // Structural invariants and model extremes along the run.
    rep.max_abs_pitch = std::max(rep.max_abs_pitch, std::abs(euler.pitch));
    const double energy = mechanical_energy(sys, obj, joints);
    if (s.k == 0) rep.energy_initial = energy;
    rep.max_energy_drift =
        std::max(rep.max_energy_drift, std::abs(energy - rep.energy_initial) / std::max(std::abs(rep.energy_initial), 1e-300));
    rep.max_quaternion_drift = std::max(rep.max_quaternion_drift, s.last_quat_drift);
    double inv_upper = 0.0, inv_lower = 0.0;
    active_block_inverse_extremes(terms.mass, s.axes, &inv_upper, &inv_lower);
    rep.run_bounds.inv_mass_upper = std::max(rep.run_bounds.inv_mass_upper, inv_upper);
    rep.run_bounds.inv_mass_lower = std::min(rep.run_bounds.inv_mass_lower, inv_lower);
    rep.run_bounds.gravity = std::max(rep.run_bounds.gravity, masked_norm(terms.gravity, s.axes));
    const double speed = masked_norm(obj.twist, s.axes);
    if (speed > 1e-9) {
      rep.run_bounds.coriolis_per_speed =
          std::max(rep.run_bounds.coriolis_per_speed, spectral_norm(terms.coriolis) / speed);
    }
    if (log_row) {
      const MatX gm = load_distribution_inverse(r, sys.grasps, sys.distribution);
      rep.max_grasp_identity_residual = std::max(
          rep.max_grasp_identity_residual, (terms.grasp.transpose() * gm - MatX::Identity(6, 6)).cwiseAbs().maxCoeff());
      for (int i = 0; i < n; ++i) {
        const double p = sys.grasps[i].offset_ee.norm();
        rep.max_grasp_jacobian_ratio =
            std::max(rep.max_grasp_jacobian_ratio, spectral_norm(terms.grasp.block<6, 6>(6 * i, 0)) / (p + 1.0));
        const EndEffectorState ee = end_effector_state(obj, sys.grasps[i]);
        rep.max_rigidity_residual =
            std::max(rep.max_rigidity_residual, (sys.agents[i].ee_position(joints[i].q) - ee.position).norm());
      }
      for (int k = 0; k < c.wrench.size(); ++k) row.push_back(c.wrench[k]);
      for (const VecX& tau : taus) {
        for (int j = 0; j < tau.size(); ++j) row.push_back(tau[j]);
      }
      row.push_back(energy);
      result.telemetry.rows.push_back(std::move(row));
    }
  };

  try {
    observe(true);
    while (s.k < total) {
      s.step();
      observe(s.k % sc.sim.log_every == 0 || s.k == total);
    }
    rep.completed = true;
    rep.status = "ok";
  } catch (const FunnelViolation& e) {
    rep.funnel_violations = 1;
    rep.status = "funnel_violation";
    rep.failure = HardFailure{e.code(), e.what(), s.t, s.x};
  } catch (const Error& e) {
    rep.status = "failed";
    rep.failure = HardFailure{e.code(), e.what(), s.t, s.x};
  }
  if (rep.failure) log::warn(sc.name + ": " + rep.failure->message);

  rep.steps = s.k;
  rep.final_time = s.t;
  rep.final_state = s.x;
  if (!std::isfinite(rep.min_envelope_margin)) rep.min_envelope_margin = 0.0;
  if (!std::isfinite(rep.run_bounds.inv_mass_lower)) rep.run_bounds.inv_mass_lower = 0.0;
  switch (sc.expect) {
    case Expectation::Clean:
      rep.passed = rep.completed && rep.funnel_violations == 0 && rep.saturation_violations == 0;
      break;
    case Expectation::SaturationViolation:
      rep.passed = rep.saturation_violations > 0;
      break;
    case Expectation::FunnelViolation:
      rep.passed = rep.funnel_violations > 0;
      break;
  }
  rep.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

RunResult run_scenario(const Scenario& scenario) {
  try {
    Simulation sim(scenario);
    return sim.run();
  } catch (const Error& e) {
    // Setup failures (initial-condition violations, singular grasps) still produce a report.
    RunResult r;
    r.report.scenario = scenario.name;
    r.report.controller = to_string(scenario.controller);
    r.report.expect = to_string(scenario.expect);
    r.report.status = "failed";
    r.report.failure = HardFailure{e.code(), e.what(), 0.0, VecX()};
    return r;
  }
}

std::string RunReport::to_json() const {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["controller"] = controller;
  j["expect"] = expect;
  j["status"] = status;
  j["completed"] = completed;
  j["passed"] = passed;
  if (failure) {
    j["failure"] = {{"code", std::string(to_string(failure->code))},
                    {"message", failure->message},
                    {"time", failure->time},
                    {"state", vec_json(failure->state)}};
  } else {
    j["failure"] = nullptr;
  }
  j["steps"] = steps;
  j["final_time"] = final_time;
  j["wall_clock_s"] = wall_clock;
  if (tuned_gains) {
    j["tuned_gains"] = {{"g_s", tuned_gains->g_s}, {"g_v", tuned_gains->g_v}};
  }
  j["funnel_violations"] = funnel_violations;
  j["saturation_violations"] = saturation_violations;
  j["first_saturation_time"] = first_saturation_time < 0.0 ? nlohmann::json(nullptr) : nlohmann::json(first_saturation_time);
  j["early_peak_torque"] = early_peak_torque;
  j["early_peak_torque_ratio"] = early_peak_torque_ratio;
  nlohmann::json agents_json = nlohmann::json::array();
  for (const auto& a : agents) {
    agents_json.push_back({{"max_abs_torque", vec_json(a.max_abs_torque)},
                           {"max_wrench_norm", a.max_wrench_norm},
                           {"max_speed_norm", a.max_speed_norm},
                           {"saturation_steps", a.saturation_steps}});
  }
  j["agents"] = agents_json;
  j["max_abs_pose_error"] = vec_json(max_abs_pose_error);
  j["max_abs_velocity_error"] = vec_json(max_abs_velocity_error);
  j["min_envelope_margin"] = min_envelope_margin;
  j["final_position_error"] = final_position_error;
  j["final_attitude_error"] = final_attitude_error;
  j["final_e_phi"] = final_e_phi;
  j["min_e_phi"] = min_e_phi;
  j["lyapunov"] = {{"initial", lyapunov_initial},
                   {"final", lyapunov_final},
                   {"max_increase", lyapunov_max_increase},
                   {"max_vdot_analytic", max_vdot_analytic}};
  j["initial_estimate_error"] = initial_estimate_error;
  j["max_estimate_error"] = max_estimate_error;
  j["invariants"] = {{"max_quaternion_drift", max_quaternion_drift},
                     {"max_grasp_identity_residual", max_grasp_identity_residual},
                     {"max_grasp_jacobian_ratio", max_grasp_jacobian_ratio},
                     {"max_rigidity_residual", max_rigidity_residual},
                     {"max_abs_pitch", max_abs_pitch}};
  j["energy"] = {{"initial", energy_initial}, {"max_relative_drift", finite_or_null(max_energy_drift)}};
  j["run_bounds"] = {{"inv_mass_upper", run_bounds.inv_mass_upper},
                     {"inv_mass_lower", run_bounds.inv_mass_lower},
                     {"gravity", run_bounds.gravity},
                     {"coriolis_per_speed", run_bounds.coriolis_per_speed}};
  j["final_state"] = vec_json(final_state);
  return j.dump(2) + "\n";
}

}  // namespace coopman
