#include <doctest.h>

#include <Eigen/Geometry>

#include "coopman/adaptive_controller.hpp"
#include "coopman/errors.hpp"
#include "coopman/scenario.hpp"
#include "coopman/simulator.hpp"
#include "support.hpp"

using namespace coopman;
using coopman::testing::kPi;
using coopman::testing::max_abs;
using coopman::testing::Sampler;
using coopman::testing::scenario_path;

namespace {

Mat3 rotation_exp(const Vec3& w) {
  const double a = w.norm();
  if (a < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(a, w / a).toRotationMatrix();
}

ObjectState advance(const ObjectState& s, double h) {
  ObjectState out = s;
  out.position += h * s.twist.head<3>();
  out.orientation = quat_from_rotation(rotation_exp(h * s.twist.tail<3>()) * rotation_matrix(s.orientation));
  if (out.orientation.coeffs().dot(s.orientation.coeffs()) < 0) out.orientation = -out.orientation;
  return out;
}

AdaptiveEstimates true_estimates(const Scenario& sc, const DisturbanceModel& dist, int agent) {
  AdaptiveEstimates e;
  e.agent_params = sc.system.agents[agent].parameters();
  e.object_params = sc.system.object.parameters();
  e.agent_disturbance = dist.agent_amplitude(agent);
  e.object_disturbance = dist.object_amplitude();
  return e;
}

AdaptiveEstimates random_estimates(Sampler& s, const Scenario& sc, int agent) {
  AdaptiveEstimates e = AdaptiveEstimates::zeros(sc.system.agents[agent].parameter_count());
  for (int k = 0; k < e.agent_params.size(); ++k) e.agent_params[k] = s.uniform(-2, 2);
  for (int k = 0; k < e.object_params.size(); ++k) e.object_params[k] = s.uniform(-2, 2);
  e.agent_disturbance = s.vec6(1.0);
  e.object_disturbance = s.vec6(1.0);
  return e;
}

std::vector<AgentLocalView> views_of(const Scenario& sc, const ObjectState& obj, const Vec3& chi, double t) {
  const auto joints = agent_states_from_object(sc.system, obj, chi);
  std::vector<AgentLocalView> views;
  for (int i = 0; i < sc.system.agent_count(); ++i) {
    views.push_back(make_local_view(sc.system.agents[i], joints[i], end_effector_state(obj, sc.system.grasps[i]), t));
  }
  return views;
}

AdaptiveController controller_for(const Scenario& sc) {
  return AdaptiveController(sc.system, sc.trajectory, sc.adaptive->gains, sc.disturbance_model(), sc.adaptive->form);
}

ObjectState on_trajectory(const Scenario& sc, double t) {
  const TrajectorySample d = desired_trajectory(sc.trajectory, t);
  ObjectState st;
  st.position = d.position();
  st.orientation = d.orientation;
  st.twist = d.twist();
  return st;
}

std::vector<double> column(const Telemetry& tel, const std::string& name) {
  const int c = tel.column(name);
  REQUIRE(c >= 0);
  std::vector<double> out;
  for (const auto& row : tel.rows) out.push_back(row[c]);
  return out;
}

}  // namespace

TEST_CASE("pose_errors: on trajectory, opposite hemisphere, product form") {
  Sampler s(51);
  const Vec3 p = s.vec3(1.0);
  const UnitQuaternion z = s.quaternion();
  const PoseErrors zero = pose_errors(p, z, p, z);
  CHECK(zero.stacked.isZero(1e-15));
  CHECK(std::abs(zero.attitude.phi - 1.0) < 1e-15);
  const PoseErrors flipped = pose_errors(p, -z, p, z);
  CHECK(std::abs(flipped.attitude.phi + 1.0) < 1e-15);
  CHECK(flipped.attitude.eps.isZero(1e-15));
  for (int n = 0; n < 1000; ++n) {
    const UnitQuaternion d = s.quaternion(), o = s.quaternion();
    const Vec3 po = s.vec3(1.0), pd = s.vec3(1.0);
    const PoseErrors e = pose_errors(po, o, pd, d);
    CHECK(max_abs(e.attitude.coeffs() - quat_mul(d, quat_conj(o)).coeffs()) < 1e-14);
    CHECK(max_abs(e.stacked.head<3>() - (po - pd)) == 0.0);
    CHECK(max_abs(e.stacked.tail<3>() + e.attitude.eps) == 0.0);
    const PoseErrors w = pose_errors(po, o, pd, d, AttitudeErrorForm::ScalarWeighted);
    CHECK(max_abs(w.stacked.tail<3>() + e.attitude.phi * e.attitude.eps) < 1e-15);
  }
}

TEST_CASE("reference_velocity_vf: zero error, block decoupling, exact derivative") {
  const Scenario sc = load_scenario(scenario_path("ur5quad_adaptive.toml"));
  const AdaptiveGains& g = sc.adaptive->gains;
  const TrajectorySample d = desired_trajectory(sc.trajectory, 1.2);
  const PoseErrors none = pose_errors(d.position(), d.orientation, d.position(), d.orientation);
  CHECK(max_abs(reference_velocity_vf(none, d, d.twist(), g).value - d.twist()) < 1e-15);

  TrajectorySample still = d;
  still.omega.setZero();
  const Vec3 offset(0.1, -0.2, 0.05);
  const PoseErrors pos_only = pose_errors(d.position() + offset, d.orientation, d.position(), d.orientation);
  const Vec6 vf = reference_velocity_vf(pos_only, still, Vec6::Zero(), g).value;
  CHECK(max_abs(vf.head<3>() - (still.pose_rate.head<3>() - g.k_p * offset)) < 1e-15);
  CHECK(max_abs(vf.tail<3>()) < 1e-15);

  Sampler s(52);
  for (AttitudeErrorForm form : {AttitudeErrorForm::Standard, AttitudeErrorForm::ScalarWeighted}) {
    for (int n = 0; n < 200; ++n) {
      const double t = s.uniform(0.0, 30.0);
      ObjectState obj = on_trajectory(sc, t);
      obj.position += s.vec3(0.1);
      obj.orientation = quat_mul(UnitQuaternion::from_components(1.0, s.vec3(0.3)), obj.orientation);
      obj.twist += s.vec6(0.5);
      const auto vf_at = [&](double h) {
        const ObjectState o = advance(obj, h);
        const TrajectorySample dd = desired_trajectory(sc.trajectory, t + h);
        return reference_velocity_vf(pose_errors(o.position, o.orientation, dd.position(), dd.orientation, form), dd,
                                     o.twist, g, form);
      };
      const double h = 1e-6;
      const Vec6 fd = (vf_at(h).value - vf_at(-h).value) / (2 * h);
      CHECK(max_abs(fd - vf_at(0.0).rate) < 1e-5);
    }
  }
}

TEST_CASE("certainty equivalence: true estimates hold the object on v_f") {
  for (const char* name : {"ur5quad_adaptive.toml", "widowx_adaptive.toml"}) {
    const Scenario sc = load_scenario(scenario_path(name));
    const AdaptiveController ctrl = controller_for(sc);
    const DisturbanceModel dist = sc.disturbance_model();
    for (double t : {0.3, 2.0, 6.28}) {
      const ObjectState obj = on_trajectory(sc, t);
      const Vec3 chi(0.3, -0.1, 0.7);
      const auto views = views_of(sc, obj, chi, t);
      VecX u(6 * sc.system.agent_count());
      Vec6 vf_rate = Vec6::Zero();
      for (int i = 0; i < sc.system.agent_count(); ++i) {
        const AdaptiveOutput out = ctrl.evaluate(i, views[i], true_estimates(sc, dist, i));
        CHECK(out.velocity_error.norm() < 1e-12);
        CHECK(out.errors.stacked.norm() < 1e-12);
        u.segment<6>(6 * i) = out.wrench;
        vf_rate = out.reference.rate;
        for (const Vec6& r : {out.rates.agent_disturbance, out.rates.object_disturbance}) CHECK(r.norm() < 1e-9);
      }
      const auto joints = agent_states_from_object(sc.system, obj, chi);
      const CoupledTerms terms = assemble_coupled(sc.system, obj, joints, dist, t);
      VecX damping_load = VecX::Zero(6 * sc.system.agent_count());
      for (int i = 0; i < sc.system.agent_count(); ++i) {
        damping_load.segment<6>(6 * i) = terms.agent_terms[i].damping * terms.grasp.block<6, 6>(6 * i, 0) * obj.twist;
      }
      // Plant-only joint damping is the one term no controller cancels.
      const Vec6 a = object_acceleration(sc.system, terms, obj.twist, u + damping_load);
      CHECK(max_abs(a - vf_rate) < 1e-9);
    }
  }
}

TEST_CASE("control law: vector form of the team wrench") {
  const Scenario sc = load_scenario(scenario_path("ur5quad_adaptive.toml"));
  const AdaptiveController ctrl = controller_for(sc);
  const DisturbanceModel dist = sc.disturbance_model();
  const AdaptiveGains& g = sc.adaptive->gains;
  Sampler s(53);
  for (int n = 0; n < 100; ++n) {
    const double t = s.uniform(0.0, 20.0);
    ObjectState obj = on_trajectory(sc, t);
    obj.position += s.vec3(0.05);
    obj.orientation = quat_mul(UnitQuaternion::from_components(1.0, s.vec3(0.2)), obj.orientation);
    obj.twist += s.vec6(0.3);
    const Vec3 chi = s.vec3(kPi);
    const auto views = views_of(sc, obj, chi, t);
    const auto joints = agent_states_from_object(sc.system, obj, chi);
    const Mat3 r = rotation_matrix(obj.orientation);
    // Shared object estimates, as every agent starts from the same copy.
    const AdaptiveEstimates common = random_estimates(s, sc, 0);
    Vec6 gtu = Vec6::Zero(), agent_sum = Vec6::Zero(), object_part = Vec6::Zero();
    for (int i = 0; i < sc.system.agent_count(); ++i) {
      AdaptiveEstimates est = random_estimates(s, sc, i);
      est.object_params = common.object_params;
      est.object_disturbance = common.object_disturbance;
      const AdaptiveOutput out = ctrl.evaluate(i, views[i], est);
      const Mat6 j = object_to_agent_jacobian(r, sc.system.grasps[i]);
      const Mat6 jd = object_to_agent_jacobian_dot(r, sc.system.grasps[i], obj.twist.tail<3>());
      gtu += j.transpose() * out.wrench;
      const Vec6& vf = out.reference.value;
      const Vec6& vfd = out.reference.rate;
      const MatX y = task_regressor(sc.system.agents[i], joints[i].q, joints[i].qd, j * vf, j * vfd + jd * vf);
      agent_sum += j.transpose() * (y * est.agent_params +
                                    dist.agent_regressor(i, joints[i].q, j * obj.twist, t) * est.agent_disturbance);
      object_part = sc.system.object.regressor(r, obj.twist.tail<3>(), vf, vfd) * common.object_params +
                    dist.object_regressor(obj.twist, t) * common.object_disturbance - out.errors.stacked -
                    g.k_v * out.velocity_error;
    }
    CHECK(max_abs(gtu - (object_part + agent_sum)) < 1e-10 * std::max(1.0, gtu.norm()));
  }
}

TEST_CASE("decentralization: every agent reconstructs the same object state") {
  for (const char* name : {"ur5quad_adaptive.toml", "widowx_adaptive.toml"}) {
    const Scenario sc = load_scenario(scenario_path(name));
    Sampler s(54);
    for (int n = 0; n < 100; ++n) {
      ObjectState obj = on_trajectory(sc, s.uniform(0, 30));
      obj.twist += sc.system.planar ? Vec6(0.1, 0, -0.05, 0, 0.2, 0) : s.vec6(0.3);
      const auto views = views_of(sc, obj, s.vec3(kPi), 0.0);
      for (int i = 0; i < sc.system.agent_count(); ++i) {
        const ObjectEstimate est = object_from_agent(sc.system.grasps[i], views[i], sc.system.planar);
        CHECK(max_abs(est.position - obj.position) < 1e-12);
        CHECK(std::min((est.orientation.coeffs() - obj.orientation.coeffs()).norm(),
                       (est.orientation.coeffs() + obj.orientation.coeffs()).norm()) < 1e-12);
        CHECK(max_abs(est.twist - obj.twist) < 1e-12);
      }
    }
  }
}

TEST_CASE("adaptation laws: frozen at zero error, sign, shared object copies") {
  const Scenario sc = load_scenario(scenario_path("ur5quad_adaptive.toml"));
  const AdaptiveController ctrl = controller_for(sc);
  Sampler s(55);
  const double t = 3.0;
  ObjectState obj = on_trajectory(sc, t);
  const auto views = views_of(sc, obj, Vec3::Zero(), t);
  const AdaptiveOutput at_rest = ctrl.evaluate(0, views[0], random_estimates(s, sc, 0));
  CHECK(at_rest.rates.flatten().norm() < 1e-12);

  // A positive velocity error along +z against a positive gravity column drives the mass estimate down.
  obj.twist[2] += 0.1;
  const auto moved = views_of(sc, obj, Vec3::Zero(), t);
  const AdaptiveOutput out = ctrl.evaluate(0, moved[0], AdaptiveEstimates::zeros(28));
  CHECK(out.velocity_error[2] > 0.0);
  CHECK(out.rates.object_params[0] < 0.0);
  CHECK(out.rates.agent_params[27] < 0.0);

  Scenario shortened = sc;
  shortened.sim.duration = 0.5;
  Simulation sim(shortened);
  for (int k = 0; k < 500; ++k) {
    sim.step();
    if (k % 50 != 0) continue;
    const auto est = sim.estimates();
    for (std::size_t i = 1; i < est.size(); ++i) {
      CHECK(max_abs(est[i].object_params - est[0].object_params) < 1e-12);
      CHECK(max_abs(est[i].object_disturbance - est[0].object_disturbance) < 1e-12);
    }
  }
  CHECK(sim.estimates()[0].object_params.norm() > 0.0);
}

TEST_CASE("lyapunov monitor: zero at the origin, analytic rate matches finite differences") {
  const Scenario sc = load_scenario(scenario_path("ur5quad_adaptive.toml"));
  const DisturbanceModel dist = sc.disturbance_model();
  std::vector<AdaptiveEstimates> exact;
  for (int i = 0; i < sc.system.agent_count(); ++i) exact.push_back(true_estimates(sc, dist, i));
  const PoseErrors none;
  const LyapunovSample zero =
      lyapunov_monitor(sc.system, dist, Mat6::Identity(), none, Vec6::Zero(), exact, sc.adaptive->gains);
  CHECK(zero.value == 0.0);
  CHECK(zero.rate_analytic == 0.0);

  Scenario fine = sc;
  fine.sim.dt = 1e-5;
  fine.sim.controller_period = 0.0;
  fine.sim.duration = 0.02;
  fine.sim.log_every = 1;
  const RunResult res = run_scenario(fine);
  REQUIRE(res.report.completed);
  const auto t = column(res.telemetry, "t");
  const auto v = column(res.telemetry, "V");
  const auto vdot = column(res.telemetry, "Vdot");
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < v.size(); ++k) {
    CHECK(vdot[k] <= 0.0);
    const double fd = (v[k + 1] - v[k - 1]) / (t[k + 1] - t[k - 1]);
    worst = std::max(worst, std::abs(fd - vdot[k]) / std::abs(vdot[k]));
  }
  MESSAGE("worst relative mismatch of dV/dt: " << worst);
  CHECK(worst < 1e-3);
}

TEST_CASE("scalar attitude error obeys its kinematic equation along a run") {
  Scenario sc = load_scenario(scenario_path("ur5quad_adaptive.toml"));
  sc.sim.dt = 1e-5;
  sc.sim.controller_period = 0.0;
  sc.sim.duration = 0.01;
  sc.sim.log_every = 1;
  const RunResult res = run_scenario(sc);
  REQUIRE(res.report.completed);
  const auto t = column(res.telemetry, "t");
  const auto e_phi = column(res.telemetry, "e_phi");
  for (std::size_t k = 1; k + 1 < t.size(); k += 37) {
    Vec3 e_eps, omega;
    for (int a = 0; a < 3; ++a) {
      e_eps[a] = -column(res.telemetry, "e_" + std::to_string(3 + a))[k];
      omega[a] = column(res.telemetry, "v_O_" + std::to_string(3 + a))[k];
    }
    const Vec3 e_omega = omega - desired_trajectory(sc.trajectory, t[k]).omega;
    const double fd = (e_phi[k + 1] - e_phi[k - 1]) / (t[k + 1] - t[k - 1]);
    CHECK(std::abs(fd - 0.5 * e_eps.dot(e_omega)) < 1e-4);
  }
}

TEST_CASE("internal force term leaves the object motion unchanged") {
  const Scenario sc = load_scenario(scenario_path("ur5quad_adaptive.toml"));
  const DisturbanceModel dist = sc.disturbance_model();
  Sampler s(56);
  const Mat3 r0 = Mat3::Identity();
  CHECK(internal_force_term(r0, sc.system.grasps, sc.system.distribution, VecX::Zero(24)).isZero(0.0));
  for (int n = 0; n < 100; ++n) {
    const ObjectState obj = on_trajectory(sc, s.uniform(0, 20));
    const auto joints = agent_states_from_object(sc.system, obj, s.vec3(kPi));
    const CoupledTerms terms = assemble_coupled(sc.system, obj, joints, dist, 0.0);
    const VecX u = VecX::Random(24) * 10.0;
    const VecX internal = internal_force_term(rotation_matrix(obj.orientation), sc.system.grasps,
                                              sc.system.distribution, VecX::Random(24) * 50.0);
    const Vec6 a = object_acceleration(sc.system, terms, obj.twist, u);
    const Vec6 b = object_acceleration(sc.system, terms, obj.twist, u + internal);
    CHECK(max_abs(a - b) < 1e-9);
  }
}

TEST_CASE("adaptive gains are validated") {
  AdaptiveGains g;
  CHECK_NOTHROW(g.validate());
  g.k_p(0, 0) = -1.0;
  CHECK_THROWS_AS(g.validate(), Error);
  g = AdaptiveGains{};
  g.k_v(0, 1) = 0.1;
  CHECK_THROWS_AS(g.validate(), Error);
  g = AdaptiveGains{};
  g.gamma_object = 0.0;
  CHECK_THROWS_AS(g.validate(), Error);
}
