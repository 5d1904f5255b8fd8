#include "coopman/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "coopman/errors.hpp"

namespace coopman {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Config, path + ": " + what);
}

// Table view that remembers which keys were read so leftovers can be rejected.
class Section {
 public:
  Section(const toml::table& table, std::string path) : table_(&table), path_(std::move(path)) {}

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return table_->contains(key); }
  bool is_array(const std::string& key) const {
    const toml::node* n = table_->get(key);
    return n && n->is_array();
  }

  double number(const std::string& key) {
    const toml::node* n = take(key, true);
    auto v = n->value<double>();
    if (!v || !std::isfinite(*v)) fail(key_path(key), "expected a finite number");
    return *v;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    auto v = take(key, true)->value<std::int64_t>();
    if (!v) fail(key_path(key), "expected an integer");
    return *v;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    auto v = take(key, true)->value<bool>();
    if (!v) fail(key_path(key), "expected true or false");
    return *v;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    auto v = take(key, true)->value<std::string>();
    if (!v) fail(key_path(key), "expected a string");
    return *v;
  }

  std::vector<double> numbers(const std::string& key, std::size_t count) {
    const toml::array* a = take(key, true)->as_array();
    if (!a || a->size() != count) fail(key_path(key), "expected an array of " + std::to_string(count) + " numbers");
    std::vector<double> out;
    for (const auto& item : *a) {
      auto v = item.value<double>();
      if (!v || !std::isfinite(*v)) fail(key_path(key), "expected finite numbers");
      out.push_back(*v);
    }
    return out;
  }

  Vec3 vec3(const std::string& key) {
    const auto v = numbers(key, 3);
    return Vec3(v[0], v[1], v[2]);
  }
  Vec3 vec3(const std::string& key, const Vec3& fallback) { return has(key) ? vec3(key) : fallback; }
  Vec6 vec6(const std::string& key) {
    const auto v = numbers(key, 6);
    Vec6 out;
    for (int k = 0; k < 6; ++k) out[k] = v[k];
    return out;
  }
  Vec6 vec6(const std::string& key, const Vec6& fallback) { return has(key) ? vec6(key) : fallback; }
  std::array<double, 3> triple(const std::string& key) {
    const auto v = numbers(key, 3);
    return {v[0], v[1], v[2]};
  }

  Section section(const std::string& key) {
    const toml::table* t = take(key, true)->as_table();
    if (!t) fail(key_path(key), "expected a table");
    return Section(*t, key_path(key));
  }

  std::vector<Section> sections(const std::string& key) {
    const toml::array* a = take(key, true)->as_array();
    if (!a) fail(key_path(key), "expected an array of tables");
    std::vector<Section> out;
    for (std::size_t i = 0; i < a->size(); ++i) {
      const toml::table* t = (*a)[i].as_table();
      const std::string p = key_path(key) + "[" + std::to_string(i) + "]";
      if (!t) fail(p, "expected a table");
      out.emplace_back(*t, p);
    }
    return out;
  }

  // Call after reading: any key not consumed is an error.
  void finish() const {
    for (const auto& [k, v] : *table_) {
      const std::string key(k.str());
      if (!used_.count(key)) fail(key_path(key), "unknown key");
    }
  }

 private:
  const toml::node* take(const std::string& key, bool required) {
    const toml::node* n = table_->get(key);
    if (!n && required) fail(key_path(key), "missing required key");
    used_.insert(key);
    return n;
  }

  const toml::table* table_;
  std::string path_;
  std::set<std::string> used_;
};

Mat3 diagonal3(const Vec3& d) { return d.asDiagonal(); }

EnvelopeSpec parse_envelope(Section s) {
  EnvelopeSpec e;
  const std::string mode = s.string("mode", "explicit");
  if (mode == "explicit") {
    e.mode = EnvelopeMode::Explicit;
    e.rho_0 = s.vec6("rho_0");
  } else if (mode == "axis_offset") {
    e.mode = EnvelopeMode::AxisOffset;
    e.offset = s.vec6("offset");
  } else if (mode == "norm_offset") {
    e.mode = EnvelopeMode::NormOffset;
  } else {
    fail(s.key_path("mode"), "expected explicit, axis_offset or norm_offset");
  }
  e.rho_inf = s.vec6("rho_inf");
  e.decay = s.vec6("decay");
  s.finish();
  return e;
}

// Scalar gain or per-axis diagonal.
Mat3 gain3(Section& s, const std::string& key) {
  if (s.is_array(key)) return diagonal3(s.vec3(key));
  return s.number(key) * Mat3::Identity();
}

AdaptiveSettings parse_adaptive(Section s) {
  AdaptiveSettings a;
  a.gains.k_p = gain3(s, "k_p");
  a.gains.k_zeta = gain3(s, "k_zeta");
  a.gains.k_v = s.vec6("k_v").asDiagonal();
  a.gains.gamma_agent = s.number("gamma_agent");
  a.gains.gamma_object = s.number("gamma_object");
  a.gains.beta_agent = s.number("beta_agent");
  a.gains.beta_object = s.number("beta_object");
  const std::string form = s.string("attitude_error", "standard");
  if (form == "standard") {
    a.form = AttitudeErrorForm::Standard;
  } else if (form == "scalar_weighted") {
    a.form = AttitudeErrorForm::ScalarWeighted;
  } else {
    fail(s.key_path("attitude_error"), "expected standard or scalar_weighted");
  }
  s.finish();
  return a;
}

PpcSettings parse_ppc(Section s) {
  PpcSettings p;
  p.gains.g_s = s.number("g_s");
  p.gains.g_v = s.number("g_v");
  p.gains.theta_star = s.number("theta_star");
  p.gains.alpha = s.number("alpha", p.gains.alpha);
  p.tune = s.boolean("tune", false);
  p.pose = parse_envelope(s.section("pose"));
  p.velocity = parse_envelope(s.section("velocity"));
  s.finish();
  return p;
}

AgentModel parse_agent(Section& s, double gravity) {
  const std::string kind = s.string("kind", "");
  if (kind == "planar3r") {
    Planar3RParams p;
    p.link_lengths = s.triple("link_lengths");
    p.link_masses = s.triple("link_masses");
    if (s.has("com_fractions")) p.com_fractions = s.triple("com_fractions");
    if (s.has("link_inertias")) {
      p.link_inertias = s.triple("link_inertias");
    } else {
      for (int k = 0; k < 3; ++k) p.link_inertias[k] = p.link_masses[k] * p.link_lengths[k] * p.link_lengths[k] / 12.0;
    }
    p.base_position = s.vec3("base_position");
    p.base_angle = s.number("base_angle", 0.0);
    p.elbow = static_cast<int>(s.integer("elbow", 1));
    p.torque_limits = s.vec3("torque_limits", p.torque_limits);
    p.joint_damping = s.vec3("joint_damping", p.joint_damping);
    return AgentModel::planar3r(p, gravity);
  }
  if (kind == "synthetic6d") {
    Synthetic6DParams p;
    p.base_inertia = s.vec6("base_inertia").asDiagonal();
    if (s.has("modulation")) {
      const Vec6 m = s.vec6("modulation");
      for (int k = 0; k < 6; ++k) p.modulation[k] = m[k];
    }
    p.gravity_mass = s.number("gravity_mass", 0.0);
    p.rotor_offset = s.vec3("rotor_offset", Vec3::Zero());
    p.torque_limits = s.vec6("torque_limits", p.torque_limits);
    return AgentModel::synthetic6d(p, gravity);
  }
  fail(s.key_path("kind"), "expected planar3r or synthetic6d");
}

Scenario parse_root(const toml::table& root) {
  Section top(root, "");
  Scenario sc;
  sc.name = top.string("name", "");
  if (sc.name.empty()) fail("name", "missing required key");
  sc.description = top.string("description", "");
  const std::string expect = top.string("expect", "clean");
  if (expect == "clean") {
    sc.expect = Expectation::Clean;
  } else if (expect == "saturation_violation") {
    sc.expect = Expectation::SaturationViolation;
  } else if (expect == "funnel_violation") {
    sc.expect = Expectation::FunnelViolation;
  } else {
    fail("expect", "expected clean, saturation_violation or funnel_violation");
  }

  {
    Section s = top.section("simulation");
    sc.sim.dt = s.number("dt");
    sc.sim.duration = s.number("duration");
    sc.sim.controller_period = s.number("controller_period", 0.0);
    sc.sim.log_every = static_cast<int>(s.integer("log_every", 1));
    const std::int64_t seed = s.integer("seed", 1);
    if (seed < 0) fail(s.key_path("seed"), "must be non-negative");
    sc.sim.seed = static_cast<std::uint64_t>(seed);
    sc.sim.gravity = s.number("gravity", kStandardGravity);
    s.finish();
  }

  {
    Section s = top.section("object");
    sc.system.object.mass = s.number("mass");
    Mat3 inertia = diagonal3(s.vec3("inertia"));
    if (s.has("products")) {
      const Vec3 pr = s.vec3("products");  // xy, xz, yz
      inertia(0, 1) = inertia(1, 0) = pr[0];
      inertia(0, 2) = inertia(2, 0) = pr[1];
      inertia(1, 2) = inertia(2, 1) = pr[2];
    }
    sc.system.object.inertia = inertia;
    sc.system.object.gravity = sc.sim.gravity;
    sc.initial.position = s.vec3("initial_position");
    sc.initial.euler = EulerAngles::from_vector(s.vec3("initial_euler", Vec3::Zero()));
    sc.initial.twist = s.vec6("initial_twist", Vec6::Zero());
    sc.initial.flip_quaternion = s.boolean("flip_quaternion", false);
    s.finish();
  }

  sc.system.planar = top.boolean("planar", false);

  for (Section& a : top.sections("agents")) {
    sc.system.agents.push_back(parse_agent(a, sc.sim.gravity));
    const Vec3 offset = a.vec3("grasp_offset");
    const EulerAngles rel = EulerAngles::from_vector(a.vec3("grasp_euler", Vec3::Zero()));
    sc.system.grasps.push_back(GraspGeometry{offset, rel});
    sc.system.distribution.mass_weights.push_back(a.number("mass_weight"));
    sc.system.distribution.inertia_weights.push_back(diagonal3(a.vec3("inertia_weight")));
    sc.disturbance.agent_amplitudes.push_back(a.vec6("disturbance", Vec6::Zero()));
    a.finish();
  }

  {
    Section s = top.section("trajectory");
    sc.trajectory.offset = s.vec6("offset");
    sc.trajectory.sin_amplitude = s.vec6("sin_amplitude", Vec6::Zero());
    sc.trajectory.cos_amplitude = s.vec6("cos_amplitude", Vec6::Zero());
    sc.trajectory.frequency = s.vec6("frequency", Vec6::Zero());
    s.finish();
  }

  if (top.has("disturbance")) {
    Section s = top.section("disturbance");
    sc.disturbance.enabled = s.boolean("enabled", true);
    sc.disturbance.object_amplitude = s.vec6("object", Vec6::Zero());
    s.finish();
  }

  {
    Section s = top.section("controller");
    sc.controller = parse_controller_kind(s.string("type", ""));
    if (s.has("adaptive")) sc.adaptive = parse_adaptive(s.section("adaptive"));
    if (s.has("ppc")) sc.ppc = parse_ppc(s.section("ppc"));
    s.finish();
  }

  top.finish();
  sc.validate();
  return sc;
}

}  // namespace

int SimulationSettings::substeps() const {
  if (continuous()) return 1;
  return static_cast<int>(std::lround(controller_period / dt));
}

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "none") return ControllerKind::None;
  if (name == "adaptive") return ControllerKind::Adaptive;
  if (name == "ppc") return ControllerKind::Ppc;
  throw Error(ErrorCode::Config, "controller.type: expected none, adaptive or ppc (got '" + name + "')");
}

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::None: return "none";
    case ControllerKind::Adaptive: return "adaptive";
    case ControllerKind::Ppc: return "ppc";
  }
  return "?";
}

std::string to_string(Expectation e) {
  switch (e) {
    case Expectation::Clean: return "clean";
    case Expectation::SaturationViolation: return "saturation_violation";
    case Expectation::FunnelViolation: return "funnel_violation";
  }
  return "?";
}

DisturbanceModel Scenario::disturbance_model() const {
  if (!disturbance.enabled) return DisturbanceModel::none(system.agent_count(), system.active_axes());
  return DisturbanceModel::seeded(disturbance.agent_amplitudes, disturbance.object_amplitude, system.active_axes(),
                                  sim.seed);
}

ObjectState Scenario::initial_state() const {
  ObjectState s;
  s.position = initial.position;
  s.orientation = quat_from_euler(initial.euler);
  // Start in the hemisphere of the desired orientation so e_phi(0) >= 0.
  const UnitQuaternion desired = desired_trajectory(trajectory, 0.0).orientation;
  if (s.orientation.coeffs().dot(desired.coeffs()) < 0.0) s.orientation = -s.orientation;
  if (initial.flip_quaternion) s.orientation = -s.orientation;
  s.twist = initial.twist;
  return s;
}

void Scenario::validate() const {
  if (!(sim.dt > 0.0)) fail("simulation.dt", "must be positive");
  if (!(sim.duration >= sim.dt)) fail("simulation.duration", "must be at least dt");
  if (sim.log_every < 1) fail("simulation.log_every", "must be at least 1");
  if (!(sim.gravity >= 0.0)) fail("simulation.gravity", "must be non-negative");
  if (!sim.continuous()) {
    if (!(sim.controller_period >= sim.dt)) fail("simulation.controller_period", "must be 0 or at least dt");
    const double ratio = sim.controller_period / sim.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio) {
      fail("simulation.controller_period", "must be an integer multiple of dt");
    }
  }
  system.validate();
  if (system.planar) {
    if (initial.position.y() != 0.0 || initial.euler.roll != 0.0 || initial.euler.yaw != 0.0) {
      fail("object.initial_position", "planar scenarios start in the x-z plane with pitch-only orientation");
    }
  }
  if (controller != ControllerKind::None && initial.twist != Vec6::Zero()) {
    fail("object.initial_twist", "closed-loop scenarios start at rest");
  }
  if (controller == ControllerKind::Adaptive) {
    if (!adaptive) fail("controller.adaptive", "missing section for controller type adaptive");
    adaptive->gains.validate();
  }
  if (controller == ControllerKind::Ppc) {
    if (!ppc) fail("controller.ppc", "missing section for controller type ppc");
    ppc->gains.validate();
    const double pitch = trajectory.pitch_bound() + ppc->gains.theta_star;
    if (!(pitch < std::numbers::pi / 2)) {
      throw Error(ErrorCode::PitchBoundViolation, "trajectory pitch bound + controller.ppc.theta_star = " +
                                                      std::to_string(pitch) + " is not below pi/2");
    }
  }
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw Error(ErrorCode::Config, os.str());
  }
  return parse_root(root);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

}  // namespace coopman
