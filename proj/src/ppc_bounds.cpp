#include "coopman/ppc_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "coopman/errors.hpp"

namespace coopman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Positive magnitude stored as its natural log. Zero is -inf.
struct LogMag {
  double ln = -kInf;
};

LogMag operator*(LogMag a, LogMag b) {
  if (a.ln == -kInf || b.ln == -kInf) return {};
  return {a.ln + b.ln};
}

LogMag operator+(LogMag a, LogMag b) {
  const double hi = std::max(a.ln, b.ln);
  const double lo = std::min(a.ln, b.ln);
  if (hi == -kInf || hi == kInf) return {hi};
  return {hi + std::log1p(std::exp(lo - hi))};
}

LogMag max_of(LogMag a, LogMag b) { return a.ln >= b.ln ? a : b; }
double max_of(double a, double b) { return std::max(a, b); }

template <class T>
T lift(double x);
template <>
double lift<double>(double x) {
  return x;
}
template <>
LogMag lift<LogMag>(double x) {
  return x > 0.0 ? LogMag{std::log(x)} : LogMag{};
}

// ln cosh(y) for y >= 0 without overflow.
double log_cosh(double y) { return y + std::log1p(std::exp(-2.0 * y)) - std::numbers::ln2; }

// xi = tanh(eps/2)
double xi_of(double eps) { return std::tanh(0.5 * eps); }
LogMag xi_of(LogMag eps) {
  const double e = std::exp(eps.ln);
  return e == kInf ? LogMag{0.0} : lift<LogMag>(std::tanh(0.5 * e));
}

// r = 2/(1 - xi^2) = 1 + cosh(eps)
double r_of(double eps) { return 1.0 + std::cosh(eps); }
LogMag r_of(LogMag eps) {
  const double e = std::exp(eps.ln);
  return {std::numbers::ln2 + 2.0 * log_cosh(0.5 * e)};
}

// 1/(1 - xi^2)^2 = cosh^4(eps/2), using 1 - xi^2 = sech^2(eps/2)
double inv_gap_sq(double eps) { return std::pow(std::cosh(0.5 * eps), 4); }
LogMag inv_gap_sq(LogMag eps) {
  const double e = std::exp(eps.ln);
  return {4.0 * log_cosh(0.5 * e)};
}

double log10_of(LogMag m) { return m.ln / std::numbers::ln10; }

struct FunnelExtents {
  double rho0_max = 0.0;
  double rho_inf_min = kInf;
  double drift_max = 0.0;  // max l_k (rho_0 - rho_inf) = max |rho_dot|
};

FunnelExtents extents(const AxisFunctions& f, const std::vector<int>& axes) {
  FunnelExtents e;
  for (int k : axes) {
    e.rho0_max = std::max(e.rho0_max, f[k].rho_0);
    e.rho_inf_min = std::min(e.rho_inf_min, f[k].rho_inf);
    e.drift_max = std::max(e.drift_max, f[k].max_rate());
  }
  return e;
}

template <class T>
BoundChain<T> evaluate(const BoundProblem& p) {
  const auto c = [](double x) { return lift<T>(x); };
  const double sqrt6 = std::sqrt(6.0);
  const double sqrt2 = std::numbers::sqrt2;
  const FunnelExtents s = extents(p.pose, p.axes);
  const FunnelExtents v = extents(p.velocity, p.axes);
  const ModelBounds& m = p.model;
  const double gs = p.gains.g_s;
  const double gv = p.gains.g_v;
  const double jo = p.repr_bound;

  BoundChain<T> b;
  b.pose_drift = c(sqrt6 * jo * v.rho0_max + p.pose_rate_bound + sqrt6 * s.drift_max);
  b.pose_eps = max_of(c(p.pose_eps0_norm), c(s.rho0_max / (2.0 * gs)) * b.pose_drift);
  b.pose_xi = xi_of(b.pose_eps);
  b.pose_r = r_of(b.pose_eps);
  b.reference_speed = c(gs * sqrt2 / s.rho_inf_min) * b.pose_eps * b.pose_r;
  b.object_speed = b.reference_speed + c(sqrt6 * v.rho0_max);
  for (double offset : p.offset_norms) b.agent_speed.push_back(c(offset + 1.0) * b.object_speed);

  b.pose_xi_rate = c(1.0 / s.rho_inf_min) *
                   (c(jo) * b.object_speed + c(sqrt6 * s.drift_max) * b.pose_xi + c(p.pose_rate_bound));
  b.pose_r_rate = c(4.0) * b.pose_xi * inv_gap_sq(b.pose_eps) * b.pose_xi_rate;
  const T r_eps = b.pose_r * b.pose_eps;
  b.reference_accel = c(gs * sqrt2) * (c(jo / s.rho_inf_min) * b.object_speed * r_eps +
                                       c(s.drift_max / (s.rho_inf_min * s.rho_inf_min)) * r_eps +
                                       c(1.0 / s.rho_inf_min) * b.pose_r_rate * b.pose_eps +
                                       c(1.0 / s.rho_inf_min) * b.pose_r * b.pose_r * b.pose_xi_rate);

  const T coriolis = c(m.coriolis_per_speed) * b.object_speed;
  const T disturbance = c(m.disturbance_base) + c(m.disturbance_slope) * b.object_speed;
  b.velocity_drift = c(sqrt6 * v.drift_max) + b.reference_accel +
                     c(m.inv_mass_upper) *
                         (c(m.gravity) + disturbance + coriolis * (b.reference_speed + c(sqrt6 * v.rho0_max)));
  b.velocity_eps =
      max_of(c(p.velocity_eps0_norm), c(v.rho0_max / (2.0 * gv * m.inv_mass_lower)) * b.velocity_drift);
  b.velocity_xi = xi_of(b.velocity_eps);
  b.velocity_r = r_of(b.velocity_eps);
  for (double norm : p.load_block_norms) {
    b.agent_wrench.push_back(c(gv * norm / v.rho_inf_min) * b.velocity_r * b.velocity_eps);
  }
  return b;
}

template <class T, class F>
void for_each_link(const BoundChain<T>& b, F&& f) {
  f("B_s", b.pose_drift);
  f("eps_s", b.pose_eps);
  f("xi_s", b.pose_xi);
  f("r_s", b.pose_r);
  f("v_r", b.reference_speed);
  f("v_O", b.object_speed);
  for (std::size_t i = 0; i < b.agent_speed.size(); ++i) f("v_" + std::to_string(i), b.agent_speed[i]);
  f("xi_s_rate", b.pose_xi_rate);
  f("r_s_rate", b.pose_r_rate);
  f("v_r_rate", b.reference_accel);
  f("B_v", b.velocity_drift);
  f("eps_v", b.velocity_eps);
  f("xi_v", b.velocity_xi);
  f("r_v", b.velocity_r);
  for (std::size_t i = 0; i < b.agent_wrench.size(); ++i) f("u_" + std::to_string(i), b.agent_wrench[i]);
}

BoundChain<double> to_log10(const BoundChain<LogMag>& b) {
  const auto l = [](LogMag m) { return log10_of(m); };
  BoundChain<double> out{l(b.pose_drift),   l(b.pose_eps),        l(b.pose_xi),      l(b.pose_r),
                         l(b.reference_speed), l(b.object_speed), l(b.pose_xi_rate), l(b.pose_r_rate),
                         l(b.reference_accel), l(b.velocity_drift), l(b.velocity_eps), l(b.velocity_xi),
                         l(b.velocity_r),   {},                  {}};
  for (LogMag m : b.agent_speed) out.agent_speed.push_back(l(m));
  for (LogMag m : b.agent_wrench) out.agent_wrench.push_back(l(m));
  return out;
}

void validate_problem(const BoundProblem& p) {
  p.model.validate();
  p.gains.validate();
  if (p.axes.empty()) throw Error(ErrorCode::Config, "bound problem has no active axes");
  if (p.offset_norms.size() != p.load_block_norms.size()) {
    throw Error(ErrorCode::Config, "bound problem needs one offset and one load-block norm per agent");
  }
  for (int k : p.axes) {
    p.pose[k].validate();
    p.velocity[k].validate();
  }
  const auto bad = [](double x) { return !(std::isfinite(x) && x >= 0.0); };
  if (bad(p.pose_rate_bound) || bad(p.repr_bound) || bad(p.pose_eps0_norm) || bad(p.velocity_eps0_norm)) {
    throw Error(ErrorCode::Config, "bound problem inputs must be finite and non-negative");
  }
}

}  // namespace

void ModelBounds::validate() const {
  const auto ok = [](double x) { return std::isfinite(x) && x >= 0.0; };
  if (!(ok(inv_mass_upper) && ok(inv_mass_lower) && inv_mass_lower > 0.0 && inv_mass_lower <= inv_mass_upper &&
        ok(gravity) && ok(coriolis_per_speed) && ok(disturbance_base) && ok(disturbance_slope))) {
    throw Error(ErrorCode::Config, "model bounds must be finite with 0 < inverse-mass lower <= upper");
  }
}

double repr_jacobian_bound(double pitch_max) {
  if (!(pitch_max >= 0.0 && pitch_max < std::numbers::pi / 2)) {
    throw Error(ErrorCode::PitchBoundViolation, "pitch bound must lie in [0, pi/2)");
  }
  return 1.0 / std::sqrt(1.0 - std::sin(pitch_max));
}

std::vector<std::pair<std::string, double>> BoundReport::entries() const {
  std::vector<std::pair<std::string, double>> out;
  for_each_link(value, [&](const std::string& key, double x) { out.emplace_back(key, x); });
  for_each_link(log10, [&](const std::string& key, double x) { out.emplace_back("log10_" + key, x); });
  return out;
}

std::string BoundReport::to_text() const {
  std::ostringstream os;
  os << "finite=" << (finite ? "true" : "false") << '\n';
  os << "first_nonfinite=" << first_nonfinite << '\n';
  char buf[64];
  for (const auto& [key, x] : entries()) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << key << '=' << buf << '\n';
  }
  return os.str();
}

BoundReport bound_chain(const BoundProblem& problem) {
  validate_problem(problem);
  BoundReport report;
  report.value = evaluate<double>(problem);
  report.log10 = to_log10(evaluate<LogMag>(problem));
  for_each_link(report.value, [&](const std::string& key, double x) {
    if (report.finite && !std::isfinite(x)) {
      report.finite = false;
      report.first_nonfinite = key;
    }
  });
  return report;
}

BoundReport bound_calculator(const BoundProblem& problem) {
  BoundReport report = bound_chain(problem);
  if (!report.finite) {
    const auto entries = report.entries();
    double magnitude = kInf;
    for (const auto& [key, x] : entries) {
      if (key == "log10_" + report.first_nonfinite) magnitude = x;
    }
    std::ostringstream msg;
    msg << report.first_nonfinite << " is not representable (log10 = " << magnitude << ")";
    throw Error(ErrorCode::InfeasibleBounds, msg.str());
  }
  return report;
}

namespace {

// Largest wrench-bound to limit ratio over agents; inf when the chain overflows.
double wrench_ratio(const BoundReport& r, const std::vector<double>& limits, int* binding = nullptr) {
  if (!r.finite) return kInf;
  double worst = 0.0;
  for (std::size_t i = 0; i < limits.size(); ++i) {
    const double ratio = r.value.agent_wrench[i] / limits[i];
    if (ratio > worst) {
      worst = ratio;
      if (binding) *binding = static_cast<int>(i);
    }
  }
  return worst;
}

}  // namespace

TunerResult gain_tuner(const BoundProblemBuilder& build, const PpcGains& defaults,
                       const std::vector<double>& wrench_limits) {
  defaults.validate();
  for (double w : wrench_limits) {
    if (!(w > 0.0)) throw Error(ErrorCode::Config, "wrench limits must be positive");
  }
  const bool unlimited = std::all_of(wrench_limits.begin(), wrench_limits.end(), [](double w) { return w == kInf; });
  if (unlimited) return {defaults, bound_chain(build(defaults)), true};

  const auto probe = [&](double gs, double gv) {
    PpcGains g = defaults;
    g.g_s = gs;
    g.g_v = gv;
    BoundProblem p = build(g);
    if (p.load_block_norms.size() != wrench_limits.size()) {
      throw Error(ErrorCode::Config, "one wrench limit per agent is required");
    }
    return std::pair{g, bound_chain(p)};
  };

  {
    auto [g, report] = probe(defaults.g_s, defaults.g_v);
    if (wrench_ratio(report, wrench_limits) <= 1.0) return {g, report, true};
  }

  // For fixed g_s the wrench bound is unimodal in g_v: eps_v is pinned at its
  // initial value above g_v* and grows like 1/g_v below it.
  constexpr int kGridHalf = 30;
  constexpr double kGridSpan = 3.0;  // decades each side of the default
  std::vector<double> grid;
  for (int j = -kGridHalf; j <= kGridHalf; ++j) grid.push_back(defaults.g_s * std::pow(10.0, kGridSpan * j / kGridHalf));
  std::stable_sort(grid.begin(), grid.end(), [&](double a, double b) {
    return std::abs(std::log(a / defaults.g_s)) < std::abs(std::log(b / defaults.g_s));
  });

  double best_ratio = kInf;
  int binding = 0;
  for (double gs : grid) {
    auto [g0, r0] = probe(gs, defaults.g_v);
    if (!std::isfinite(r0.value.velocity_drift)) continue;
    double turning = defaults.g_v * 1e6;
    const BoundProblem p = build(g0);
    const double drive =
        extents(p.velocity, p.axes).rho0_max * r0.value.velocity_drift / (2.0 * p.model.inv_mass_lower);
    if (std::isfinite(drive) && p.velocity_eps0_norm > 0.0) turning = drive / p.velocity_eps0_norm;
    const auto ratio_at = [&](double gv) { return wrench_ratio(probe(gs, gv).second, wrench_limits); };
    int bind_here = 0;
    const double min_ratio = wrench_ratio(probe(gs, turning).second, wrench_limits, &bind_here);
    if (min_ratio < best_ratio) {
      best_ratio = min_ratio;
      binding = bind_here;
    }
    if (!(min_ratio <= 1.0)) continue;

    // Move from the default toward the turning point until feasible.
    double lo = std::log(defaults.g_v);
    double hi = std::log(turning);
    if (ratio_at(defaults.g_v) > 1.0) {
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ratio_at(std::exp(mid)) <= 1.0 ? hi : lo) = mid;
      }
    } else {
      hi = lo;
    }
    auto [g, report] = probe(gs, std::exp(hi));
    return {g, report, false};
  }
  throw Error(ErrorCode::NoFeasibleGains,
              "agent " + std::to_string(binding) + " wrench bound stays above its limit (best ratio " +
                  std::to_string(best_ratio) + ")");
}

}  // namespace coopman
