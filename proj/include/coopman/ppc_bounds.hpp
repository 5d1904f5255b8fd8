#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "coopman/ppc_controller.hpp"

namespace coopman {

// Bounds on the coupled dynamics over the region the funnels allow.
// Velocity-dependent terms are stored per unit object speed and scaled by the
// speed bound inside the chain.
struct ModelBounds {
  double inv_mass_upper = 1.0;         // >= |M~^-1|
  double inv_mass_lower = 1.0;         // <= lambda_min(M~^-1)
  double gravity = 0.0;                // >= |g~|
  double coriolis_per_speed = 0.0;     // |C~(v)| <= this * |v|
  double disturbance_base = 0.0;       // |d~| <= base + slope * |v_O|
  double disturbance_slope = 0.0;

  void validate() const;
};

struct BoundProblem {
  ModelBounds model;
  double pose_rate_bound = 0.0;  // >= |x_d_dot|
  double repr_bound = 1.0;       // >= |J_O| over the pitch envelope
  PpcGains gains;
  AxisFunctions pose{};
  AxisFunctions velocity{};
  std::vector<int> axes;
  double pose_eps0_norm = 0.0;      // |eps_s(0)|
  double velocity_eps0_norm = 0.0;  // |eps_v(0)|
  std::vector<double> offset_norms;      // |p_{O/E_i}| per agent
  std::vector<double> load_block_norms;  // >= |J_Mi| per agent
};

// One value per link of the chain. Entries are positive magnitudes.
template <class T>
struct BoundChain {
  T pose_drift, pose_eps, pose_xi, pose_r, reference_speed, object_speed;
  T pose_xi_rate, pose_r_rate, reference_accel;
  T velocity_drift, velocity_eps, velocity_xi, velocity_r;
  std::vector<T> agent_speed, agent_wrench;
};

struct BoundReport {
  BoundChain<double> value;
  // log10 of the same chain evaluated in the log domain; finite well past the
  // point where the plain chain overflows.
  BoundChain<double> log10;
  bool finite = true;
  std::string first_nonfinite;  // empty when finite

  // key=value lines in chain order.
  std::vector<std::pair<std::string, double>> entries() const;
  std::string to_text() const;
};

// Evaluates the chain without throwing.
BoundReport bound_chain(const BoundProblem& problem);
// Same, but throws InfeasibleBounds naming the first non-finite link.
BoundReport bound_calculator(const BoundProblem& problem);

// |J_O| bound for |pitch| <= pitch_max < pi/2.
double repr_jacobian_bound(double pitch_max);

struct TunerResult {
  PpcGains gains;
  BoundReport report;
  bool defaults_kept = false;
};

// Rebuilds the problem for candidate gains; initial funnel widths may depend on them.
using BoundProblemBuilder = std::function<BoundProblem(const PpcGains&)>;

// Returns gains with agent_wrench[i] <= wrench_limits[i] for every agent,
// staying as close as possible to the defaults. Throws NoFeasibleGains with the
// binding agent and the best value reached.
TunerResult gain_tuner(const BoundProblemBuilder& build, const PpcGains& defaults,
                       const std::vector<double>& wrench_limits);

}  // namespace coopman
