#pragma once

#include <cstdint>
#include <vector>

#include "coopman/spatial.hpp"

namespace coopman {

enum class DisturbanceKind { None, StateScaledSinusoid };

// d = delta(state, t) * d_bar with delta diagonal:
//   agents: delta_i = diag(|q_i| sin(w_i t + phi_i) + v_i)
//   object: delta_O = diag(|v_O| sin(w_O t + phi_O) + v_O)
// Frequencies and phases are drawn once from the seed, each in (0, 1).
class DisturbanceModel {
 public:
  DisturbanceModel() = default;
  static DisturbanceModel none(int agents, std::vector<int> active_axes);
  static DisturbanceModel seeded(std::vector<Vec6> agent_amplitudes, const Vec6& object_amplitude,
                                 std::vector<int> active_axes, std::uint64_t seed);

  DisturbanceKind kind() const { return kind_; }
  int agent_count() const { return static_cast<int>(agent_amplitude_.size()); }
  const Vec6& agent_amplitude(int i) const { return agent_amplitude_[i]; }
  const Vec6& object_amplitude() const { return object_amplitude_; }
  double agent_frequency(int i) const { return agent_frequency_[i]; }
  double agent_phase(int i) const { return agent_phase_[i]; }
  double object_frequency() const { return object_frequency_; }
  double object_phase() const { return object_phase_; }

  Mat6 agent_regressor(int i, const VecX& q, const Vec6& agent_twist, double t) const;
  Mat6 object_regressor(const Vec6& object_twist, double t) const;
  Vec6 agent_disturbance(int i, const VecX& q, const Vec6& agent_twist, double t) const;
  Vec6 object_disturbance(const Vec6& object_twist, double t) const;

 private:
  Mat6 masked_diagonal(const Vec6& diag) const;

  DisturbanceKind kind_ = DisturbanceKind::None;
  std::vector<Vec6> agent_amplitude_;
  Vec6 object_amplitude_ = Vec6::Zero();
  std::vector<double> agent_frequency_, agent_phase_;
  double object_frequency_ = 0.0, object_phase_ = 0.0;
  std::vector<int> active_axes_{0, 1, 2, 3, 4, 5};
};

}  // namespace coopman
