#include "coopman/disturbance.hpp"

#include <cmath>
#include <random>

namespace coopman {

namespace {

double open_unit(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = 0.0;
  while (x == 0.0) x = u(rng);
  return x;
}

}  // namespace

DisturbanceModel DisturbanceModel::none(int agents, std::vector<int> active_axes) {
  DisturbanceModel m;
  m.agent_amplitude_.assign(agents, Vec6::Zero());
  m.agent_frequency_.assign(agents, 0.0);
  m.agent_phase_.assign(agents, 0.0);
  m.active_axes_ = std::move(active_axes);
  return m;
}

DisturbanceModel DisturbanceModel::seeded(std::vector<Vec6> agent_amplitudes, const Vec6& object_amplitude,
                                          std::vector<int> active_axes, std::uint64_t seed) {
  DisturbanceModel m;
  m.kind_ = DisturbanceKind::StateScaledSinusoid;
  m.agent_amplitude_ = std::move(agent_amplitudes);
  m.object_amplitude_ = object_amplitude;
  m.active_axes_ = std::move(active_axes);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < m.agent_amplitude_.size(); ++i) {
    m.agent_frequency_.push_back(open_unit(rng));
    m.agent_phase_.push_back(open_unit(rng));
  }
  m.object_frequency_ = open_unit(rng);
  m.object_phase_ = open_unit(rng);
  return m;
}

Mat6 DisturbanceModel::masked_diagonal(const Vec6& diag) const {
  Mat6 d = Mat6::Zero();
  for (int a : active_axes_) d(a, a) = diag[a];
  return d;
}

Mat6 DisturbanceModel::agent_regressor(int i, const VecX& q, const Vec6& agent_twist, double t) const {
  if (kind_ == DisturbanceKind::None) return Mat6::Zero();
  const double s = q.norm() * std::sin(agent_frequency_[i] * t + agent_phase_[i]);
  return masked_diagonal(Vec6::Constant(s) + agent_twist);
}

Mat6 DisturbanceModel::object_regressor(const Vec6& object_twist, double t) const {
  if (kind_ == DisturbanceKind::None) return Mat6::Zero();
  const double s = object_twist.norm() * std::sin(object_frequency_ * t + object_phase_);
  return masked_diagonal(Vec6::Constant(s) + object_twist);
}

Vec6 DisturbanceModel::agent_disturbance(int i, const VecX& q, const Vec6& agent_twist, double t) const {
  return agent_regressor(i, q, agent_twist, t) * agent_amplitude_[i];
}

Vec6 DisturbanceModel::object_disturbance(const Vec6& object_twist, double t) const {
  return object_regressor(object_twist, t) * object_amplitude_;
}

}  // namespace coopman
