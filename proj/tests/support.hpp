#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "coopman/spatial.hpp"

namespace coopman::testing {

inline constexpr double kPi = std::numbers::pi;

// Fixed seeds keep every randomized property test reproducible.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Vec3 vec3(double scale = 1.0) { return Vec3(uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale)); }
  Vec6 vec6(double scale = 1.0) {
    Vec6 v;
    for (int k = 0; k < 6; ++k) v[k] = uniform(-scale, scale);
    return v;
  }
  // Uniform on S^3 (normalized Gaussian), either hemisphere.
  UnitQuaternion quaternion() {
    Vec4 c(normal(), normal(), normal(), normal());
    return UnitQuaternion::from_coeffs(c);
  }
  // Euler angles with pitch kept margin away from +-pi/2.
  EulerAngles euler(double pitch_margin = 1e-3) {
    return {uniform(-kPi + 1e-6, kPi - 1e-6), uniform(-kPi / 2 + pitch_margin, kPi / 2 - pitch_margin),
            uniform(-kPi + 1e-6, kPi - 1e-6)};
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline double max_abs(const MatX& m) { return m.cwiseAbs().maxCoeff(); }

inline std::string scenario_path(const std::string& name) { return std::string(COOPMAN_SCENARIO_DIR) + "/" + name; }

}  // namespace coopman::testing
