#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coopman {

enum class ErrorCode {
  RepresentationSingularity,
  KinematicSingularity,
  RankDeficient,
  SingularJStar,
  UnsupportedModel,
  InitialConditionViolation,
  FunnelViolation,
  InfeasibleBounds,
  NoFeasibleGains,
  PitchBoundViolation,
  Config,
  Io,
  MalformedTelemetry,
  NumericalBlowUp,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Funnel exits carry the time and axis so runs can report where containment broke.
class FunnelViolation : public Error {
 public:
  FunnelViolation(double t, int axis, std::string_view loop, double error, double bound)
      : Error(ErrorCode::FunnelViolation, describe(t, axis, loop, error, bound)),
        time(t), axis(axis), loop(loop), error(error), bound(bound) {}

  double time;
  int axis;
  std::string loop;
  double error;
  double bound;

 private:
  static std::string describe(double t, int axis, std::string_view loop, double e, double rho);
};

}  // namespace coopman
