#include "coopman/errors.hpp"

#include <sstream>

namespace coopman {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RepresentationSingularity: return "RepresentationSingularity";
    case ErrorCode::KinematicSingularity: return "KinematicSingularity";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularJStar: return "SingularJStar";
    case ErrorCode::UnsupportedModel: return "UnsupportedModel";
    case ErrorCode::InitialConditionViolation: return "InitialConditionViolation";
    case ErrorCode::FunnelViolation: return "FunnelViolation";
    case ErrorCode::InfeasibleBounds: return "InfeasibleBounds";
    case ErrorCode::NoFeasibleGains: return "NoFeasibleGains";
    case ErrorCode::PitchBoundViolation: return "PitchBoundViolation";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::MalformedTelemetry: return "MalformedTelemetry";
    case ErrorCode::NumericalBlowUp: return "NumericalBlowUp";
  }
  return "Unknown";
}

std::string FunnelViolation::describe(double t, int axis, std::string_view loop, double e, double rho) {
  std::ostringstream os;
  os.precision(17);
  os << loop << " funnel axis " << axis << " left its envelope at t=" << t << " (|e|=" << std::abs(e)
     << ", rho=" << rho << ")";
  return os.str();
}

}  // namespace coopman
