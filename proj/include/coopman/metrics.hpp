#pragma once

#include <string>
#include <vector>

#include "coopman/telemetry.hpp"

namespace coopman {

struct AxisMetrics {
  std::string column;
  double max_abs = 0.0;
  double rms = 0.0;            // trapezoidal in time
  double settling_time = 0.0;  // enters and stays in 2% of max_abs; inf if it never does
  bool has_envelope = false;
  double min_margin = 0.0;     // min over samples of rho - |e|
};

struct MetricsSummary {
  double duration = 0.0;
  std::vector<AxisMetrics> axes;

  const AxisMetrics* find(const std::string& column) const;
};

// Reads every column named e_*; pairs e_X with rho_X when present.
// Throws MalformedTelemetry without a monotone t column or without rows.
MetricsSummary compute_metrics(const Telemetry& telemetry);
std::string to_json(const MetricsSummary& summary);

}  // namespace coopman
