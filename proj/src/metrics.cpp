#include "coopman/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "coopman/errors.hpp"

namespace coopman {

const AxisMetrics* MetricsSummary::find(const std::string& column) const {
  for (const auto& a : axes) {
    if (a.column == column) return &a;
  }
  return nullptr;
}

MetricsSummary compute_metrics(const Telemetry& telemetry) {
  const int tc = telemetry.column("t");
  if (tc < 0) throw Error(ErrorCode::MalformedTelemetry, "missing t column");
  if (telemetry.rows.empty()) throw Error(ErrorCode::MalformedTelemetry, "no samples");
  const auto& rows = telemetry.rows;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != telemetry.columns.size()) {
      throw Error(ErrorCode::MalformedTelemetry, "row " + std::to_string(r) + " is ragged");
    }
    if (r > 0 && !(rows[r][tc] > rows[r - 1][tc])) {
      throw Error(ErrorCode::MalformedTelemetry, "t is not strictly increasing at row " + std::to_string(r));
    }
  }

  MetricsSummary out;
  out.duration = rows.back()[tc] - rows.front()[tc];
  for (std::size_t c = 0; c < telemetry.columns.size(); ++c) {
    const std::string& name = telemetry.columns[c];
    if (name.rfind("e_", 0) != 0) continue;
    AxisMetrics m;
    m.column = name;
    const int rc = telemetry.column("rho_" + name.substr(2));
    m.has_envelope = rc >= 0;
    m.min_margin = std::numeric_limits<double>::infinity();

    double integral = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double e = rows[r][c];
      m.max_abs = std::max(m.max_abs, std::abs(e));
      if (m.has_envelope) m.min_margin = std::min(m.min_margin, rows[r][rc] - std::abs(e));
      if (r > 0) {
        const double prev = rows[r - 1][c];
        integral += 0.5 * (prev * prev + e * e) * (rows[r][tc] - rows[r - 1][tc]);
      }
    }
    m.rms = out.duration > 0.0 ? std::sqrt(integral / out.duration) : std::abs(rows.front()[c]);
    if (!m.has_envelope) m.min_margin = 0.0;

    const double band = 0.02 * m.max_abs;
    m.settling_time = 0.0;
    if (m.max_abs > 0.0) {
      if (std::abs(rows.back()[c]) > band) {
        m.settling_time = std::numeric_limits<double>::infinity();
      } else {
        for (std::size_t r = rows.size(); r-- > 0;) {
          if (std::abs(rows[r][c]) > band) {
            m.settling_time = rows[r + 1][tc] - rows.front()[tc];
            break;
          }
        }
      }
    }
    out.axes.push_back(std::move(m));
  }
  return out;
}

std::string to_json(const MetricsSummary& summary) {
  const auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : summary.axes) {
    nlohmann::json j{{"column", a.column}, {"max_abs", num(a.max_abs)}, {"rms", num(a.rms)},
                     {"settling_time", num(a.settling_time)}};
    if (a.has_envelope) j["min_margin"] = num(a.min_margin);
    axes.push_back(std::move(j));
  }
  return nlohmann::json{{"duration", summary.duration}, {"axes", axes}}.dump(2) + "\n";
}

}  // namespace coopman
