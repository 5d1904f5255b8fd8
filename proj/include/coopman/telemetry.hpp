#pragma once

#include <string>
#include <vector>

namespace coopman {

// Column-major in name, row-major in data. Every row has columns.size() values.
struct Telemetry {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
  std::string to_csv() const;
};

// 17 significant digits, LF endings, header row.
std::string format_csv(const Telemetry& t);
// Throws MalformedTelemetry on ragged rows, empty header, or unparsable cells.
Telemetry parse_csv(const std::string& text);
Telemetry read_csv(const std::string& path);

// Writes to a sibling temporary and renames into place.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace coopman
