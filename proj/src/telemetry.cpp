#include "coopman/telemetry.hpp"

#include <cerrno>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "coopman/errors.hpp"

namespace coopman {

int Telemetry::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::string Telemetry::to_csv() const { return format_csv(*this); }

std::string format_csv(const Telemetry& t) {
  std::string out;
  out.reserve(t.rows.size() * t.columns.size() * 24 + 64);
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += t.columns[i];
  }
  out += '\n';
  char buf[40];
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      const int n = std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      out.append(buf, static_cast<std::size_t>(n));
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Telemetry parse_csv(const std::string& text) {
  Telemetry t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw Error(ErrorCode::MalformedTelemetry, "missing header row");
  if (line.back() == '\r') throw Error(ErrorCode::MalformedTelemetry, "expected LF line endings");
  t.columns = split(line);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.columns.size()) {
      throw Error(ErrorCode::MalformedTelemetry, "line " + std::to_string(lineno) + " has " +
                                                      std::to_string(cells.size()) + " cells, header has " +
                                                      std::to_string(t.columns.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size()) {
        throw Error(ErrorCode::MalformedTelemetry, "line " + std::to_string(lineno) + ": bad number '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Telemetry read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read telemetry file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " to " + path + ": " + ec.message());
}

}  // namespace coopman
