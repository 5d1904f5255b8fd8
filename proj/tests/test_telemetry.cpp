#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "coopman/errors.hpp"
#include "coopman/metrics.hpp"
#include "coopman/telemetry.hpp"
#include "support.hpp"

using namespace coopman;
using coopman::testing::Sampler;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("coopman_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void expect_malformed(const std::string& text) {
  try {
    (void)parse_csv(text);
    FAIL("expected malformed telemetry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedTelemetry);
  }
}

}  // namespace

TEST_CASE("csv round trip is bit exact") {
  Sampler s(81);
  Telemetry t;
  t.columns = {"t", "e_0", "rho_0", "u_0_0"};
  for (int r = 0; r < 500; ++r) {
    t.rows.push_back({r * 1e-3, s.normal() * std::pow(10.0, s.integer(-300, 300)), s.uniform(0, 1), -0.0});
  }
  t.rows.push_back({1.0, std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(), 1e-320});
  const std::string csv = format_csv(t);
  CHECK(csv == t.to_csv());
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.rfind("t,e_0,rho_0,u_0_0\n", 0) == 0);
  const Telemetry back = parse_csv(csv);
  REQUIRE(back.columns == t.columns);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      CHECK(std::bit_cast<std::uint64_t>(back.rows[r][c]) == std::bit_cast<std::uint64_t>(t.rows[r][c]));
    }
  }
  CHECK(format_csv(back) == csv);
  CHECK(t.column("rho_0") == 2);
  CHECK(t.column("nope") == -1);
}

TEST_CASE("malformed csv is refused") {
  expect_malformed("");
  expect_malformed("t,a\r\n0,1\r\n");
  expect_malformed("t,a\n0,1\n1\n");
  expect_malformed("t,a\n0,1,2\n");
  expect_malformed("t,a\n0,abc\n");
  expect_malformed("t,a\n0,1e5x\n");
}

TEST_CASE("atomic writes replace content and leave no temporaries") {
  const fs::path dir = scratch_dir("atomic");
  const fs::path target = dir / "out.csv";
  write_file_atomic(target.string(), "first\n");
  CHECK(slurp(target) == "first\n");
  write_file_atomic(target.string(), "second\n");
  CHECK(slurp(target) == "second\n");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  write_file_atomic((dir / "nested" / "deeper" / "out.csv").string(), "made\n");
  CHECK(slurp(dir / "nested" / "deeper" / "out.csv") == "made\n");
  // A regular file where a directory is needed cannot be written through.
  try {
    write_file_atomic((target / "out.csv").string(), "x");
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
  CHECK(slurp(target) == "second\n");
  CHECK_THROWS_AS((void)read_csv((dir / "absent.csv").string()), Error);
  fs::remove_all(dir);
}

TEST_CASE("metrics: max, trapezoidal rms, settling time and envelope margin") {
  Telemetry t;
  t.columns = {"t", "e_s_0", "rho_s_0", "e_1", "x"};
  // e_s_0 = 1 - t on [0, 1] then 0; e_1 constant 2.
  for (int k = 0; k <= 200; ++k) {
    const double time = 0.01 * k;
    const double e = time < 1.0 ? 1.0 - time : 0.0;
    t.rows.push_back({time, e, 1.5 - 0.25 * time, 2.0, 7.0});
  }
  const MetricsSummary m = compute_metrics(t);
  CHECK(m.duration == doctest::Approx(2.0));
  REQUIRE(m.axes.size() == 2);
  CHECK(m.find("x") == nullptr);
  const AxisMetrics* a = m.find("e_s_0");
  REQUIRE(a != nullptr);
  CHECK(a->max_abs == 1.0);
  // Exact integral of (1 - t)^2 over [0, 1] is 1/3; the trapezoid rule adds h^2/6.
  CHECK(a->rms == doctest::Approx(std::sqrt((1.0 / 3.0 + 0.01 * 0.01 / 6.0) / 2.0)).epsilon(1e-12));
  CHECK(a->settling_time == doctest::Approx(0.99).epsilon(1e-12));
  CHECK(a->has_envelope);
  CHECK(a->min_margin == doctest::Approx(0.5 - 0.0).epsilon(1e-12));
  const AxisMetrics* b = m.find("e_1");
  REQUIRE(b != nullptr);
  CHECK_FALSE(b->has_envelope);
  CHECK(b->rms == doctest::Approx(2.0));
  CHECK(std::isinf(b->settling_time));

  const auto j = nlohmann::json::parse(to_json(m));
  CHECK(j["axes"][1]["settling_time"].is_null());
  CHECK(j["axes"][0]["min_margin"].get<double>() == doctest::Approx(0.5));
  CHECK_FALSE(j["axes"][1].contains("min_margin"));
}

TEST_CASE("metrics refuse telemetry without a usable time column") {
  Telemetry t;
  t.columns = {"e_0"};
  t.rows = {{1.0}};
  CHECK_THROWS_AS((void)compute_metrics(t), Error);
  t.columns = {"t", "e_0"};
  t.rows.clear();
  CHECK_THROWS_AS((void)compute_metrics(t), Error);
  t.rows = {{0.0, 1.0}, {0.0, 2.0}};
  CHECK_THROWS_AS((void)compute_metrics(t), Error);
}
