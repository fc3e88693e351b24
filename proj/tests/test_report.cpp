#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "uhe/errors.hpp"
#include "uhe/report.hpp"
#include "uhe/rng.hpp"

using namespace uhe;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ScenarioReport sample_report() {
  ScenarioReport r;
  r.scenario = "demo";
  r.seed = 42;
  r.config = {{"alpha", 0.5}, {"n", 8}};
  r.results = {{"value", 1.25}};
  r.series = {{0.0, 10, 0.5, 0.25}, {1.0, 7, 0.125, 0.75}};
  r.profiles = {{"shape", {"x", "y"}, {{0.0, 1.0}, {0.5, 0.25}}}};
  r.ensemble_snapshot = "member_id,alive\n0,1\n";
  return r;
}

}  // namespace

TEST_CASE("format_double round-trips every value it prints") {
  Rng rng(71);
  for (int trial = 0; trial < 1000; ++trial) {
    // Spread across magnitudes, signs, and subnormal-ish exponents.
    const double mag = std::pow(10.0, rng.uniform() * 40.0 - 20.0);
    const double v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform() * mag;
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
    CHECK(s.find('n') == std::string::npos);  // no nan/inf in reports
  }
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5) == "-2.5");
  // The classic shortest-form witness.
  CHECK(format_double(0.30000000000000004) != "0.3");
}

TEST_CASE("series and profile tables render with fixed headers") {
  ScenarioReport r = sample_report();
  CHECK(series_csv(r.series) ==
        "t,alive_count,Lambda_A,Lambda_B\n"
        "0,10,0.5,0.25\n"
        "1,7,0.125,0.75\n");

  CHECK(profile_csv(r.profiles[0]) ==
        "x,y\n"
        "0,1\n"
        "0.5,0.25\n");

  Profile ragged{"bad", {"x", "y"}, {{1.0}}};
  CHECK_THROWS_AS(profile_csv(ragged), ValidationError);
  Profile no_columns{"bad", {}, {}};
  CHECK_THROWS_AS(profile_csv(no_columns), ValidationError);
}

TEST_CASE("report json is deterministic and schema-tagged") {
  ScenarioReport r = sample_report();
  nlohmann::json j = r.to_json();
  CHECK(j["schema_version"].get<int>() == kReportSchemaVersion);
  CHECK(j["engine"]["name"].get<std::string>() == kEngineName);
  CHECK(j["engine"]["version"].get<std::string>() == kEngineVersion);
  CHECK(j["scenario"].get<std::string>() == "demo");
  CHECK(j["seed"].get<std::uint64_t>() == 42);
  CHECK(j["series"]["rows"].size() == 2);
  CHECK(j["profiles"][0]["name"].get<std::string>() == "shape");
  CHECK(j["profiles"][0]["row_count"].get<int>() == 2);

  // Identical reports dump to identical bytes (sorted keys, stable floats).
  CHECK(r.to_json().dump(2) == sample_report().to_json().dump(2));
}

TEST_CASE("emit_report writes the full output set atomically") {
  const fs::path dir =
      fs::temp_directory_path() / ("uhe_report_test_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  ScenarioReport r = sample_report();
  emit_report(r, dir);

  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "series.csv"));
  CHECK(fs::exists(dir / "shape.csv"));
  CHECK(fs::exists(dir / "ensemble.csv"));

  const std::string report1 = slurp(dir / "report.json");
  CHECK(report1.back() == '\n');
  CHECK(slurp(dir / "series.csv") == series_csv(r.series));
  CHECK(slurp(dir / "ensemble.csv") == r.ensemble_snapshot);

  // Re-emitting over existing files reproduces identical bytes and leaves no
  // temporaries behind.
  emit_report(r, dir);
  CHECK(slurp(dir / "report.json") == report1);
  for (const auto& entry : fs::directory_iterator(dir))
    CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);

  // Without an ensemble snapshot no ensemble.csv is produced.
  fs::remove_all(dir);
  r.ensemble_snapshot.clear();
  emit_report(r, dir);
  CHECK_FALSE(fs::exists(dir / "ensemble.csv"));
  fs::remove_all(dir);
}

TEST_CASE("io failures surface as IoError") {
  const fs::path block =
      fs::temp_directory_path() / ("uhe_block_" + std::to_string(::getpid()));
  fs::remove_all(block);
  {
    std::ofstream out(block);
    out << "plain file\n";
  }
  // A regular file where a directory is needed.
  ScenarioReport r = sample_report();
  CHECK_THROWS_AS(emit_report(r, block / "sub"), IoError);
  CHECK_THROWS_AS(write_file_atomic(block / "sub" / "x.txt", "data"), IoError);
  fs::remove(block);

  // Profile names must be plain file stems, not paths.
  ScenarioReport evil = sample_report();
  evil.profiles[0].name = "../escape";
  const fs::path dir =
      fs::temp_directory_path() / ("uhe_evil_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  CHECK_THROWS_AS(emit_report(evil, dir), ValidationError);
  fs::remove_all(dir);
}
