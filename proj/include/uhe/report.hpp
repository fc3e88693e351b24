#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace uhe {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kEngineName = "uhe";
inline constexpr const char* kEngineVersion = "0.1.0";

// One row of the time series every scenario emits (series.csv).
struct SeriesRow {
  double t = 0.0;
  std::int64_t alive_count = 0;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
};

// Extra tabular output, one CSV per profile (e.g. screen densities).
struct Profile {
  std::string name;                       // file becomes <name>.csv
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // each row matches columns
};

// Everything a scenario run produces.  Serialization is deterministic: keys
// are emitted sorted, doubles in shortest round-trip form, no timestamps, so
// identical config + seed gives byte-identical files.
struct ScenarioReport {
  std::string scenario;
  std::uint64_t seed = 0;
  nlohmann::json config;   // fully resolved echo; re-running it reproduces this report
  nlohmann::json results;  // scenario-specific scalars
  std::vector<SeriesRow> series;
  std::vector<Profile> profiles;
  std::string ensemble_snapshot;  // CSV body, or empty when not applicable

  nlohmann::json to_json() const;
};

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

// Writes to a temporary file in the target directory, then renames it over
// `path`, so a crash or error never leaves a partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string series_csv(const std::vector<SeriesRow>& series);
std::string profile_csv(const Profile& profile);

// series.csv plus one <name>.csv per profile under out_dir.
void emit_series(const ScenarioReport& report, const std::filesystem::path& out_dir);

// report.json, emit_series outputs, and ensemble.csv (when present) under
// out_dir, which is created if missing.
void emit_report(const ScenarioReport& report, const std::filesystem::path& out_dir);

}  // namespace uhe
