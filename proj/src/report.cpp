#include "uhe/report.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include "uhe/errors.hpp"

namespace uhe {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("failed to format floating-point value");
  return std::string(buf, ptr);
}

nlohmann::json ScenarioReport::to_json() const {
  nlohmann::json series_rows = nlohmann::json::array();
  for (const auto& row : series) {
    series_rows.push_back({row.t, row.alive_count, row.lambda_a, row.lambda_b});
  }
  nlohmann::json profile_list = nlohmann::json::array();
  for (const auto& p : profiles) {
    profile_list.push_back({{"name", p.name}, {"columns", p.columns}, {"row_count", p.rows.size()}});
  }
  return nlohmann::json{
      {"schema_version", kReportSchemaVersion},
      {"engine", {{"name", kEngineName}, {"version", kEngineVersion}}},
      {"scenario", scenario},
      {"seed", seed},
      {"config", config},
      {"results", results},
      {"series", {{"columns", {"t", "alive_count", "Lambda_A", "Lambda_B"}}, {"rows", series_rows}}},
      {"profiles", profile_list},
  };
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path dir = path.has_parent_path() ? path.parent_path() : ".";
  const std::filesystem::path tmp = dir / (".tmp-" + path.filename().string());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move temporary file onto " + path.string());
  }
}

std::string series_csv(const std::vector<SeriesRow>& series) {
  std::string out = "t,alive_count,Lambda_A,Lambda_B\n";
  for (const auto& row : series) {
    out += format_double(row.t);
    out += ',';
    out += std::to_string(row.alive_count);
    out += ',';
    out += format_double(row.lambda_a);
    out += ',';
    out += format_double(row.lambda_b);
    out += '\n';
  }
  return out;
}

std::string profile_csv(const Profile& profile) {
  if (profile.columns.empty()) {
    throw ValidationError("profile '" + profile.name + "' has no columns");
  }
  std::string out;
  for (std::size_t i = 0; i < profile.columns.size(); ++i) {
    if (i) out += ',';
    out += profile.columns[i];
  }
  out += '\n';
  for (const auto& row : profile.rows) {
    if (row.size() != profile.columns.size()) {
      throw ValidationError("profile '" + profile.name + "' has a row width mismatching its columns");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

void emit_series(const ScenarioReport& report, const std::filesystem::path& out_dir) {
  write_file_atomic(out_dir / "series.csv", series_csv(report.series));
  for (const auto& p : report.profiles) {
    if (p.name.empty() || p.name.find('/') != std::string::npos) {
      throw ValidationError("profile name must be a plain file stem");
    }
    write_file_atomic(out_dir / (p.name + ".csv"), profile_csv(p));
  }
}

void emit_report(const ScenarioReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir.string());
  }
  write_file_atomic(out_dir / "report.json", report.to_json().dump(2) + "\n");
  emit_series(report, out_dir);
  if (!report.ensemble_snapshot.empty()) {
    write_file_atomic(out_dir / "ensemble.csv", report.ensemble_snapshot);
  }
}

}  // namespace uhe
