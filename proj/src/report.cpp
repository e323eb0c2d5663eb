#include "tgh/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tgh/errors.hpp"

namespace tgh {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string csv_cell(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

}  // namespace

std::string StudyReport::to_csv() const {
  std::vector<std::string> columns;
  for (const auto& row : rows) {
    for (const auto& [key, _] : row.items()) {
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
    }
  }
  std::ostringstream out;
  out << "# study: " << study << "\n";
  out << "# schema_version: " << kSchemaVersion << "\n";
  out << "# config: " << config.dump() << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ",";
      if (row.contains(columns[c])) out << csv_cell(row.at(columns[c]));
    }
    out << "\n";
  }
  return out.str();
}

nlohmann::ordered_json StudyReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["study"] = study;
  j["config"] = config;
  j["rows"] = rows;
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace tgh
