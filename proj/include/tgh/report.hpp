#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace tgh {

inline constexpr int kSchemaVersion = 1;

// Flat table of homogeneous rows plus the configuration that produced it.
struct StudyReport {
  std::string study;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<nlohmann::ordered_json> rows;

  // Header line lists the union of row keys in first-seen order; the config
  // is echoed as leading '#' comment lines.
  std::string to_csv() const;
  nlohmann::ordered_json to_json() const;
};

// Full-precision decimal text for a double (17 significant digits).
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace tgh
