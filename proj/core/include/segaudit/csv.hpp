#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace segaudit {

// Minimal CSV support for the report schemas: comma-separated, LF line
// endings, no quoting (field values must not contain commas or newlines).
// Doubles are rendered as their shortest round-trip representation so report
// files are byte-reproducible.

std::string format_double(double v);
std::string format_int(std::int64_t v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws validation_error if absent.
  std::size_t column(const std::string& name) const;
};

std::string to_csv_string(const CsvTable& table);
void write_csv(const CsvTable& table, const std::filesystem::path& path);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace segaudit
