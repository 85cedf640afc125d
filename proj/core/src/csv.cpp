#include "segaudit/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "segaudit/error.hpp"

namespace segaudit {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_int(std::int64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw validation_error("csv: missing column '" + name + "'");
}

namespace {

void append_row(std::string& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    const auto& field = row[i];
    if (field.find_first_of(",\n\r") != std::string::npos) {
      throw validation_error("csv: field contains a separator: '" + field + "'");
    }
    if (i) out.push_back(',');
    out += field;
  }
  out.push_back('\n');
}

}  // namespace

std::string to_csv_string(const CsvTable& table) {
  std::string out;
  append_row(out, table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw validation_error("csv: row width does not match header");
    }
    append_row(out, row);
  }
  return out;
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
  const std::string body = to_csv_string(table);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open file for writing: " + path.string());
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  f.flush();
  if (!f) throw io_error("failed to write file: " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open file: " + path.string());
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      if (pos == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw io_error("csv: empty file: " + path.string());
  return table;
}

}  // namespace segaudit
