#include "fsnas/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fsnas/error.hpp"

namespace fsnas::csv {

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(ErrorCode::Parse, "csv: missing column '" + name + "'");
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_row(const Row& row) {
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line += ',';
    line += escape(row[i]);
  }
  return line;
}

std::string number(double value) {
  char buf[64];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

void write(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << format_row(table.header) << '\n';
  for (const auto& row : table.rows) out << format_row(row) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void append_row(const std::filesystem::path& path, const Row& row) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::Io, "cannot append to " + path.string());
  out << format_row(row) << '\n';
}

namespace {

Row parse_line(const std::string& text, std::size_t& pos) {
  Row row;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          field += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  row.push_back(std::move(field));
  return row;
}

}  // namespace

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  Table table;
  std::size_t pos = 0;
  if (text.empty()) throw Error(ErrorCode::Parse, "csv: " + path.string() + " is empty");
  table.header = parse_line(text, pos);
  while (pos < text.size()) {
    Row row = parse_line(text, pos);
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != table.header.size())
      throw Error(ErrorCode::Parse, "csv: " + path.string() + " row " + std::to_string(table.rows.size() + 1) +
                                        " has " + std::to_string(row.size()) + " fields, expected " +
                                        std::to_string(table.header.size()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace fsnas::csv
