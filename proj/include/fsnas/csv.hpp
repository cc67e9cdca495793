#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fsnas::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;

  /// Column position; throws Parse when absent.
  std::size_t column(const std::string& name) const;
};

/// Quotes a field if it contains a comma, quote, or line break.
std::string escape(const std::string& field);
std::string format_row(const Row& row);
/// Shortest round-trippable decimal form.
std::string number(double value);

void write(const std::filesystem::path& path, const Table& table);
void append_row(const std::filesystem::path& path, const Row& row);
Table read(const std::filesystem::path& path);

}  // namespace fsnas::csv
