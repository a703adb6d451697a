#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace rwre {

/// A CSV cell. std::monostate renders as an empty field.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  bool empty() const { return rows.empty(); }
};

/// Doubles are printed with 17 significant digits so they round-trip.
std::string format_cell(const Cell& cell);

/// RFC 4180 output: comma separated, CRLF-free ("\n" line ends), fields
/// quoted when they contain a comma, quote or newline.
void write_csv(std::ostream& os, const Table& table);
void write_csv(const std::string& path, const Table& table);

/// Parses RFC 4180 text into raw string fields, header row included.
std::vector<std::vector<std::string>> read_csv(std::istream& is);

}  // namespace rwre
