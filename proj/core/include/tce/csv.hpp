#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tce {

/// 17 significant digits; parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws ArgumentError when absent.
  std::size_t column(std::string_view name) const;
};

/// Plain comma-separated values without quoting.  Every row must match the header width.
CsvTable read_csv(std::istream& in);
void write_csv(std::ostream& out, const CsvTable& table);

}  // namespace tce
