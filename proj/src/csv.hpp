#pragma once

#include <istream>
#include <string>
#include <vector>

namespace structrates::detail {

/// Splits one CSV line on commas and trims surrounding blanks. Quoted
/// fields are not supported; labels in this project never contain commas.
std::vector<std::string> split_csv_line(const std::string& line);

/// Reads non-blank lines, skipping ones that start with '#'.
std::vector<std::vector<std::string>> read_csv_rows(std::istream& in);

double parse_double(const std::string& cell, const std::string& where);

/// Shortest-exact formatting: 17 significant digits.
std::string format_double(double value);

}  // namespace structrates::detail
