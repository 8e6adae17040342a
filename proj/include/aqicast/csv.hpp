#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace aqicast::csv {

using Row = std::vector<std::string>;

/// Splits one logical CSV record (RFC 4180 quoting). Handles quoted commas and
/// doubled quotes; a trailing '\r' is dropped.
Row split_line(std::string_view line);

/// Reads a whole file as records. Quoted fields may span physical lines.
/// Blank lines are skipped.
std::vector<Row> read_file(const std::filesystem::path& path);

/// Quotes a field only when it contains a separator, quote or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace aqicast::csv
