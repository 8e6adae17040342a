#include "aqicast/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "aqicast/error.hpp"

namespace aqicast::csv {
namespace {

// Parses records from a buffer; returns true if a record ended cleanly.
bool next_record(std::string_view text, std::size_t& pos, Row& row) {
  row.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  while (pos < text.size()) {
    char c = text[pos++];
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  row.push_back(std::move(field));
  return true;
}

bool blank(const Row& row) { return row.size() == 1 && row.front().empty(); }

}  // namespace

Row split_line(std::string_view line) {
  std::size_t pos = 0;
  Row row;
  if (!next_record(line, pos, row)) row.emplace_back();
  return row;
}

std::vector<Row> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::string_view view(text);
  if (view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);

  std::vector<Row> rows;
  std::size_t pos = 0;
  Row row;
  while (next_record(view, pos, row)) {
    if (!blank(row)) rows.push_back(row);
  }
  return rows;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << escape(row[i]);
  }
  out << '\n';
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

}  // namespace aqicast::csv
