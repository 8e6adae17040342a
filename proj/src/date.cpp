#include "aqicast/date.hpp"

#include <charconv>
#include <cstdio>

namespace aqicast {
namespace {

std::optional<int> parse_digits(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day)
    : ymd_{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}} {}

std::optional<Date> Date::parse(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.size() != 10) return std::nullopt;

  std::optional<int> y, m, d;
  if (text[4] == '-' && text[7] == '-') {
    y = parse_digits(text.substr(0, 4));
    m = parse_digits(text.substr(5, 2));
    d = parse_digits(text.substr(8, 2));
  } else if (text[2] == '-' && text[5] == '-') {
    d = parse_digits(text.substr(0, 2));
    m = parse_digits(text.substr(3, 2));
    y = parse_digits(text.substr(6, 4));
  } else {
    return std::nullopt;
  }
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1) return std::nullopt;

  Date out(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
  if (!out.ymd_.ok()) return std::nullopt;
  return out;
}

Date Date::from_days(long days_since_epoch) {
  Date out;
  out.ymd_ = std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{days_since_epoch}}};
  return out;
}

long Date::days_since_epoch() const {
  return std::chrono::sys_days{ymd_}.time_since_epoch().count();
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year(), month(), day());
  return buf;
}

}  // namespace aqicast
