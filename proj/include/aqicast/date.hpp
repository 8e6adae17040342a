#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace aqicast {

/// Calendar day backed by std::chrono::year_month_day.
class Date {
 public:
  Date() = default;
  Date(int year, unsigned month, unsigned day);

  /// Accepts "DD-MM-YYYY" and "YYYY-MM-DD"; returns nullopt for anything else
  /// or for days that do not exist (31-02-2020).
  static std::optional<Date> parse(std::string_view text);
  static Date from_days(long days_since_epoch);

  int year() const { return static_cast<int>(ymd_.year()); }
  unsigned month() const { return static_cast<unsigned>(ymd_.month()); }
  unsigned day() const { return static_cast<unsigned>(ymd_.day()); }
  long days_since_epoch() const;

  /// ISO 8601 "YYYY-MM-DD".
  std::string iso() const;

  friend bool operator==(const Date& a, const Date& b) { return a.ymd_ == b.ymd_; }
  friend std::strong_ordering operator<=>(const Date& a, const Date& b) {
    return a.days_since_epoch() <=> b.days_since_epoch();
  }

 private:
  std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::month{1},
                                   std::chrono::day{1}};
};

}  // namespace aqicast
