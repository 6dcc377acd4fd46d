#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "epirecon/error.hpp"

namespace epirecon::util {

using Date = std::chrono::sys_days;

// Parses YYYY-MM-DD.
inline Date parse_date(std::string_view s) {
  int y = 0;
  unsigned m = 0, d = 0;
  auto bad = [&] { return InputError("invalid ISO date '" + std::string(s) + "'"); };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw bad();
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    if (r.ec != std::errc{} || r.ptr != s.data() + pos + len) throw bad();
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw bad();
  return Date{ymd};
}

inline std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

struct IsoWeek {
  int year = 0;
  int week = 0;  // 1..53
};

inline IsoWeek iso_week(Date date) {
  using namespace std::chrono;
  // The ISO year is the calendar year of the Thursday in the same week.
  const unsigned wd = weekday{date}.iso_encoding();  // Mon = 1 .. Sun = 7
  const Date thursday = date + days{4 - static_cast<int>(wd)};
  const year y = year_month_day{thursday}.year();
  const Date jan1 = sys_days{y / January / 1};
  return {static_cast<int>(y), static_cast<int>((thursday - jan1).count() / 7 + 1)};
}

// 0 = Sunday .. 6 = Saturday.
inline int day_of_week(Date date) { return static_cast<int>(std::chrono::weekday{date}.c_encoding()); }

}  // namespace epirecon::util
