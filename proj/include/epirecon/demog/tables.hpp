#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epirecon/error.hpp"
#include "epirecon/util/csv.hpp"
#include "epirecon/util/dates.hpp"

namespace epirecon::demog {

using util::Date;

inline constexpr int kWeeksPerYear = 52;

// Annual instantaneous mortality rates m_a for ages 0..terminal_age(); the
// last entry is the open terminal class.
struct LifeTable {
  std::vector<double> m;
  // Set when the terminal rate is below the rate of the class before it.
  bool monotonicity_warning = false;

  int terminal_age() const { return static_cast<int>(m.size()) - 1; }
  double rate(int age) const { return m[static_cast<std::size_t>(std::min(age, terminal_age()))]; }
  // Average proportion of the class dying in one week.
  double weekly_q(int age) const { return -std::expm1(-rate(age) / kWeeksPerYear); }

  void validate() {
    if (m.size() < 2) throw InputError("life table needs at least two age classes");
    for (std::size_t a = 0; a < m.size(); ++a) {
      if (!std::isfinite(m[a]) || m[a] < 0.0) {
        throw InputError("life table: rate at age " + std::to_string(a) + " is not a nonnegative number");
      }
    }
    monotonicity_warning = m.back() < m[m.size() - 2];
  }
};

// Population counts by age class. Class j covers ages lower[j] up to
// lower[j+1]-1; the last class is open ended.
struct AnnualPopulation {
  std::vector<int> lower;
  std::vector<double> counts;
  std::optional<Date> as_of;

  std::size_t size() const { return counts.size(); }
  int terminal_age() const { return lower.back(); }
  double total() const {
    double s = 0.0;
    for (double c : counts) s += c;
    return s;
  }

  void validate() const {
    if (counts.size() < 2 || lower.size() != counts.size()) throw InputError("population needs at least two age classes");
    if (lower.front() != 0) throw InputError("population: first age class must start at 0");
    for (std::size_t j = 0; j < counts.size(); ++j) {
      if (j > 0 && lower[j] <= lower[j - 1]) throw InputError("population: age classes must increase");
      if (!std::isfinite(counts[j]) || counts[j] < 0.0) {
        throw InputError("population: count for age " + std::to_string(lower[j]) + " is not a nonnegative number");
      }
    }
  }
};

// Population in one-week age classes: cells 0 .. 52*T-1 for ages below the
// terminal age T, then one open terminal cell.
struct WeeklyAgePopulation {
  std::vector<double> cells;
  double birth_rate = 0.0;
  std::optional<Date> as_of;

  int terminal_age() const { return static_cast<int>(cells.size() - 1) / kWeeksPerYear; }
  int year_class(std::size_t cell) const { return static_cast<int>(cell) / kWeeksPerYear; }
  double total() const {
    double s = 0.0;
    for (double c : cells) s += c;
    return s;
  }
};

// Weekly death counts on consecutive weeks.
struct WeeklyDeaths {
  std::vector<Date> week_start;
  std::vector<double> deaths;

  std::size_t size() const { return deaths.size(); }

  void validate() const {
    if (deaths.empty() || week_start.size() != deaths.size()) throw InputError("weekly deaths: no data");
    for (std::size_t i = 0; i < deaths.size(); ++i) {
      if (!std::isfinite(deaths[i]) || deaths[i] < 0.0) {
        throw InputError("weekly deaths: count for " + util::format_date(week_start[i]) + " is not a nonnegative number");
      }
      if (i > 0 && week_start[i] - week_start[i - 1] != std::chrono::days{7}) {
        throw InputError("weekly deaths: " + util::format_date(week_start[i]) + " is not one week after the previous row");
      }
    }
  }

  // Rows with week_start in [from, to).
  WeeklyDeaths slice(Date from, Date to) const {
    WeeklyDeaths out;
    for (std::size_t i = 0; i < size(); ++i) {
      if (week_start[i] >= from && week_start[i] < to) {
        out.week_start.push_back(week_start[i]);
        out.deaths.push_back(deaths[i]);
      }
    }
    return out;
  }
};

// ISO week of year with week 53 folded into week 52.
inline int week_of_year(Date d) { return std::min(util::iso_week(d).week, kWeeksPerYear); }

struct AgeLabel {
  int lo = 0;
  std::optional<int> hi;  // inclusive; empty for an open class
  bool open = false;
};

// Accepts "a", "a-b" and "a+".
inline AgeLabel parse_age_label(std::string_view s, const std::string& where) {
  auto bad = [&] { return InputError(where + ": invalid age label '" + std::string(s) + "'"); };
  auto num = [&](std::string_view t) {
    int v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || r.ec != std::errc{} || r.ptr != t.data() + t.size() || v < 0) throw bad();
    return v;
  };
  AgeLabel l;
  if (!s.empty() && s.back() == '+') {
    l.lo = num(s.substr(0, s.size() - 1));
    l.open = true;
  } else if (const auto dash = s.find('-'); dash != std::string_view::npos) {
    l.lo = num(s.substr(0, dash));
    l.hi = num(s.substr(dash + 1));
    if (*l.hi < l.lo) throw bad();
  } else {
    l.lo = num(s);
    l.hi = l.lo;
  }
  return l;
}

// `age,m` with consecutive single-year ages from 0 (ranges are expanded to
// each year); the last row is the terminal class.
inline LifeTable parse_life_table_csv(std::string_view text, const std::string& source) {
  const auto t = util::parse_csv(text, source);
  if (t.rows.empty()) throw InputError(source + ": no data rows");
  const int ca = t.require_column("age", source);
  const int cm = t.require_column("m", source);
  LifeTable lt;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto where = source + ":" + std::to_string(t.line_numbers[r]);
    const AgeLabel l = parse_age_label(t.rows[r][ca], where);
    if (l.lo != static_cast<int>(lt.m.size())) throw InputError(where + ": ages must be consecutive from 0");
    if (l.open && r + 1 != t.rows.size()) throw InputError(where + ": open age class must be last");
    const double m = util::parse_double(t.rows[r][cm], where);
    const int hi = l.hi.value_or(l.lo);
    for (int a = l.lo; a <= hi; ++a) lt.m.push_back(m);
  }
  lt.validate();
  return lt;
}

// `age,count`; the last class must be open ("100+").
inline AnnualPopulation parse_population_csv(std::string_view text, const std::string& source) {
  const auto t = util::parse_csv(text, source);
  if (t.rows.empty()) throw InputError(source + ": no data rows");
  const int ca = t.require_column("age", source);
  const int cc = t.require_column("count", source);
  AnnualPopulation p;
  int next = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto where = source + ":" + std::to_string(t.line_numbers[r]);
    const AgeLabel l = parse_age_label(t.rows[r][ca], where);
    if (l.lo != next) throw InputError(where + ": age classes must be contiguous from 0");
    const bool last = r + 1 == t.rows.size();
    if (l.open != last) throw InputError(where + ": exactly the last age class must be open ended");
    p.lower.push_back(l.lo);
    p.counts.push_back(util::parse_double(t.rows[r][cc], where));
    next = l.hi.value_or(l.lo) + 1;
  }
  p.validate();
  return p;
}

// `week_start_date,deaths` on consecutive weeks.
inline WeeklyDeaths parse_weekly_deaths_csv(std::string_view text, const std::string& source) {
  const auto t = util::parse_csv(text, source);
  if (t.rows.empty()) throw InputError(source + ": no data rows");
  const int cd = t.require_column("week_start_date", source);
  const int cy = t.require_column("deaths", source);
  WeeklyDeaths w;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto where = source + ":" + std::to_string(t.line_numbers[r]);
    w.week_start.push_back(util::parse_date(t.rows[r][cd]));
    w.deaths.push_back(util::parse_double(t.rows[r][cy], where));
  }
  w.validate();
  return w;
}

inline LifeTable read_life_table_csv(const std::string& path) { return parse_life_table_csv(util::read_file(path), path); }
inline AnnualPopulation read_population_csv(const std::string& path) {
  return parse_population_csv(util::read_file(path), path);
}
inline WeeklyDeaths read_weekly_deaths_csv(const std::string& path) {
  return parse_weekly_deaths_csv(util::read_file(path), path);
}

inline std::string age_label(const AnnualPopulation& p, std::size_t j) {
  if (j + 1 == p.size()) return std::to_string(p.lower[j]) + "+";
  const int hi = p.lower[j + 1] - 1;
  return hi == p.lower[j] ? std::to_string(hi) : std::to_string(p.lower[j]) + "-" + std::to_string(hi);
}

}  // namespace epirecon::demog
