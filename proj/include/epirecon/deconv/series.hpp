#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "epirecon/error.hpp"
#include "epirecon/util/csv.hpp"
#include "epirecon/util/dates.hpp"

namespace epirecon::deconv {

using util::Date;

// Daily death counts on consecutive days starting at `start`.
struct DeathSeries {
  Date start;
  std::vector<double> deaths;
  std::string region_label;
  std::optional<double> population;

  std::size_t size() const { return deaths.size(); }
  Date date(std::size_t i) const { return start + std::chrono::days{static_cast<int>(i)}; }

  void validate() const {
    if (deaths.empty()) throw InputError("death series is empty");
    for (std::size_t i = 0; i < deaths.size(); ++i) {
      const double y = deaths[i];
      if (!std::isfinite(y) || y < 0.0 || y != std::floor(y)) {
        throw InputError("death series: count on " + util::format_date(date(i)) + " is not a nonnegative integer");
      }
    }
    if (population && !(*population > 0.0)) throw InputError("death series: population must be positive");
  }
};

// Reads `date,deaths` CSV text. Rows must be consecutive days in order.
inline DeathSeries parse_death_csv(std::string_view text, const std::string& source) {
  const auto t = util::parse_csv(text, source);
  if (t.header.empty() || t.rows.empty()) throw InputError(source + ": no data rows");
  const int cd = t.require_column("date", source);
  const int cy = t.require_column("deaths", source);
  DeathSeries s;
  s.region_label = source;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto where = source + ":" + std::to_string(t.line_numbers[r]);
    const Date d = util::parse_date(t.rows[r][cd]);
    if (r == 0) {
      s.start = d;
    } else if (d != s.date(r)) {
      throw InputError(where + ": dates must be consecutive days, expected " + util::format_date(s.date(r)));
    }
    s.deaths.push_back(util::parse_double(t.rows[r][cy], where));
  }
  s.validate();
  return s;
}

inline DeathSeries read_death_csv(const std::string& path) { return parse_death_csv(util::read_file(path), path); }

}  // namespace epirecon::deconv
