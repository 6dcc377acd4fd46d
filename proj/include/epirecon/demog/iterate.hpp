#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "epirecon/demog/seasonal.hpp"
#include "epirecon/demog/tables.hpp"
#include "epirecon/error.hpp"

namespace epirecon::demog {

struct IterateOptions {
  // Weekly births; empty means the first weekly cell of the start population.
  std::optional<double> births;
};

struct DemographyRun {
  std::vector<Date> week_start;
  std::vector<double> deaths;
  std::vector<double> births;
  WeeklyAgePopulation final_population;
  // Some cell had a weekly death share above one and was emptied.
  bool clamped = false;
};

namespace detail {

inline void check_alignment(const WeeklyAgePopulation& pop, const LifeTable& lt) {
  if (pop.cells.size() < static_cast<std::size_t>(kWeeksPerYear) + 1 ||
      (pop.cells.size() - 1) % kWeeksPerYear != 0) {
    throw InputError("weekly population: cell count is not 52 per year plus a terminal class");
  }
  if (lt.terminal_age() != pop.terminal_age()) {
    throw InputError("life table terminal age " + std::to_string(lt.terminal_age()) +
                     " does not match population terminal age " + std::to_string(pop.terminal_age()));
  }
  for (double c : pop.cells) {
    if (!std::isfinite(c) || c < 0.0) throw InputError("weekly population: negative or non-finite cell");
  }
}

// Weekly hazard share per cell: q_a times 52 d_w, so that d_w summing to one
// over the year gives each class its annual risk.
inline std::vector<double> cell_q(const WeeklyAgePopulation& pop, const LifeTable& lt) {
  std::vector<double> q(pop.cells.size());
  for (std::size_t c = 0; c < q.size(); ++c) q[c] = lt.weekly_q(pop.year_class(c));
  return q;
}

}  // namespace detail

// Iterates the weekly population forward from `start`: each week the
// expected deaths are removed from every weekly age class, all classes move
// one week older (the terminal class absorbs), and births enter the youngest.
inline DemographyRun iterate_demography(const WeeklyAgePopulation& pop0, const LifeTable& lt, const SeasonalCycle& cycle,
                                        Date start, int weeks, const IterateOptions& opt = {}) {
  detail::check_alignment(pop0, lt);
  if (weeks < 0) throw ParameterError("iterate_demography: negative number of weeks");
  const double births = opt.births.value_or(pop0.birth_rate);
  if (!std::isfinite(births) || births < 0.0) throw ParameterError("iterate_demography: negative birth rate");
  const std::vector<double> q = detail::cell_q(pop0, lt);

  DemographyRun run;
  std::vector<double> cells = pop0.cells;
  const std::size_t last = cells.size() - 1;
  for (int k = 0; k < weeks; ++k) {
    const Date week = start + std::chrono::days{7 * k};
    const double mult = kWeeksPerYear * cycle.multiplier(week);
    double deaths = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double h = q[c] * mult;
      if (h > 1.0) {
        h = 1.0;
        run.clamped = true;
      }
      const double d = cells[c] * h;
      cells[c] -= d;
      deaths += d;
    }
    cells[last] += cells[last - 1];
    for (std::size_t c = last - 1; c > 0; --c) cells[c] = cells[c - 1];
    cells[0] = births;
    run.week_start.push_back(week);
    run.deaths.push_back(deaths);
    run.births.push_back(births);
  }
  run.final_population = pop0;
  run.final_population.cells = std::move(cells);
  run.final_population.as_of = start + std::chrono::days{7 * weeks};
  return run;
}

// Expected deaths from a population held fixed: no ageing, no depletion.
inline DemographyRun no_ageing_variant(const WeeklyAgePopulation& pop, const LifeTable& lt, const SeasonalCycle& cycle,
                                       Date start, int weeks) {
  detail::check_alignment(pop, lt);
  if (weeks < 0) throw ParameterError("no_ageing_variant: negative number of weeks");
  const std::vector<double> q = detail::cell_q(pop, lt);
  DemographyRun run;
  for (int k = 0; k < weeks; ++k) {
    const Date week = start + std::chrono::days{7 * k};
    const double mult = kWeeksPerYear * cycle.multiplier(week);
    double deaths = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) {
      double h = q[c] * mult;
      if (h > 1.0) {
        h = 1.0;
        run.clamped = true;
      }
      deaths += pop.cells[c] * h;
    }
    run.week_start.push_back(week);
    run.deaths.push_back(deaths);
    run.births.push_back(0.0);
  }
  run.final_population = pop;
  return run;
}

enum class ExcessMethod { lifetable, weekly_average, lifetable_no_ageing };

inline std::string method_name(ExcessMethod m) {
  switch (m) {
    case ExcessMethod::lifetable:
      return "lifetable";
    case ExcessMethod::weekly_average:
      return "weekly-average";
    case ExcessMethod::lifetable_no_ageing:
      return "lifetable-no-ageing";
  }
  return "unknown";
}

struct ExpectedSeries {
  std::vector<Date> week_start;
  std::vector<double> expected;
  ExcessMethod method = ExcessMethod::lifetable;
};

inline ExpectedSeries expected_from_run(const DemographyRun& run, ExcessMethod method) {
  return {run.week_start, run.deaths, method};
}

inline int iso_weeks_in_year(int year) {
  using namespace std::chrono;
  return util::iso_week(sys_days{std::chrono::year{year} / December / 28}).week;
}

// Mean deaths for each week of year across whole reference years (ISO week
// 53 counts as week 52).
inline ExpectedSeries baseline_weekly_average(const WeeklyDeaths& ref, const std::vector<Date>& target_weeks) {
  ref.validate();
  const util::IsoWeek first = util::iso_week(ref.week_start.front());
  const util::IsoWeek last = util::iso_week(ref.week_start.back());
  if (first.week != 1 || last.week != iso_weeks_in_year(last.year)) {
    throw InputError("weekly average baseline: reference period must consist of whole ISO years");
  }
  std::array<double, kWeeksPerYear> sum{};
  std::array<int, kWeeksPerYear> count{};
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto w = static_cast<std::size_t>(week_of_year(ref.week_start[i]) - 1);
    sum[w] += ref.deaths[i];
    ++count[w];
  }
  ExpectedSeries out;
  out.method = ExcessMethod::weekly_average;
  out.week_start = target_weeks;
  for (Date d : target_weeks) {
    const auto w = static_cast<std::size_t>(week_of_year(d) - 1);
    out.expected.push_back(sum[w] / count[w]);
  }
  return out;
}

struct ExcessDeathReport {
  std::vector<Date> week_start;
  std::vector<double> expected;
  std::vector<double> observed;
  std::vector<double> excess;
  std::vector<double> cumulative;
  ExcessMethod method = ExcessMethod::lifetable;

  std::size_t size() const { return week_start.size(); }
  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

inline ExcessDeathReport excess_deaths(const WeeklyDeaths& observed, const ExpectedSeries& expected) {
  if (observed.week_start != expected.week_start || expected.expected.size() != expected.week_start.size()) {
    throw InputError("excess deaths: observed and expected weeks are not aligned");
  }
  ExcessDeathReport r;
  r.method = expected.method;
  r.week_start = observed.week_start;
  r.expected = expected.expected;
  r.observed = observed.deaths;
  double cum = 0.0;
  for (std::size_t i = 0; i < r.week_start.size(); ++i) {
    const double e = r.observed[i] - r.expected[i];
    cum += e;
    r.excess.push_back(e);
    r.cumulative.push_back(cum);
  }
  return r;
}

inline std::string excess_report_csv(const ExcessDeathReport& r) {
  util::CsvWriter w;
  w.row({"week_start", "expected", "observed", "excess", "cum_excess", "method"});
  const std::string tag = method_name(r.method);
  for (std::size_t i = 0; i < r.size(); ++i) {
    w.row({util::format_date(r.week_start[i]), util::format_double(r.expected[i]), util::format_double(r.observed[i]),
           util::format_double(r.excess[i]), util::format_double(r.cumulative[i]), tag});
  }
  return w.str();
}

struct AgeingDecomposition {
  std::vector<std::string> age;
  std::vector<double> delta;
  // m_i * delta_i and its running sum from the age floor upwards.
  std::vector<double> extra;
  std::vector<double> cumulative;

  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

// Extra expected deaths per year from the change in population by age
// between two dates at fixed mortality. Classes wider than one year use the
// mean rate over their ages.
inline AgeingDecomposition ageing_decomposition(const AnnualPopulation& pop1, const AnnualPopulation& pop2,
                                                const LifeTable& lt, int age_floor = 50) {
  pop1.validate();
  pop2.validate();
  if (pop1.lower != pop2.lower) throw InputError("ageing decomposition: population age classes differ");
  if (lt.terminal_age() != pop1.terminal_age()) {
    throw InputError("ageing decomposition: life table terminal age does not match the populations");
  }
  AgeingDecomposition out;
  double cum = 0.0;
  for (std::size_t j = 0; j < pop1.size(); ++j) {
    if (pop1.lower[j] < age_floor) continue;
    const int hi = j + 1 < pop1.size() ? pop1.lower[j + 1] : pop1.lower[j] + 1;
    double m = 0.0;
    for (int a = pop1.lower[j]; a < hi; ++a) m += lt.rate(a);
    m /= hi - pop1.lower[j];
    const double delta = pop2.counts[j] - pop1.counts[j];
    cum += m * delta;
    out.age.push_back(age_label(pop1, j));
    out.delta.push_back(delta);
    out.extra.push_back(m * delta);
    out.cumulative.push_back(cum);
  }
  return out;
}

// m_a = -52 log(1 - D_a / W_a) from deaths D_a and person-weeks at risk W_a
// by year class, the inverse of the weekly death share.
inline LifeTable life_table_from_exposure(const std::vector<double>& deaths, const std::vector<double>& person_weeks) {
  if (deaths.size() != person_weeks.size()) throw InputError("life table estimate: deaths and exposure misaligned");
  LifeTable lt;
  for (std::size_t a = 0; a < deaths.size(); ++a) {
    if (!(person_weeks[a] > 0.0) || deaths[a] < 0.0 || deaths[a] >= person_weeks[a]) {
      throw InputError("life table estimate: invalid deaths or exposure at age " + std::to_string(a));
    }
    lt.m.push_back(-kWeeksPerYear * std::log1p(-deaths[a] / person_weeks[a]));
  }
  lt.validate();
  return lt;
}

}  // namespace epirecon::demog
