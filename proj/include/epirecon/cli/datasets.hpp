#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "epirecon/deconv.hpp"
#include "epirecon/demog.hpp"
#include "epirecon/util/csv.hpp"

namespace epirecon::cli::datasets {

using util::Date;

// Daily fatal incidence with a large first wave peaking on day 35 and a
// smaller second wave peaking on day 110.
inline double two_wave_incidence(double t) {
  auto bump = [](double x, double c, double w) {
    const double z = (x - c) / w;
    return std::exp(-0.5 * z * z);
  };
  return 2.0 + 120.0 * bump(t, 35.0, 9.0) + 60.0 * bump(t, 110.0, 15.0);
}

inline constexpr int kTwoWavePeakDay = 35;

// Deaths on n days from `start`: two_wave_incidence convolved with `duration`,
// then Poisson noise, or gamma-Poisson with the given size when size > 0.
inline deconv::DeathSeries two_wave_deaths(const deconv::DurationDist& duration, std::uint64_t seed, double size = 0.0,
                                           int n = 160, Date start = util::parse_date("2020-03-01")) {
  std::mt19937_64 rng(seed);
  deconv::DeathSeries s;
  s.start = start;
  for (int i = 0; i < n; ++i) {
    double mu = 0.0;
    for (int d = 1; d <= duration.d_max; ++d) mu += duration.pmf[static_cast<std::size_t>(d)] * two_wave_incidence(i - d);
    if (size > 0.0) mu = std::gamma_distribution<double>(size, mu / size)(rng);
    s.deaths.push_back(static_cast<double>(std::poisson_distribution<long long>(mu)(rng)));
  }
  return s;
}

inline std::string death_csv(const deconv::DeathSeries& s) {
  util::CsvWriter w;
  w.row({"date", "deaths"});
  for (std::size_t i = 0; i < s.size(); ++i) w.row({util::format_date(s.date(i)), util::format_double(s.deaths[i])});
  return w.str();
}

inline std::string life_table_csv(const demog::LifeTable& lt) {
  util::CsvWriter w;
  w.row({"age", "m"});
  for (int a = 0; a <= lt.terminal_age(); ++a) {
    w.row({a == lt.terminal_age() ? std::to_string(a) + "+" : std::to_string(a), util::format_double(lt.rate(a))});
  }
  return w.str();
}

inline std::string population_csv(const demog::AnnualPopulation& p) {
  util::CsvWriter w;
  w.row({"age", "count"});
  for (std::size_t j = 0; j < p.size(); ++j) w.row({demog::age_label(p, j), util::format_double(p.counts[j])});
  return w.str();
}

inline std::string weekly_deaths_csv(const demog::WeeklyDeaths& d) {
  util::CsvWriter w;
  w.row({"week_start_date", "deaths"});
  for (std::size_t i = 0; i < d.size(); ++i) w.row({util::format_date(d.week_start[i]), util::format_double(d.deaths[i])});
  return w.str();
}

// Inputs for an excess-deaths run on a simulated population: the life table
// estimated from the reference weeks, the population at the target start and
// at mid-reference, and all weekly deaths.
struct DemographyDataset {
  std::string life_table, population, population_ref, weekly_deaths;
  Date target_start;
};

inline DemographyDataset demography_dataset(const demog::SyntheticScenario& sc, int reference_weeks = 156) {
  if (reference_weeks < 2 || reference_weeks >= sc.weeks) throw ParameterError("demography dataset: bad reference length");
  const demog::SyntheticRun run = demog::simulate_population(sc);
  const auto ref = static_cast<std::size_t>(reference_weeks);
  const auto [D, W] = run.exposure(0, ref);
  DemographyDataset out;
  out.life_table = life_table_csv(demog::life_table_from_exposure(D, W));
  out.population = population_csv(run.population[ref]);
  out.population_ref = population_csv(run.population[ref / 2]);
  out.weekly_deaths = weekly_deaths_csv(run.deaths);
  out.target_start = run.deaths.week_start[ref];
  return out;
}

// Stationary population: constant births and mortality, no cohort effects.
inline demog::SyntheticScenario stationary_scenario(std::uint64_t seed = 1) {
  demog::SyntheticScenario sc;
  sc.class_constant_hazard = true;
  sc.weeks = 313;
  sc.seed = seed;
  return sc;
}

// Ageing population: a cohort 40% above stationary size at ages 55-72 and
// historic births 10% above current births, at constant age-specific mortality.
inline demog::SyntheticScenario ageing_scenario(std::uint64_t seed = 1) {
  demog::SyntheticScenario sc = stationary_scenario(seed);
  sc.boom_lo = 55;
  sc.boom_hi = 72;
  sc.boom_factor = 1.4;
  sc.historic_birth_factor = 1.1;
  return sc;
}

}  // namespace epirecon::cli::datasets
