#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "epirecon/demog/split.hpp"
#include "epirecon/demog/tables.hpp"
#include "epirecon/error.hpp"

namespace epirecon::demog {

// Mortality hazard at continuous age x (years):
//   infant * exp(-infant_decay x) + makeham + gompertz_b exp(gompertz_c x),
// modulated by the week-of-year factor 1 + amplitude cos(2 pi (w - peak_week) / 52).
struct SyntheticMortality {
  double infant = 0.004;
  double infant_decay = 20.0;
  double makeham = 2e-4;
  double gompertz_b = 2e-5;
  double gompertz_c = 0.1;
  double amplitude = 0.15;
  double peak_week = 2.0;

  double hazard(double x) const {
    return infant * std::exp(-infant_decay * x) + makeham + gompertz_b * std::exp(gompertz_c * x);
  }
  double season(int week) const {
    return 1.0 + amplitude * std::cos(2.0 * std::numbers::pi * (week - peak_week) / kWeeksPerYear);
  }
};

struct SyntheticScenario {
  int terminal_age = 100;
  double births_per_week = 14000.0;
  SyntheticMortality mortality;
  // Multiplier on the stationary population for a block of ages, giving a
  // large cohort that ages through the population.
  int boom_lo = 0;
  int boom_hi = -1;
  double boom_factor = 1.0;
  // Births before the start relative to births_per_week, shaping the
  // initial age structure.
  double historic_birth_factor = 1.0;
  // Evaluate the hazard at the middle of each year class, so that the
  // population's own mortality is exactly a life table.
  bool class_constant_hazard = false;
  Date start = Date{std::chrono::year{2017} / std::chrono::January / 2};
  int weeks = 156;
  std::uint64_t seed = 1;
  bool stochastic = true;
};

struct SyntheticRun {
  WeeklyDeaths deaths;
  // Exact weekly cells at the start.
  WeeklyAgePopulation initial;
  // Single-year class population at the start of each week (weeks + 1 entries).
  std::vector<AnnualPopulation> population;
  // Per week, deaths and population at risk by single-year class.
  std::vector<std::vector<double>> deaths_by_age;
  std::vector<std::vector<double>> at_risk_by_age;

  // Totals over weeks [from, to) by class, for estimating a life table.
  std::pair<std::vector<double>, std::vector<double>> exposure(std::size_t from, std::size_t to) const {
    std::vector<double> d(deaths_by_age.front().size(), 0.0), w(d.size(), 0.0);
    for (std::size_t k = from; k < to; ++k) {
      for (std::size_t a = 0; a < d.size(); ++a) {
        d[a] += deaths_by_age[k][a];
        w[a] += at_risk_by_age[k][a];
      }
    }
    return {d, w};
  }
};

// Weekly cohort simulation with continuous-age hazards and binomial deaths
// (expected deaths when not stochastic). Each weekly class ages by one week
// per step and the terminal class is absorbing.
inline SyntheticRun simulate_population(const SyntheticScenario& sc) {
  if (sc.terminal_age < 2 || sc.weeks < 1 || !(sc.births_per_week > 0.0)) {
    throw ParameterError("synthetic population: invalid scenario");
  }
  const auto n_cells = static_cast<std::size_t>(kWeeksPerYear) * sc.terminal_age + 1;
  const std::size_t last = n_cells - 1;
  auto age_of = [&](std::size_t c) {
    // the terminal class sits at an assumed mean excess age of 2 years
    if (c == last) return sc.terminal_age + 2.0;
    if (sc.class_constant_hazard) return static_cast<double>(c / kWeeksPerYear) + 0.5;
    return (static_cast<double>(c) + 0.5) / kWeeksPerYear;
  };

  // Initial structure: survivors of a constant historic birth stream.
  std::vector<double> cells(n_cells);
  double surv = 1.0;
  for (std::size_t c = 0; c < last; ++c) {
    cells[c] = sc.births_per_week * sc.historic_birth_factor * surv;
    surv *= std::exp(-sc.mortality.hazard(age_of(c)) / kWeeksPerYear);
  }
  cells[last] = sc.births_per_week * sc.historic_birth_factor * surv /
                (-std::expm1(-sc.mortality.hazard(age_of(last)) / kWeeksPerYear));
  for (std::size_t c = 0; c < last; ++c) {
    const int a = static_cast<int>(c) / kWeeksPerYear;
    if (a >= sc.boom_lo && a <= sc.boom_hi) cells[c] *= sc.boom_factor;
  }
  if (sc.stochastic) {
    for (double& x : cells) x = std::round(x);
  }

  SyntheticRun run;
  run.initial.cells = cells;
  run.initial.birth_rate = sc.births_per_week;
  run.initial.as_of = sc.start;

  std::mt19937_64 rng(sc.seed);
  const auto T = static_cast<std::size_t>(sc.terminal_age);
  auto snapshot = [&] {
    AnnualPopulation p = single_year_classes(sc.terminal_age);
    for (std::size_t c = 0; c < n_cells; ++c) p.counts[std::min(c / kWeeksPerYear, T)] += cells[c];
    return p;
  };

  for (int k = 0; k < sc.weeks; ++k) {
    const Date week = sc.start + std::chrono::days{7 * k};
    AnnualPopulation snap = snapshot();
    snap.as_of = week;
    run.at_risk_by_age.push_back(snap.counts);
    run.population.push_back(std::move(snap));
    const double s = sc.mortality.season(week_of_year(week));
    std::vector<double> by_age(T + 1, 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < n_cells; ++c) {
      const double p = -std::expm1(-sc.mortality.hazard(age_of(c)) * s / kWeeksPerYear);
      double d = cells[c] * p;
      if (sc.stochastic) {
        std::binomial_distribution<long long> bin(static_cast<long long>(cells[c]), p);
        d = static_cast<double>(bin(rng));
      }
      cells[c] -= d;
      by_age[std::min(c / kWeeksPerYear, T)] += d;
      total += d;
    }
    cells[last] += cells[last - 1];
    for (std::size_t c = last - 1; c > 0; --c) cells[c] = cells[c - 1];
    cells[0] = sc.births_per_week;
    run.deaths.week_start.push_back(week);
    run.deaths.deaths.push_back(total);
    run.deaths_by_age.push_back(std::move(by_age));
  }
  AnnualPopulation snap = snapshot();
  snap.as_of = sc.start + std::chrono::days{7 * sc.weeks};
  run.population.push_back(std::move(snap));
  return run;
}

}  // namespace epirecon::demog
