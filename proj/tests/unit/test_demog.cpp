#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "demog_scenarios.hpp"
#include "epirecon/demog.hpp"

using namespace epirecon;
using namespace epirecon::demog;

namespace {

Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

AnnualPopulation annual(const std::vector<double>& counts) {
  AnnualPopulation p = single_year_classes(static_cast<int>(counts.size()) - 1);
  p.counts = counts;
  return p;
}

LifeTable constant_table(int terminal, double m) {
  LifeTable lt;
  lt.m.assign(static_cast<std::size_t>(terminal) + 1, m);
  lt.validate();
  return lt;
}

WeeklyAgePopulation weekly_population(int terminal, double per_cell, double births) {
  WeeklyAgePopulation w;
  w.cells.assign(static_cast<std::size_t>(kWeeksPerYear) * terminal + 1, per_cell);
  w.birth_rate = births;
  return w;
}

WeeklyDeaths weekly_series(Date start, const std::vector<double>& deaths) {
  WeeklyDeaths w;
  for (std::size_t i = 0; i < deaths.size(); ++i) {
    w.week_start.push_back(start + std::chrono::days{7 * static_cast<int>(i)});
    w.deaths.push_back(deaths[i]);
  }
  return w;
}

double max_relative_error(const SeasonalCycle& fit, const SeasonalCycle& truth) {
  double e = 0.0;
  for (std::size_t w = 0; w < fit.d.size(); ++w) e = std::max(e, std::abs(fit.d[w] / truth.d[w] - 1.0));
  return e;
}

}  // namespace

// ---------------------------------------------------------------- inputs

TEST(Tables, WeekOfYearFoldsWeek53) {
  EXPECT_EQ(week_of_year(ymd(2020, 12, 28)), 52);  // ISO 2020-W53
  EXPECT_EQ(week_of_year(ymd(2020, 12, 21)), 52);
  EXPECT_EQ(week_of_year(ymd(2021, 1, 4)), 1);
  EXPECT_EQ(week_of_year(ymd(2019, 12, 30)), 1);  // ISO 2020-W01
}

TEST(Tables, LifeTableCsvExpandsRanges) {
  const LifeTable lt = parse_life_table_csv("age,m\n0,0.004\n1-4,0.0002\n5,0.0003\n6+,0.5\n", "lt.csv");
  ASSERT_EQ(lt.terminal_age(), 6);
  EXPECT_EQ(lt.m[1], 0.0002);
  EXPECT_EQ(lt.m[4], 0.0002);
  EXPECT_EQ(lt.rate(99), 0.5);
  EXPECT_FALSE(lt.monotonicity_warning);
}

TEST(Tables, LifeTableMonotonicityIsAWarning) {
  const LifeTable lt = parse_life_table_csv("age,m\n0,0.1\n1,0.3\n2+,0.2\n", "lt.csv");
  EXPECT_TRUE(lt.monotonicity_warning);
}

TEST(Tables, LifeTableErrors) {
  EXPECT_THROW(parse_life_table_csv("age,m\n0,-0.1\n1+,0.2\n", "lt.csv"), InputError);
  EXPECT_THROW(parse_life_table_csv("age,m\n0,0.1\n2+,0.2\n", "lt.csv"), InputError);
  EXPECT_THROW(parse_life_table_csv("age,rate\n0,0.1\n1+,0.2\n", "lt.csv"), InputError);
  EXPECT_THROW(parse_life_table_csv("age,m\n", "lt.csv"), InputError);
}

TEST(Tables, PopulationCsv) {
  const AnnualPopulation p = parse_population_csv("age,count\n0-4,500\n5-9,400\n10+,300\n", "pop.csv");
  EXPECT_EQ(p.lower, (std::vector<int>{0, 5, 10}));
  EXPECT_EQ(p.terminal_age(), 10);
  EXPECT_EQ(p.total(), 1200.0);
  EXPECT_EQ(age_label(p, 0), "0-4");
  EXPECT_EQ(age_label(p, 2), "10+");
  EXPECT_THROW(parse_population_csv("age,count\n0,5\n1,4\n", "pop.csv"), InputError);
  EXPECT_THROW(parse_population_csv("age,count\n0,5\n2+,4\n", "pop.csv"), InputError);
  EXPECT_THROW(parse_population_csv("age,count\n0,-5\n1+,4\n", "pop.csv"), InputError);
}

TEST(Tables, WeeklyDeathsCsv) {
  const WeeklyDeaths w = parse_weekly_deaths_csv("week_start_date,deaths\n2020-01-06,10\n2020-01-13,12\n", "d.csv");
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w.deaths[1], 12.0);
  EXPECT_THROW(parse_weekly_deaths_csv("week_start_date,deaths\n2020-01-06,10\n2020-01-14,12\n", "d.csv"),
               InputError);
  EXPECT_THROW(parse_weekly_deaths_csv("week_start_date,deaths\n2020-01-06,nan\n", "d.csv"), InputError);
}

TEST(Tables, WeeklyQ) {
  LifeTable lt;
  lt.m = {0.52, 0.52};
  EXPECT_NEAR(lt.weekly_q(0), 0.0099501662508319, 1e-15);
}

TEST(Tables, LifeTableFromExposureInvertsWeeklyQ) {
  const std::vector<double> m{0.004, 0.0003, 0.02, 0.6};
  std::vector<double> D, W;
  for (double r : m) {
    W.push_back(52000.0);
    D.push_back(52000.0 * (1.0 - std::exp(-r / 52.0)));
  }
  const LifeTable lt = life_table_from_exposure(D, W);
  for (std::size_t a = 0; a < m.size(); ++a) EXPECT_NEAR(lt.m[a], m[a], 1e-14 * std::max(1.0, m[a]));
  EXPECT_THROW(life_table_from_exposure({1.0}, {0.0}), InputError);
}

// ---------------------------------------------------------------- split

TEST(Split, UniformPopulationGivesEqualCells) {
  const double P = 5200.0;
  std::vector<double> counts(101, P);
  const WeeklyAgePopulation w = split_to_weekly(annual(counts));
  ASSERT_EQ(w.cells.size(), 52u * 100 + 1);
  for (std::size_t c = 0; c + 1 < w.cells.size(); ++c) ASSERT_NEAR(w.cells[c], P / 52.0, 1e-9) << c;
  EXPECT_EQ(w.cells.back(), P);
  EXPECT_NEAR(w.birth_rate, P / 52.0, 1e-9);
}

TEST(Split, BabyBoomHasNoStepDiscontinuity) {
  std::vector<double> counts(101);
  for (int a = 0; a <= 100; ++a) {
    counts[static_cast<std::size_t>(a)] = a < 50 ? 10000.0 : (a <= 60 ? 13100.0 : 13100.0 * std::exp(-0.05 * (a - 60)));
  }
  const AnnualPopulation pop = annual(counts);
  const WeeklyAgePopulation w = split_to_weekly(pop);
  double worst = 0.0;
  for (std::size_t c = 1; c + 1 < w.cells.size(); ++c) {
    worst = std::max(worst, std::abs(w.cells[c] / w.cells[c - 1] - 1.0));
  }
  EXPECT_LT(worst, 0.03);
  const AnnualPopulation back = aggregate_weekly(w, pop);
  for (std::size_t j = 0; j < pop.size(); ++j) EXPECT_NEAR(back.counts[j], pop.counts[j], 1e-9 * pop.counts[j]);
}

TEST(Split, CoarseClassesReproduceTotals) {
  AnnualPopulation pop;
  double level = 60000.0;
  for (int a = 0; a < 90; a += 5) {
    pop.lower.push_back(a);
    pop.counts.push_back(level);
    level *= a < 40 ? 1.02 : 0.85;
  }
  pop.lower.push_back(90);
  pop.counts.push_back(8000.0);
  const WeeklyAgePopulation w = split_to_weekly(pop);
  ASSERT_EQ(w.terminal_age(), 90);
  const AnnualPopulation back = aggregate_weekly(w, pop);
  for (std::size_t j = 0; j < pop.size(); ++j) EXPECT_NEAR(back.counts[j], pop.counts[j], 1e-9 * pop.counts[j]);
  for (double c : w.cells) EXPECT_GE(c, 0.0);
}

TEST(Split, CellsNonnegativeAndTotalsExactOnRoughInput) {
  std::vector<double> counts{900, 20, 1500, 0, 0, 3000, 10, 700, 50};
  const AnnualPopulation pop = annual(counts);
  const WeeklyAgePopulation w = split_to_weekly(pop);
  for (double c : w.cells) EXPECT_GE(c, 0.0);
  const AnnualPopulation back = aggregate_weekly(w, pop);
  for (std::size_t j = 0; j < pop.size(); ++j) EXPECT_NEAR(back.counts[j], pop.counts[j], 1e-9 * (1.0 + pop.counts[j]));
}

TEST(Split, NegativeCountIsAnInputError) {
  std::vector<double> counts{100, -1, 100, 100, 50};
  EXPECT_THROW(split_to_weekly(annual(counts)), InputError);
}

// ---------------------------------------------------------------- iterate

TEST(Iterate, ZeroMortalityConservesPopulation) {
  const WeeklyAgePopulation pop = weekly_population(10, 100.0, 250.0);
  const double initial = pop.total();
  const int N = 200;
  const DemographyRun run =
      iterate_demography(pop, constant_table(10, 0.0), SeasonalCycle::flat(), ymd(2017, 1, 2), N);
  for (double d : run.deaths) EXPECT_EQ(d, 0.0);
  EXPECT_DOUBLE_EQ(run.final_population.total(), initial + N * 250.0);
  // births have moved N - 1 weeks into the population
  for (int c = 0; c < N; ++c) EXPECT_EQ(run.final_population.cells[static_cast<std::size_t>(c)], 250.0);
  EXPECT_EQ(run.final_population.cells[N], 100.0);
  EXPECT_FALSE(run.clamped);
}

TEST(Iterate, OneWeekDeathsMatchHazardShare) {
  const int T = 5;
  LifeTable lt;
  lt.m = {0.1, 0.2, 0.3, 0.4, 0.5, 0.9};
  WeeklyAgePopulation pop = weekly_population(T, 0.0, 0.0);
  for (std::size_t c = 0; c < pop.cells.size(); ++c) pop.cells[c] = 10.0 + static_cast<double>(c % 7);
  SeasonalCycle cyc = SeasonalCycle::flat();
  for (std::size_t w = 0; w < cyc.d.size(); ++w) cyc.d[w] = (w == 0 ? 2.0 : 50.0 / 51.0) / 52.0;
  const Date start = ymd(2018, 1, 1);  // ISO week 1
  const DemographyRun run = iterate_demography(pop, lt, cyc, start, 1);
  double expected = 0.0;
  for (std::size_t c = 0; c < pop.cells.size(); ++c) {
    const double q = 1.0 - std::exp(-lt.m[std::min<std::size_t>(c / 52, T)] / 52.0);
    expected += pop.cells[c] * q * 2.0;
  }
  EXPECT_NEAR(run.deaths[0], expected, 1e-10 * expected);
}

TEST(Iterate, BookkeepingPerWeek) {
  SyntheticScenario sc;
  sc.stochastic = false;
  const SyntheticRun syn = simulate_population(sc);
  const WeeklyAgePopulation pop = split_to_weekly(syn.population.front());
  LifeTable lt;
  for (int a = 0; a <= 100; ++a) lt.m.push_back(sc.mortality.hazard(a + 0.5));
  lt.validate();
  const SeasonalCycle cyc = testing_oracles::true_cycle(sc.mortality);
  WeeklyAgePopulation cur = pop;
  Date week = sc.start;
  for (int k = 0; k < 60; ++k) {
    const DemographyRun one = iterate_demography(cur, lt, cyc, week, 1);
    const double change = one.final_population.total() - cur.total();
    ASSERT_NEAR(change, one.births[0] - one.deaths[0], 1e-6 * std::abs(one.deaths[0]));
    cur = one.final_population;
    week += std::chrono::days{7};
  }
  const DemographyRun all = iterate_demography(pop, lt, cyc, sc.start, 60);
  EXPECT_NEAR(all.final_population.total(), cur.total(), 1e-9 * cur.total());
  const double births = std::accumulate(all.births.begin(), all.births.end(), 0.0);
  const double deaths = std::accumulate(all.deaths.begin(), all.deaths.end(), 0.0);
  EXPECT_NEAR(all.final_population.total() - pop.total(), births - deaths, 1e-6 * deaths);
}

TEST(Iterate, ExtremeRatesClampAndFlag) {
  const WeeklyAgePopulation pop = weekly_population(3, 10.0, 1.0);
  SeasonalCycle cyc = SeasonalCycle::flat();
  cyc.d.fill(0.0);
  cyc.d[0] = 1.0;  // all annual risk in week 1
  const DemographyRun run = iterate_demography(pop, constant_table(3, 500.0), cyc, ymd(2018, 1, 1), 3);
  EXPECT_TRUE(run.clamped);
  for (double c : run.final_population.cells) EXPECT_GE(c, 0.0);
  EXPECT_NEAR(run.deaths[0], pop.total(), 1e-9);
}

TEST(Iterate, TerminalAgeMismatchIsAnInputError) {
  EXPECT_THROW(iterate_demography(weekly_population(10, 1.0, 1.0), constant_table(9, 0.1), SeasonalCycle::flat(),
                                  ymd(2018, 1, 1), 1),
               InputError);
}

TEST(Iterate, NoAgeingMatchesIterateWithZeroMortality) {
  const WeeklyAgePopulation pop = weekly_population(4, 30.0, 12.0);
  const LifeTable lt = constant_table(4, 0.0);
  const auto a = iterate_demography(pop, lt, SeasonalCycle::flat(), ymd(2018, 1, 1), 20);
  const auto b = no_ageing_variant(pop, lt, SeasonalCycle::flat(), ymd(2018, 1, 1), 20);
  EXPECT_EQ(a.deaths, b.deaths);
  EXPECT_EQ(a.week_start, b.week_start);
}

TEST(Iterate, NoAgeingIsFlatUpToTheCycle) {
  const WeeklyAgePopulation pop = weekly_population(4, 30.0, 12.0);
  SyntheticMortality mort;
  const SeasonalCycle cyc = testing_oracles::true_cycle(mort);
  const Date start = ymd(2018, 1, 1);
  const auto run = no_ageing_variant(pop, constant_table(4, 0.2), cyc, start, 104);
  const double base = run.deaths[0] / cyc.multiplier(start);
  for (std::size_t k = 0; k < run.deaths.size(); ++k) {
    EXPECT_NEAR(run.deaths[k] / cyc.multiplier(run.week_start[k]), base, 1e-10 * base);
  }
  EXPECT_EQ(run.final_population.cells, pop.cells);
}

// ---------------------------------------------------------------- excess

TEST(Excess, IdenticalSeriesGiveZero) {
  const WeeklyDeaths obs = weekly_series(ymd(2020, 1, 6), {10, 20, 30, 40});
  const auto r = excess_deaths(obs, ExpectedSeries{obs.week_start, obs.deaths, ExcessMethod::lifetable});
  for (double e : r.excess) EXPECT_EQ(e, 0.0);
  EXPECT_EQ(r.total(), 0.0);
}

TEST(Excess, ConstantExcessAccumulates) {
  const std::vector<double> expected(10, 1000.0);
  std::vector<double> observed(10, 1100.0);
  const WeeklyDeaths obs = weekly_series(ymd(2020, 1, 6), observed);
  const auto r = excess_deaths(obs, ExpectedSeries{obs.week_start, expected, ExcessMethod::weekly_average});
  EXPECT_EQ(r.total(), 1000.0);
  EXPECT_EQ(r.method, ExcessMethod::weekly_average);
}

TEST(Excess, CumulativeIsRunningSum) {
  const WeeklyDeaths obs = weekly_series(ymd(2020, 1, 6), {10.5, 7.25, 30.0, 1.0 / 3.0, 19.0});
  const auto r = excess_deaths(obs, ExpectedSeries{obs.week_start, {3.1, 9.9, 12.0, 0.1, 50.0}, ExcessMethod::lifetable});
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    sum += r.excess[i];
    EXPECT_EQ(r.cumulative[i], sum);
  }
}

TEST(Excess, MisalignedWeeksAreAnInputError) {
  const WeeklyDeaths obs = weekly_series(ymd(2020, 1, 6), {1, 2, 3});
  const WeeklyDeaths other = weekly_series(ymd(2020, 1, 13), {1, 2, 3});
  EXPECT_THROW(excess_deaths(obs, ExpectedSeries{other.week_start, other.deaths, ExcessMethod::lifetable}), InputError);
  EXPECT_THROW(excess_deaths(obs, ExpectedSeries{obs.week_start, {1, 2}, ExcessMethod::lifetable}), InputError);
}

TEST(Excess, ReportCsv) {
  const WeeklyDeaths obs = weekly_series(ymd(2020, 1, 6), {12, 8});
  const auto r = excess_deaths(obs, ExpectedSeries{obs.week_start, {10, 10}, ExcessMethod::lifetable_no_ageing});
  EXPECT_EQ(excess_report_csv(r),
            "week_start,expected,observed,excess,cum_excess,method\n"
            "2020-01-06,10,12,2,2,lifetable-no-ageing\n"
            "2020-01-13,10,8,-2,0,lifetable-no-ageing\n");
}

TEST(WeeklyAverage, SingleYearIsItself) {
  std::vector<double> d(52);
  for (int i = 0; i < 52; ++i) d[static_cast<std::size_t>(i)] = 100.0 + i;
  const WeeklyDeaths ref = weekly_series(ymd(2018, 12, 31), d);  // ISO 2019
  const auto e = baseline_weekly_average(ref, ref.week_start);
  EXPECT_EQ(e.expected, d);
  EXPECT_EQ(e.method, ExcessMethod::weekly_average);
}

TEST(WeeklyAverage, MeanAcrossYearsAndWeek53) {
  std::vector<double> d(104);
  for (int i = 0; i < 52; ++i) {
    d[static_cast<std::size_t>(i)] = 100.0;
    d[static_cast<std::size_t>(52 + i)] = 200.0;
  }
  d[51] = 10.0;
  d[103] = 30.0;
  const WeeklyDeaths ref = weekly_series(ymd(2018, 1, 1), d);  // ISO 2018 and 2019
  const std::vector<Date> target{ymd(2020, 1, 6), ymd(2020, 12, 21), ymd(2020, 12, 28)};
  const auto e = baseline_weekly_average(ref, target);
  EXPECT_EQ(e.expected, (std::vector<double>{150.0, 20.0, 20.0}));
}

TEST(WeeklyAverage, PartialYearIsAnInputError) {
  const WeeklyDeaths ref = weekly_series(ymd(2018, 1, 8), std::vector<double>(52, 1.0));
  EXPECT_THROW(baseline_weekly_average(ref, ref.week_start), InputError);
}

// ---------------------------------------------------------------- ageing decomposition

TEST(AgeingDecomposition, IdenticalPopulationsGiveZero) {
  const AnnualPopulation p = annual(std::vector<double>(101, 1000.0));
  const auto r = ageing_decomposition(p, p, constant_table(100, 0.05));
  ASSERT_EQ(r.age.size(), 51u);
  EXPECT_EQ(r.age.front(), "50");
  EXPECT_EQ(r.age.back(), "100+");
  for (double c : r.cumulative) EXPECT_EQ(c, 0.0);
}

TEST(AgeingDecomposition, HandComputed) {
  LifeTable lt;
  lt.m = {0.01, 0.02, 0.03, 0.04};
  const AnnualPopulation a = annual({100, 200, 300, 400});
  const AnnualPopulation b = annual({100, 250, 200, 500});
  const auto r = ageing_decomposition(a, b, lt, 1);
  EXPECT_EQ(r.delta, (std::vector<double>{50, -100, 100}));
  EXPECT_NEAR(r.cumulative[0], 1.0, 1e-15);
  EXPECT_NEAR(r.cumulative[1], -2.0, 1e-15);
  EXPECT_NEAR(r.total(), 2.0, 1e-15);
}

TEST(AgeingDecomposition, Linear) {
  std::vector<double> c1(101), c2(101), c3(101);
  LifeTable lt;
  for (int a = 0; a <= 100; ++a) {
    const auto i = static_cast<std::size_t>(a);
    c1[i] = 1000.0 + 3.0 * a;
    c2[i] = 1000.0 + 5.0 * std::sin(a);
    c3[i] = c1[i] + 2.0 * (c2[i] - c1[i]);
    lt.m.push_back(2e-5 * std::exp(0.1 * a));
  }
  const auto r1 = ageing_decomposition(annual(c1), annual(c2), lt);
  const auto r2 = ageing_decomposition(annual(c1), annual(c3), lt);
  for (std::size_t i = 0; i < r1.cumulative.size(); ++i) {
    EXPECT_NEAR(r2.cumulative[i], 2.0 * r1.cumulative[i], 1e-12 * (1.0 + std::abs(r1.cumulative[i])));
  }
}

// ---------------------------------------------------------------- seasonal cycle

TEST(Seasonal, FlatDeathsGiveUniformMultipliers) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SyntheticScenario sc;
    sc.seed = seed;
    sc.mortality.amplitude = 0.0;
    const SeasonalCycle c = fit_seasonal_cycle(simulate_population(sc).deaths);
    for (double d : c.d) ASSERT_NEAR(d * 52.0, 1.0, 0.02) << "seed " << seed;
  }
}

TEST(Seasonal, RecoversSinusoidalCycle) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    SyntheticScenario sc;
    sc.seed = seed;
    const SeasonalCycle c = fit_seasonal_cycle(simulate_population(sc).deaths);
    ASSERT_LT(max_relative_error(c, testing_oracles::true_cycle(sc.mortality)), 0.03) << "seed " << seed;
    double sum = 0.0;
    for (double d : c.d) {
      ASSERT_GT(d, 0.0);
      sum += d;
    }
    ASSERT_NEAR(sum, 1.0, 1e-10);
  }
}

TEST(Seasonal, ScaledTResistsOutliers) {
  SeasonalOptions gaussian;
  gaussian.error = ErrorModel::gaussian;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticScenario sc;
    sc.seed = seed;
    const WeeklyDeaths clean = simulate_population(sc).deaths;
    WeeklyDeaths dirty = clean;
    for (std::size_t i : {10u, 40u, 75u, 130u}) dirty.deaths[i] *= 5.0;
    const double t_change = max_relative_error(fit_seasonal_cycle(dirty), fit_seasonal_cycle(clean));
    const double g_change = max_relative_error(fit_seasonal_cycle(dirty, gaussian), fit_seasonal_cycle(clean, gaussian));
    EXPECT_LT(t_change, 0.01) << "seed " << seed;
    EXPECT_GT(g_change, 0.03) << "seed " << seed;
  }
}

TEST(Seasonal, ShortReferenceIsAnInputError) {
  const WeeklyDeaths w = weekly_series(ymd(2018, 1, 1), std::vector<double>(103, 100.0));
  EXPECT_THROW(fit_seasonal_cycle(w), InputError);
}

TEST(Seasonal, NuAndSigmaAreReported) {
  SyntheticScenario sc;
  sc.seed = 3;
  const SeasonalCycle c = fit_seasonal_cycle(simulate_population(sc).deaths);
  EXPECT_GT(c.nu, kNuFloor);
  EXPECT_GT(c.sigma, 0.0);
  EXPECT_EQ(c.trend.size(), 156u);
  EXPECT_TRUE(c.fit.converged);
}

// ---------------------------------------------------------------- synthetic populations

TEST(Synthetic, DeterministicRunMatchesBookkeeping) {
  SyntheticScenario sc;
  sc.stochastic = false;
  sc.weeks = 20;
  const SyntheticRun run = simulate_population(sc);
  ASSERT_EQ(run.population.size(), 21u);
  for (int k = 0; k < sc.weeks; ++k) {
    const auto K = static_cast<std::size_t>(k);
    const double change = run.population[K + 1].total() - run.population[K].total();
    EXPECT_NEAR(change, sc.births_per_week - run.deaths.deaths[K], 1e-6 * run.deaths.deaths[K]);
  }
}

TEST(Synthetic, SeedDeterminesRun) {
  SyntheticScenario sc;
  sc.weeks = 30;
  sc.seed = 9;
  EXPECT_EQ(simulate_population(sc).deaths.deaths, simulate_population(sc).deaths.deaths);
  SyntheticScenario other = sc;
  other.seed = 10;
  EXPECT_NE(simulate_population(sc).deaths.deaths, simulate_population(other).deaths.deaths);
}

TEST(SelfConsistency, ClassConstantHazardReproducesTotals) {
  SyntheticScenario sc;
  sc.stochastic = false;
  sc.class_constant_hazard = true;
  EXPECT_LT(std::abs(testing_oracles::self_consistency_error(sc, false)), 1e-4);
}

TEST(SelfConsistency, StochasticDeathsWithFittedCycle) {
  std::vector<double> errors;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SyntheticScenario sc;
    sc.seed = seed;
    sc.class_constant_hazard = true;
    errors.push_back(std::abs(testing_oracles::self_consistency_error(sc, true)));
  }
  std::nth_element(errors.begin(), errors.begin() + 5, errors.end());
  EXPECT_LT(errors[5], 1e-4);
}

TEST(AgeingBias, WeeklyAverageOverstatesForAgeingPopulation) {
  const testing_oracles::AgeingBias b = testing_oracles::ageing_bias(testing_oracles::ageing_scenario());
  EXPECT_GT(b.weekly_average, 0.01);
  EXPECT_LT(std::abs(b.lifetable), 0.002);
  EXPECT_LT(std::abs(b.no_ageing - b.weekly_average), 0.005);
}

TEST(AgeingBias, DivergenceVanishesForStationaryPopulation) {
  SyntheticScenario sc = testing_oracles::ageing_scenario();
  sc.boom_factor = 1.0;
  sc.historic_birth_factor = 1.0;
  const testing_oracles::AgeingBias b = testing_oracles::ageing_bias(sc);
  EXPECT_LT(std::abs(b.weekly_average - b.lifetable), 0.002);
}

TEST(AgeingBias, DivergenceGrowsWithAgeing) {
  double previous = -1.0;
  for (double boom : {1.0, 1.2, 1.4}) {
    SyntheticScenario sc = testing_oracles::ageing_scenario();
    sc.boom_factor = boom;
    const testing_oracles::AgeingBias b = testing_oracles::ageing_bias(sc);
    const double divergence = b.weekly_average - b.lifetable;
    EXPECT_GT(divergence, previous) << "boom " << boom;
    previous = divergence;
  }
}
