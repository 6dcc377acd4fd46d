#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "epirecon/deconv/duration.hpp"
#include "epirecon/deconv/reconstruct.hpp"
#include "epirecon/error.hpp"

namespace epirecon::deconv {

// Per-day summary of simulated deaths across replicates, on the series days.
struct SimulationEnvelope {
  std::vector<double> min, max, lo, hi;
  int n_rep = 0;
  // Fraction of observed days outside [lo, hi].
  double outside_fraction = 0.0;
  // Set when outside_fraction exceeds kMisspecifiedFraction.
  bool misspecified = false;
};

inline constexpr double kMisspecifiedFraction = 0.1;

// Random stream for one replicate, independent of evaluation order.
inline std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
  return std::mt19937_64(seq);
}

// Simulated deaths per series day for one replicate: infections drawn on each
// grid day from the fitted incidence, each given a duration drawn from
// `duration`, deaths counted on series day i when the duration is within the
// model's lag window D_i.
inline std::vector<double> simulate_deaths(const IncidenceReconstruction& rec, const DurationDist& duration,
                                           std::mt19937_64& rng) {
  const std::size_t n = rec.series.size();
  std::vector<double> deaths(n, 0.0);
  std::vector<long long> by_delay(static_cast<std::size_t>(duration.d_max) + 1);
  for (std::size_t j = 0; j < rec.grid_size(); ++j) {
    const double mean = rec.incidence_mean[j];
    if (!(mean > 0.0)) continue;
    double rate = mean;
    if (rec.family == Family::negbin) {
      std::gamma_distribution<double> g(rec.dispersion, mean / rec.dispersion);
      rate = g(rng);
      if (!(rate > 0.0)) continue;
    }
    long long left = std::poisson_distribution<long long>(rate)(rng);
    double mass = 1.0;
    for (int d = 1; d <= duration.d_max && left > 0; ++d) {
      const double p = std::clamp(duration.pmf[d] / mass, 0.0, 1.0);
      const long long k = d == duration.d_max ? left : std::binomial_distribution<long long>(left, p)(rng);
      mass -= duration.pmf[d];
      left -= k;
      const int i = rec.day(j) + d;
      if (k == 0 || i < 0 || i >= static_cast<int>(n) || d > rec.lag_limit(static_cast<std::size_t>(i))) continue;
      deaths[static_cast<std::size_t>(i)] += static_cast<double>(k);
    }
  }
  if (!rec.weekly_cycle.empty()) {
    // Day-of-week multiplier applied by stochastic rounding.
    std::uniform_real_distribution<double> u01;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = deaths[i] * rec.weekly_cycle[static_cast<std::size_t>(util::day_of_week(rec.series.date(i)))];
      const double fl = std::floor(x);
      deaths[i] = fl + (u01(rng) < x - fl ? 1.0 : 0.0);
    }
  }
  return deaths;
}

// Forward simulation check of a fitted reconstruction against its own data.
inline SimulationEnvelope forward_simulate_check(const IncidenceReconstruction& rec, const DurationDist& duration,
                                                 int n_rep, std::uint64_t seed) {
  if (n_rep < 100) throw ParameterError("forward_simulate_check: need at least 100 replicates");
  if (rec.grid_size() == 0 || rec.series.size() == 0) throw InputError("forward_simulate_check: empty reconstruction");
  const std::size_t n = rec.series.size();
  std::vector<std::vector<double>> sims(static_cast<std::size_t>(n_rep));
  for (int r = 0; r < n_rep; ++r) {
    auto rng = replicate_rng(seed, static_cast<std::uint64_t>(r));
    sims[static_cast<std::size_t>(r)] = simulate_deaths(rec, duration, rng);
  }
  SimulationEnvelope env;
  env.n_rep = n_rep;
  std::vector<double> col(static_cast<std::size_t>(n_rep));
  int outside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int r = 0; r < n_rep; ++r) col[static_cast<std::size_t>(r)] = sims[static_cast<std::size_t>(r)][i];
    std::sort(col.begin(), col.end());
    env.min.push_back(col.front());
    env.max.push_back(col.back());
    env.lo.push_back(detail::quantile_sorted(col, 0.025));
    env.hi.push_back(detail::quantile_sorted(col, 0.975));
    const double y = rec.series.deaths[i];
    if (y < env.lo.back() || y > env.hi.back()) ++outside;
  }
  env.outside_fraction = static_cast<double>(outside) / static_cast<double>(n);
  env.misspecified = env.outside_fraction > kMisspecifiedFraction;
  return env;
}

}  // namespace epirecon::deconv
