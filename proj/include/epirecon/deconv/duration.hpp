#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "epirecon/error.hpp"

namespace epirecon::deconv {

// Infection-to-death duration distribution on whole days, discretized from a
// lognormal.
struct DurationDist {
  double meanlog = 0.0;
  double sdlog = 1.0;
  int d_max = 0;
  // pmf[d] for d = 0..d_max; pmf[0] is always 0.
  std::vector<double> pmf;
  // Lognormal mass beyond d_max + 0.5 before renormalization.
  double tail_mass = 0.0;
  bool truncation_warning = false;

  double mean() const {
    double m = 0.0;
    for (int d = 1; d <= d_max; ++d) m += d * pmf[d];
    return m;
  }
  int mode() const {
    int best = 1;
    for (int d = 2; d <= d_max; ++d)
      if (pmf[d] > pmf[best]) best = d;
    return best;
  }
};

// Parameters of the lognormal fitted to hospital fatal cases (meanlog 3.151,
// sdlog 0.469 on the log-day scale).
inline constexpr double kIsaricMeanlog = 3.151;
inline constexpr double kIsaricSdlog = 0.469;

inline constexpr double kTruncationWarnMass = 0.1;

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// pi(d) = Phi((log(d + 1/2) - meanlog)/sdlog) - Phi((log(d - 1/2) - meanlog)/sdlog)
// for d = 1..d_max, renormalized.
inline DurationDist discretize_duration(double meanlog, double sdlog, int d_max) {
  if (!(sdlog > 0.0) || !std::isfinite(sdlog) || !std::isfinite(meanlog)) {
    throw ParameterError("discretize_duration: need finite meanlog and sdlog > 0");
  }
  if (d_max < 30) throw ParameterError("discretize_duration: d_max must be at least 30");
  DurationDist dd;
  dd.meanlog = meanlog;
  dd.sdlog = sdlog;
  dd.d_max = d_max;
  dd.pmf.assign(static_cast<std::size_t>(d_max) + 1, 0.0);
  auto cdf = [&](double x) { return normal_cdf((std::log(x) - meanlog) / sdlog); };
  double prev = cdf(0.5), total = 0.0;
  for (int d = 1; d <= d_max; ++d) {
    const double next = cdf(d + 0.5);
    dd.pmf[d] = std::max(next - prev, 0.0);
    total += dd.pmf[d];
    prev = next;
  }
  // Upper tail via the complementary function to keep it accurate when small.
  dd.tail_mass = 0.5 * std::erfc((std::log(d_max + 0.5) - meanlog) / (sdlog * std::numbers::sqrt2));
  dd.truncation_warning = dd.tail_mass > kTruncationWarnMass;
  if (!(total > 0.0)) {
    throw ParameterError("discretize_duration: no probability mass on 1.." + std::to_string(d_max) + " days");
  }
  for (double& p : dd.pmf) p /= total;
  return dd;
}

}  // namespace epirecon::deconv
