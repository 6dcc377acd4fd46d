#pragma once

#include <cmath>

#include "epirecon/error.hpp"

namespace epirecon::seir {

// Final proportion infected x solving x = 1 - {1 + (lambda-1) R0 x}^{-1/(lambda-1)},
// or x = 1 - exp(-R0 x) at lambda = 1. Returns 0 for R0 <= 1.
inline double final_size(double R0, double lambda) {
  if (!(R0 > 0.0) || !std::isfinite(R0)) throw ParameterError("final_size: R0 must be positive");
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) throw ParameterError("final_size: lambda must be >= 1");
  if (R0 <= 1.0) return 0.0;
  const double c = lambda - 1.0;
  // Log form -log(1 - x) - log escape(x): unlike 1 - x - escape(x) it does
  // not round to zero over a run of doubles around the root.
  auto log_escape = [&](double x) { return c < 1e-12 ? -R0 * x : -std::log1p(c * R0 * x) / c; };
  // g < 0 just above the trivial root and g(1) > 0.
  auto g = [&](double x) { return -std::log1p(-x) + log_escape(x); };
  double lo = 1e-12, hi = 1.0;
  if (!(g(lo) < 0.0)) return 0.0;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return std::abs(g(lo)) < std::abs(g(hi)) ? lo : hi;
}

}  // namespace epirecon::seir
