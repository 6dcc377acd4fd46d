#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <vector>

#include <boost/math/interpolators/pchip.hpp>

#include "epirecon/demog/tables.hpp"
#include "epirecon/error.hpp"

namespace epirecon::demog {

// Splits annual (or coarser) age classes into one-week classes by
// differencing a monotone piecewise cubic interpolant of cumulative
// population against age, then rescales within each source class so its
// total is reproduced. The first weekly cell doubles as the weekly birth rate.
inline WeeklyAgePopulation split_to_weekly(const AnnualPopulation& pop) {
  pop.validate();
  const std::size_t J = pop.size();
  const int T = pop.terminal_age();

  std::vector<double> x(J), y(J);
  double cum = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    x[j] = pop.lower[j];
    y[j] = cum;
    cum += pop.counts[j];
  }
  std::function<double(double)> C;
  if (J >= 4) {
    auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::vector<double>(x),
                                                                                          std::vector<double>(y));
    C = [spline, T](double a) { return a >= T ? (*spline)(static_cast<double>(T)) : (*spline)(a); };
  } else {
    C = [x, y](double a) {
      const auto it = std::upper_bound(x.begin(), x.end(), a);
      const std::size_t j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x.begin(), 1)) - 1;
      if (j + 1 >= x.size()) return y.back();
      return y[j] + (y[j + 1] - y[j]) * (a - x[j]) / (x[j + 1] - x[j]);
    };
  }

  WeeklyAgePopulation out;
  out.as_of = pop.as_of;
  out.cells.assign(static_cast<std::size_t>(kWeeksPerYear) * T + 1, 0.0);
  const auto n_weekly = static_cast<std::size_t>(kWeeksPerYear) * T;
  double prev = C(0.0);
  for (std::size_t c = 0; c < n_weekly; ++c) {
    const double next = C(static_cast<double>(c + 1) / kWeeksPerYear);
    out.cells[c] = std::max(next - prev, 0.0);
    prev = next;
  }
  for (std::size_t j = 0; j + 1 < J; ++j) {
    const auto b = static_cast<std::size_t>(kWeeksPerYear) * pop.lower[j];
    const auto e = static_cast<std::size_t>(kWeeksPerYear) * pop.lower[j + 1];
    double s = 0.0;
    for (std::size_t c = b; c < e; ++c) s += out.cells[c];
    if (s > 0.0) {
      const double f = pop.counts[j] / s;
      for (std::size_t c = b; c < e; ++c) out.cells[c] *= f;
    } else {
      for (std::size_t c = b; c < e; ++c) out.cells[c] = pop.counts[j] / static_cast<double>(e - b);
    }
  }
  out.cells.back() = pop.counts.back();
  out.birth_rate = out.cells.front();
  return out;
}

// Sums weekly cells back into the class structure of `like`.
inline AnnualPopulation aggregate_weekly(const WeeklyAgePopulation& w, const AnnualPopulation& like) {
  if (like.terminal_age() != w.terminal_age()) throw InputError("aggregate_weekly: terminal ages differ");
  AnnualPopulation out = like;
  out.as_of = w.as_of;
  for (std::size_t j = 0; j < like.size(); ++j) {
    const auto b = static_cast<std::size_t>(kWeeksPerYear) * like.lower[j];
    const auto e = j + 1 < like.size() ? static_cast<std::size_t>(kWeeksPerYear) * like.lower[j + 1] : w.cells.size();
    double s = 0.0;
    for (std::size_t c = b; c < e; ++c) s += w.cells[c];
    out.counts[j] = s;
  }
  return out;
}

// Single-year classes 0..T-1 plus the open class T+.
inline AnnualPopulation single_year_classes(int terminal_age) {
  AnnualPopulation p;
  for (int a = 0; a <= terminal_age; ++a) p.lower.push_back(a);
  p.counts.assign(static_cast<std::size_t>(terminal_age) + 1, 0.0);
  return p;
}

}  // namespace epirecon::demog
