#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "epirecon/error.hpp"
#include "epirecon/seir/model.hpp"

namespace epirecon::seir {

// R of an SEIR epidemic growing at exponential rate r.
inline double R_from_growth_rate(double r, double delta, double gamma) { return (1.0 + r / delta) * (1.0 + r / gamma); }

// Growth rate r > -min(delta, gamma) with R_from_growth_rate(r) = R.
inline double growth_rate_from_R(double R, double delta, double gamma) {
  if (!(R > 0.0)) throw ParameterError("growth_rate_from_R: R must be positive");
  const double b = delta + gamma;
  return 0.5 * (-b + std::sqrt(b * b - 4.0 * delta * gamma * (1.0 - R)));
}

struct RTrajectory {
  std::vector<double> t;
  std::vector<double> E, I;
  // R = incidence / (gamma I) and its log; NaN where undefined.
  std::vector<double> R, log_R;
  // False during start-up (t < 3/delta + 3/gamma) or where I is negligible.
  std::vector<bool> reliable;
  double burn_in = 0.0;
};

struct RFromIncidenceOptions {
  double dt = 0.05;
  // I below this fraction of its peak leaves R undefined.
  double min_relative_I = 1e-12;
};

// Drives E' = inc(t) - delta E, I' = delta E - gamma I with a daily incidence
// curve (log-linear between days) and returns R(t) = inc(t) / (gamma I(t)).
// E and I start at the growth equilibrium of the growth rate over the first week.
inline RTrajectory r_from_incidence(const std::vector<double>& incidence, double delta, double gamma,
                                    const RFromIncidenceOptions& opt = {}) {
  if (!(delta > 0.0) || !(gamma > 0.0)) throw ParameterError("r_from_incidence: delta and gamma must be positive");
  if (incidence.size() < 2) throw InputError("r_from_incidence: need at least two days of incidence");
  for (double v : incidence)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("r_from_incidence: incidence must be finite and >= 0");
  if (!(incidence.front() > 0.0)) throw InputError("r_from_incidence: incidence must be positive on the first day");
  const long per_day = std::lround(1.0 / opt.dt);
  if (per_day < 1 || std::abs(per_day * opt.dt - 1.0) > 1e-9) throw ParameterError("r_from_incidence: 1/dt must be an integer");

  const std::size_t n = incidence.size();
  auto inc_at = [&](double t) {
    const auto j = std::min(static_cast<std::size_t>(std::max(std::floor(t), 0.0)), n - 2);
    const double s = t - static_cast<double>(j);
    const double a = incidence[j], b = incidence[j + 1];
    if (a > 0.0 && b > 0.0) return a * std::pow(b / a, s);
    return a + s * (b - a);
  };

  const std::size_t w = std::min<std::size_t>(6, n - 1);
  double r = 0.0;
  if (incidence[w] > 0.0) r = std::log(incidence[w] / incidence[0]) / static_cast<double>(w);
  r = std::max(r, -0.9 * std::min(delta, gamma));
  const double E0 = incidence[0] / (r + delta);
  std::array<double, 2> y{E0, delta * E0 / (r + gamma)};

  auto rhs = [&](double t, const std::array<double, 2>& s) {
    return std::array<double, 2>{inc_at(t) - delta * s[0], delta * s[0] - gamma * s[1]};
  };

  RTrajectory out;
  out.burn_in = 3.0 / delta + 3.0 / gamma;
  for (std::size_t day = 0; day < n; ++day) {
    if (day > 0) {
      for (long k = 0; k < per_day; ++k) {
        y = detail::rk4_step(rhs, static_cast<double>(day - 1) + k * opt.dt, y, opt.dt);
      }
    }
    out.t.push_back(static_cast<double>(day));
    out.E.push_back(y[0]);
    out.I.push_back(y[1]);
  }
  const double peak = *std::max_element(out.I.begin(), out.I.end());
  for (std::size_t day = 0; day < n; ++day) {
    const bool defined = out.I[day] > opt.min_relative_I * peak;
    const double R = defined ? incidence[day] / (gamma * out.I[day]) : std::numeric_limits<double>::quiet_NaN();
    out.R.push_back(R);
    out.log_R.push_back(std::log(R));
    out.reliable.push_back(defined && out.t[day] >= out.burn_in);
  }
  return out;
}

}  // namespace epirecon::seir
