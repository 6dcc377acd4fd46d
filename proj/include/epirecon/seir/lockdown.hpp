#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "epirecon/error.hpp"
#include "epirecon/seir/model.hpp"
#include "epirecon/seir/reproduction.hpp"

namespace epirecon::seir {

struct LockdownOptions {
  // Transmission before lockdown; 0 means config_key.R0.
  double pre_R0 = 0.0;
  // Days over which each compartment moves from pre_R0 to its own R0.
  double ramp_days = 7.0;
  // Prevalence I in both compartments at onset.
  double initial_infected = 1e-4;
  // Share of each compartment's infection pressure coming from the whole
  // population rather than its own compartment.
  double cross_mixing = 0.0;
  SolveOptions solve;
};

struct LockdownResult {
  // Fractions of each compartment's own population.
  SeirTrajectory locked, key;
  // Whole-population incidence and R = incidence / (gamma I).
  std::vector<double> t, incidence, aggregate_R;
};

// Population split at lockdown onset (t = 0) into a locked-down share
// 1 - mix_fraction and a key-worker share mix_fraction with separate
// transmission. Both start at the pre-lockdown growth equilibrium.
inline LockdownResult two_compartment_lockdown(const SeirConfig& config_locked, const SeirConfig& config_key,
                                               double mix_fraction, double horizon_days,
                                               const LockdownOptions& opt = {}) {
  config_locked.validate();
  config_key.validate();
  if (!(mix_fraction >= 0.0 && mix_fraction <= 1.0)) throw ParameterError("lockdown: mix_fraction must lie in [0, 1]");
  if (config_locked.delta != config_key.delta || config_locked.gamma != config_key.gamma) {
    throw ParameterError("lockdown: compartments must share delta and gamma");
  }
  if (!(opt.ramp_days >= 0.0)) throw ParameterError("lockdown: ramp_days must be >= 0");
  if (!(opt.cross_mixing >= 0.0 && opt.cross_mixing <= 1.0)) throw ParameterError("lockdown: cross_mixing must lie in [0, 1]");
  if (!(opt.initial_infected > 0.0 && opt.initial_infected < 0.5)) throw ParameterError("lockdown: bad initial prevalence");
  const auto plan = detail::plan_steps(horizon_days, opt.solve);
  const double d = config_key.delta, g = config_key.gamma;
  const double pre = opt.pre_R0 > 0.0 ? opt.pre_R0 : config_key.R0;
  const std::array<double, 2> w{1.0 - mix_fraction, mix_fraction};
  const std::array<double, 2> target{config_locked.R0, config_key.R0};
  const std::array<double, 2> lam{config_locked.immunity_coefficient(), config_key.immunity_coefficient()};
  auto R0_at = [&](int c, double t) {
    const double s = opt.ramp_days > 0.0 ? std::min(t / opt.ramp_days, 1.0) : 1.0;
    return pre + (target[c] - pre) * s;
  };

  // state: S, E, I, R for locked then key
  using State = std::array<double, 8>;
  auto force = [&](double t, const State& y, int c) {
    const double mixed = w[0] * y[2] + w[1] * y[6];
    const double own = y[4 * c + 2];
    return R0_at(c, t) * g * std::pow(std::max(y[4 * c], 0.0), lam[c]) *
           ((1.0 - opt.cross_mixing) * own + opt.cross_mixing * mixed);
  };
  auto rhs = [&](double t, const State& y) {
    State dy{};
    for (int c = 0; c < 2; ++c) {
      const double inc = force(t, y, c);
      dy[4 * c] = -inc;
      dy[4 * c + 1] = inc - d * y[4 * c + 1];
      dy[4 * c + 2] = d * y[4 * c + 1] - g * y[4 * c + 2];
      dy[4 * c + 3] = g * y[4 * c + 2];
    }
    return dy;
  };

  const double r = growth_rate_from_R(pre, d, g);
  const double I0 = opt.initial_infected;
  const double E0 = I0 * (r + g) / d;
  if (E0 + I0 >= 1.0) throw ParameterError("lockdown: initial prevalence too large");
  State y{1.0 - E0 - I0, E0, I0, 0.0, 1.0 - E0 - I0, E0, I0, 0.0};

  LockdownResult out;
  auto record = [&](double t) {
    double inc_tot = 0.0, I_tot = 0.0;
    for (int c = 0; c < 2; ++c) {
      auto& tr = c == 0 ? out.locked : out.key;
      const double inc = force(t, y, c);
      tr.t.push_back(t);
      tr.S.push_back(y[4 * c]);
      tr.E.push_back(y[4 * c + 1]);
      tr.I.push_back(y[4 * c + 2]);
      tr.R.push_back(y[4 * c + 3]);
      tr.incidence.push_back(inc);
      tr.log_R.push_back(std::log(inc / (g * y[4 * c + 2])));
      inc_tot += w[c] * inc;
      I_tot += w[c] * y[4 * c + 2];
    }
    out.t.push_back(t);
    out.incidence.push_back(inc_tot);
    out.aggregate_R.push_back(inc_tot / (g * I_tot));
  };
  record(0.0);
  for (long s = 1; s <= plan.steps; ++s) {
    y = detail::rk4_step(rhs, (s - 1) * opt.solve.dt, y, opt.solve.dt);
    detail::check_state(s * opt.solve.dt, {y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]});
    if (s % plan.per_output == 0) record(s * opt.solve.dt);
  }
  return out;
}

}  // namespace epirecon::seir
