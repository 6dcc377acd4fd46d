#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>

#include "epirecon/error.hpp"
#include "epirecon/seir/model.hpp"

namespace epirecon::seir {

inline SeirState initial_state(double initial_infected) {
  if (!(initial_infected > 0.0 && initial_infected < 1.0)) {
    throw ParameterError("seir: initial infected fraction must lie in (0, 1)");
  }
  return {1.0 - initial_infected, 0.0, initial_infected, 0.0};
}

// dS/dt = -R0(t) gamma S^lambda I, dE/dt = -dS/dt - delta E, dI/dt = delta E - gamma I,
// dR/dt = gamma I, by fixed-step RK4.
inline SeirTrajectory solve_seir(const SeirConfig& config, const RateFunction& R0_of_t, const SeirState& init,
                                 double horizon_days, const SolveOptions& opt = {}) {
  config.validate();
  const auto plan = detail::plan_steps(horizon_days, opt);
  const double lam = config.immunity_coefficient();
  const double g = config.gamma, d = config.delta;
  auto force = [&](double t, double S, double I) { return R0_of_t(t) * g * std::pow(std::max(S, 0.0), lam) * I; };
  auto rhs = [&](double t, const std::array<double, 4>& y) {
    const double inc = force(t, y[0], y[2]);
    return std::array<double, 4>{-inc, inc - d * y[1], d * y[1] - g * y[2], g * y[2]};
  };

  SeirTrajectory tr;
  auto record = [&](double t, const std::array<double, 4>& y) {
    tr.t.push_back(t);
    tr.S.push_back(y[0]);
    tr.E.push_back(y[1]);
    tr.I.push_back(y[2]);
    tr.R.push_back(y[3]);
    tr.incidence.push_back(force(t, y[0], y[2]));
    tr.log_R.push_back(std::log(R0_of_t(t)) + lam * std::log(y[0]));
  };
  std::array<double, 4> y{init.S, init.E, init.I, init.R};
  detail::check_state(0.0, {y[0], y[1], y[2], y[3]});
  record(0.0, y);
  for (long s = 1; s <= plan.steps; ++s) {
    const double t0 = (s - 1) * opt.dt;
    y = detail::rk4_step(rhs, t0, y, opt.dt);
    detail::check_state(s * opt.dt, {y[0], y[1], y[2], y[3]});
    if (s % plan.per_output == 0) record(s * opt.dt, y);
  }
  return tr;
}

inline SeirTrajectory solve_seir(const SeirConfig& config, double initial_infected, double horizon_days,
                                 const SolveOptions& opt = {}) {
  const double R0 = config.R0;
  return solve_seir(config, [R0](double) { return R0; }, initial_state(initial_infected), horizon_days, opt);
}

// Moment generating function M(s) = E exp(s alpha) of the initial
// distribution of alpha, with its first two derivatives, for s <= 0.
struct Mgf {
  std::function<double(double)> M, dM, d2M;
};

// Gamma distribution with shape k and mean 1.
inline Mgf gamma_mgf(double k) {
  if (!(k > 0.0)) throw ParameterError("gamma_mgf: shape must be positive");
  return {[k](double s) { return std::pow(1.0 - s / k, -k); },
          [k](double s) { return std::pow(1.0 - s / k, -k - 1.0); },
          [k](double s) { return (k + 1.0) / k * std::pow(1.0 - s / k, -k - 2.0); }};
}

// Discrete distribution: alpha_i with probability w_i.
inline Mgf discrete_mgf(std::vector<double> alpha, std::vector<double> w) {
  if (alpha.size() != w.size() || alpha.empty()) throw ParameterError("discrete_mgf: alpha and weights misaligned");
  auto moment = [alpha, w](int order) {
    return [alpha, w, order](double s) {
      double m = 0.0;
      for (std::size_t i = 0; i < alpha.size(); ++i) m += w[i] * std::pow(alpha[i], order) * std::exp(s * alpha[i]);
      return m;
    };
  };
  return {moment(0), moment(1), moment(2)};
}

enum class MgfMode { susceptibility, connectivity };

// Solves M(-q) = S for q >= 0 by Newton's method inside a bisection bracket.
inline double invert_mgf(const Mgf& mgf, double S, double q_guess) {
  auto h = [&](double q) { return mgf.M(-q) - S; };
  double lo = 0.0, hi = std::max(q_guess, 1e-8) * 2.0;
  if (h(lo) < 0.0) throw NumericalError("invert_mgf: S=" + std::to_string(S) + " exceeds M(0)");
  for (int i = 0; h(hi) > 0.0; ++i) {
    if (i > 200) throw NumericalError("invert_mgf: cannot bracket S=" + std::to_string(S));
    lo = hi;
    hi *= 2.0;
  }
  double q = std::clamp(q_guess, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double v = h(q);
    if (v == 0.0) return q;
    (v > 0.0 ? lo : hi) = q;
    const double slope = -mgf.dM(-q);
    double next = slope < 0.0 ? q - v / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - q) <= 1e-15 * std::max(1.0, q) || hi - lo <= 1e-15 * std::max(1.0, q)) return next;
    q = next;
  }
  std::ostringstream os;
  os << "invert_mgf: no convergence for S=" << S << " (bracket [" << lo << ", " << hi << "], last q=" << q << ")";
  throw NumericalError(os.str());
}

// Heterogeneous SEIR reduced to three equations through the MGF of alpha:
//   dS/dt = -R0 gamma M'(-q)/M'(0) I   (susceptibility)
//   dS/dt = -R0 gamma M''(-q)/M''(0) I (connectivity)
// with S = M(-q). The initial infected are removed through q(0) = M^{-1}(1 - i0).
inline SeirTrajectory solve_seir_general(const Mgf& mgf, MgfMode mode, const SeirConfig& config,
                                         double initial_infected, double horizon_days,
                                         const SolveOptions& opt = {}) {
  config.validate();
  const auto plan = detail::plan_steps(horizon_days, opt);
  const SeirState init = initial_state(initial_infected);
  const double g = config.gamma, d = config.delta;
  const auto& weight = mode == MgfMode::susceptibility ? mgf.dM : mgf.d2M;
  const double w0 = weight(0.0);
  if (!(w0 > 0.0)) throw ParameterError("solve_seir_general: MGF derivative at 0 must be positive");

  double q = invert_mgf(mgf, init.S, 1.0 - init.S);
  auto rate = [&](double S, double I) {
    q = invert_mgf(mgf, S, q);
    return config.R0 * g * weight(-q) / w0 * I;
  };
  auto rhs = [&](double, const std::array<double, 4>& y) {
    const double inc = rate(y[0], y[2]);
    return std::array<double, 4>{-inc, inc - d * y[1], d * y[1] - g * y[2], g * y[2]};
  };

  SeirTrajectory tr;
  auto record = [&](double t, const std::array<double, 4>& y) {
    const double inc = rate(y[0], y[2]);
    tr.t.push_back(t);
    tr.S.push_back(y[0]);
    tr.E.push_back(y[1]);
    tr.I.push_back(y[2]);
    tr.R.push_back(y[3]);
    tr.incidence.push_back(inc);
    tr.log_R.push_back(std::log(inc / (g * y[2])));
    tr.q.push_back(q);
  };
  std::array<double, 4> y{init.S, init.E, init.I, init.R};
  record(0.0, y);
  for (long s = 1; s <= plan.steps; ++s) {
    y = detail::rk4_step(rhs, (s - 1) * opt.dt, y, opt.dt);
    detail::check_state(s * opt.dt, {y[0], y[1], y[2], y[3]});
    if (s % plan.per_output == 0) record(s * opt.dt, y);
  }
  return tr;
}

}  // namespace epirecon::seir
