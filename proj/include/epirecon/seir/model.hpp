#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "epirecon/error.hpp"

namespace epirecon::seir {

enum class Heterogeneity { none, susceptibility, connectivity };

// SEIR parameters. Rates are per day. Individual susceptibility or
// connectivity alpha is gamma distributed with shape k and mean 1.
struct SeirConfig {
  double R0 = 2.0;
  double delta = 1.0 / 3.0;  // E -> I
  double gamma = 1.0 / 5.0;  // I -> R
  Heterogeneity heterogeneity = Heterogeneity::none;
  double k = std::numeric_limits<double>::infinity();
  // Sets the immunity coefficient directly, overriding heterogeneity and k.
  std::optional<double> lambda;

  double immunity_coefficient() const {
    if (lambda) return *lambda;
    switch (heterogeneity) {
      case Heterogeneity::susceptibility:
        return 1.0 + 1.0 / k;
      case Heterogeneity::connectivity:
        return 1.0 + 2.0 / k;
      default:
        return 1.0;
    }
  }

  void validate() const {
    if (!(R0 > 0.0) || !std::isfinite(R0)) throw ParameterError("seir: R0 must be positive");
    if (!(delta > 0.0) || !(gamma > 0.0) || !std::isfinite(delta) || !std::isfinite(gamma)) {
      throw ParameterError("seir: delta and gamma must be positive rates");
    }
    if (!lambda && heterogeneity != Heterogeneity::none && !(k > 0.0)) {
      throw ParameterError("seir: gamma shape k must be positive");
    }
    const double l = immunity_coefficient();
    if (!(l >= 1.0) || !std::isfinite(l)) {
      throw ParameterError("seir: immunity coefficient must be >= 1, got " + std::to_string(l));
    }
  }
};

// Compartment fractions; R is the cumulative removed fraction.
struct SeirState {
  double S = 1.0, E = 0.0, I = 0.0, R = 0.0;
};

struct SeirTrajectory {
  std::vector<double> t, S, E, I, R;
  // New infections per day, -dS/dt.
  std::vector<double> incidence;
  // log of incidence / (gamma I).
  std::vector<double> log_R;
  // Integrated force of infection, S = M(-q); general solver only.
  std::vector<double> q;

  std::size_t size() const { return t.size(); }
};

struct SolveOptions {
  double dt = 0.05;
  double output_interval = 1.0;
};

using RateFunction = std::function<double(double)>;

namespace detail {

template <std::size_t N, class F>
std::array<double, N> rk4_step(const F& f, double t, const std::array<double, N>& y, double h) {
  auto axpy = [](const std::array<double, N>& a, double s, const std::array<double, N>& b) {
    std::array<double, N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  const auto k1 = f(t, y);
  const auto k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
  const auto k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
  const auto k4 = f(t + h, axpy(y, h, k3));
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

struct StepPlan {
  long steps = 0;
  long per_output = 0;
};

inline StepPlan plan_steps(double horizon, const SolveOptions& opt) {
  if (!(opt.dt > 0.0) || opt.dt > 0.1) throw ParameterError("seir: dt must lie in (0, 0.1] days");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("seir: horizon must be positive");
  StepPlan p;
  p.steps = std::lround(horizon / opt.dt);
  p.per_output = std::lround(opt.output_interval / opt.dt);
  if (p.per_output < 1 || std::abs(p.per_output * opt.dt - opt.output_interval) > 1e-9 * opt.output_interval ||
      std::abs(p.steps * opt.dt - horizon) > 1e-9 * horizon) {
    throw ParameterError("seir: horizon and output interval must be multiples of dt");
  }
  return p;
}

inline void check_state(double t, std::initializer_list<double> values) {
  for (double v : values) {
    if (!(v >= -1e-12) || !std::isfinite(v)) {
      throw NumericalError("seir: negative or non-finite state at t=" + std::to_string(t) +
                           "; reduce the step size");
    }
  }
}

}  // namespace detail

}  // namespace epirecon::seir
