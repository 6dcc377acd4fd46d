#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "epirecon/deconv/duration.hpp"
#include "epirecon/deconv/series.hpp"
#include "epirecon/error.hpp"
#include "epirecon/smooth.hpp"

namespace epirecon::deconv {

enum class Family { poisson, negbin };

inline const char* family_name(Family f) { return f == Family::poisson ? "poisson" : "negbin"; }

struct ReconstructOptions {
  Family family = Family::poisson;
  bool weekly_cycle = false;
  // Basis dimension for log incidence; 0 picks default_basis_dim().
  int K = 0;
  // Deaths on series day i are attributed to infections at most
  // min(d_start + i, d_limit) days earlier.
  int d_start = 20;
  int d_limit = 80;
  // Fixed smoothing parameters (incidence, then weekly cycle); empty selects
  // them by marginal likelihood.
  std::vector<double> lambdas;
  int n_draws = 1000;
  std::uint64_t seed = 1;
  double level = 0.95;
};

// One basis function per 8 days of data, within [6, 60].
inline int default_basis_dim(std::size_t n_days) {
  return std::clamp(static_cast<int>((n_days + 7) / 8), 6, 60);
}

struct IncidenceReconstruction {
  // Grid day j is series day j - d_start; grid_start is the date of grid day 0.
  Date grid_start;
  int d_start = 0;
  int d_limit = 0;
  Family family = Family::poisson;
  int K = 0;

  std::vector<double> log_f_mean, log_f_lo, log_f_hi;
  std::vector<double> incidence_mean, incidence_lo, incidence_hi;
  // Expected deaths per series day at the posterior mode.
  std::vector<double> fitted_deaths;
  // Multiplier per day of week (0 = Sunday), mean 1; empty without the cycle.
  std::vector<double> weekly_cycle;
  // Negative binomial size parameter (variance mu + mu^2/size); NaN for Poisson.
  double dispersion = std::numeric_limits<double>::quiet_NaN();

  smooth::PenalizedFit fit;
  DeathSeries series;

  std::size_t grid_size() const { return log_f_mean.size(); }
  Date date(std::size_t j) const { return grid_start + std::chrono::days{static_cast<int>(j)}; }
  // Series day of grid index j.
  int day(std::size_t j) const { return static_cast<int>(j) - d_start; }
  int lag_limit(std::size_t i) const { return std::min(d_start + static_cast<int>(i), d_limit); }
  std::size_t peak_index() const {
    return static_cast<std::size_t>(std::max_element(incidence_mean.begin(), incidence_mean.end()) -
                                    incidence_mean.begin());
  }
};

namespace detail {

// Convolution matrix: (A e)_i = sum_{d=1}^{D_i} pi(d) e_{i + d_start - d}.
inline Eigen::MatrixXd convolution_matrix(std::size_t n, int d_start, int d_limit, const DurationDist& dur) {
  const auto m = static_cast<Eigen::Index>(n) + d_start;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const int Di = std::min(d_start + static_cast<int>(i), d_limit);
    for (int d = 1; d <= std::min(Di, dur.d_max); ++d) A(i, i + d_start - d) = dur.pmf[d];
  }
  return A;
}

// Negative binomial log density of count y with mean m and size theta, with
// its first two theta derivatives. For moderate integer y the gamma function
// ratios are expanded into finite sums, which stay accurate as theta grows
// large compared to y and m.
struct NegBinTerms {
  double value, d_theta, d2_theta;
};

inline NegBinTerms negbin_terms(double y, double m, double theta) {
  const double mt = m + theta;
  double lg = 0.0, psi = 0.0, tri = 0.0;
  if (y <= 5000.0) {
    // lgamma(y+theta) - lgamma(theta) - y log(m+theta) and digamma/trigamma differences
    for (double k = 0.0; k < y; k += 1.0) {
      lg += std::log1p((k - m) / mt);
      psi += 1.0 / (theta + k);
      tri -= 1.0 / ((theta + k) * (theta + k));
    }
  } else {
    lg = std::lgamma(y + theta) - std::lgamma(theta) - y * std::log(mt);
    psi = boost::math::digamma(y + theta) - boost::math::digamma(theta);
    tri = boost::math::trigamma(y + theta) - boost::math::trigamma(theta);
  }
  NegBinTerms t;
  t.value = lg + (y > 0.0 ? y * std::log(m) : 0.0) - theta * std::log1p(m / theta) - std::lgamma(y + 1.0);
  t.d_theta = psi - std::log1p(m / theta) + (m - y) / mt;
  t.d2_theta = tri + m / (theta * mt) - (m - y) / (mt * mt);
  return t;
}

// Deaths model: mu = c .* (A exp(X bf)), c = exp(W bw), optional log size rho
// as the last parameter.
struct DeathModel {
  Eigen::VectorXd y;
  Eigen::MatrixXd A, X, W;
  Family family = Family::poisson;
  // Weak N(0, 100^2) prior on rho. Without it rho diverges on data with no
  // overdispersion, where the likelihood keeps rising towards the Poisson limit.
  double rho_precision = 1e-4;

  Eigen::Index kf() const { return X.cols(); }
  Eigen::Index kw() const { return W.cols(); }
  Eigen::Index n_params() const { return kf() + kw() + (family == Family::negbin ? 1 : 0); }

  Eigen::VectorXd mu(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd e = (X * beta.head(kf())).array().exp();
    Eigen::VectorXd m = A * e;
    if (kw() > 0) m.array() *= (W * beta.segment(kf(), kw())).array().exp();
    return m;
  }

  smooth::LogLikEval operator()(const Eigen::VectorXd& beta, int order) const {
    smooth::LogLikEval out;
    const Eigen::VectorXd eta = X * beta.head(kf());
    if (eta.maxCoeff() > 700.0) {
      out.value = -std::numeric_limits<double>::infinity();
      return out;
    }
    const Eigen::VectorXd e = eta.array().exp();
    const Eigen::VectorXd nu = A * e;
    Eigen::VectorXd c = Eigen::VectorXd::Ones(y.size());
    if (kw() > 0) c = (W * beta.segment(kf(), kw())).array().exp();
    const Eigen::VectorXd mu = c.cwiseProduct(nu);
    const Eigen::Index n = y.size();
    const bool nb = family == Family::negbin;
    const double theta = nb ? std::exp(beta(n_params() - 1)) : 0.0;

    Eigen::VectorXd L1(n), L2(n), Lr(n), Lrr(n), Lmr(n);
    double value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double yi = y(i), m = mu(i);
      if (!nb) {
        value += (yi > 0.0 ? yi * std::log(m) : 0.0) - m - std::lgamma(yi + 1.0);
        L1(i) = yi / m - 1.0;
        L2(i) = -yi / (m * m);
        continue;
      }
      const double mt = m + theta;
      const NegBinTerms nbt = negbin_terms(yi, m, theta);
      value += nbt.value;
      if (order == 0) continue;
      L1(i) = yi / m - (yi + theta) / mt;
      L2(i) = -yi / (m * m) + (yi + theta) / (mt * mt);
      Lr(i) = theta * nbt.d_theta;
      Lrr(i) = theta * theta * nbt.d2_theta + theta * nbt.d_theta;
      Lmr(i) = theta * (yi - m) / (mt * mt);
    }
    if (nb) value -= 0.5 * rho_precision * beta(n_params() - 1) * beta(n_params() - 1);
    out.value = value;
    if (order == 0 || !std::isfinite(value)) return out;

    const Eigen::Index kf_ = kf(), kw_ = kw(), p = n_params();
    // G = diag(c) A diag(e) X = d mu / d bf
    const Eigen::MatrixXd G = c.asDiagonal() * (A * (e.asDiagonal() * X));
    out.gradient.resize(p);
    out.hessian.setZero(p, p);
    out.gradient.head(kf_) = G.transpose() * L1;
    const Eigen::VectorXd wf = e.cwiseProduct(A.transpose() * L1.cwiseProduct(c));
    out.hessian.topLeftCorner(kf_, kf_) =
        G.transpose() * L2.asDiagonal() * G + X.transpose() * wf.asDiagonal() * X;
    if (kw_ > 0) {
      const Eigen::VectorXd a = L2.cwiseProduct(mu) + L1;
      out.gradient.segment(kf_, kw_) = W.transpose() * L1.cwiseProduct(mu);
      out.hessian.block(0, kf_, kf_, kw_) = G.transpose() * a.asDiagonal() * W;
      out.hessian.block(kf_, 0, kw_, kf_) = out.hessian.block(0, kf_, kf_, kw_).transpose();
      out.hessian.block(kf_, kf_, kw_, kw_) = W.transpose() * a.cwiseProduct(mu).asDiagonal() * W;
    }
    if (nb) {
      const Eigen::Index r = p - 1;
      out.gradient(r) = Lr.sum() - rho_precision * beta(r);
      out.hessian(r, r) = Lrr.sum() - rho_precision;
      out.hessian.block(0, r, kf_, 1) = G.transpose() * Lmr;
      if (kw_ > 0) out.hessian.block(kf_, r, kw_, 1) = W.transpose() * Lmr.cwiseProduct(mu);
      out.hessian.block(r, 0, 1, r) = out.hessian.block(0, r, r, 1).transpose();
    }
    return out;
  }
};

inline double quantile_sorted(const std::vector<double>& v, double q) {
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Lower-triangular factor L with L L' = V (eigen square root when V is only
// semi-definite numerically).
inline Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& V) {
  const Eigen::LLT<Eigen::MatrixXd> llt(V);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (V + V.transpose()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace detail

// Fits log fatal incidence f(t) to daily deaths y_i with
//   E(y_i) = c_i sum_{d=1}^{D_i} pi(d) exp{f(t_i - d)},  D_i = min(d_start + i, d_limit),
// f a penalized cubic spline and c_i an optional day-of-week multiplier.
inline IncidenceReconstruction reconstruct_incidence(const DeathSeries& series, const DurationDist& duration,
                                                     const ReconstructOptions& opts = {}) {
  series.validate();
  const std::size_t n = series.size();
  if (n < 60) throw InputError("reconstruct_incidence: need at least 60 days of deaths, got " + std::to_string(n));
  double total = 0.0;
  for (double y : series.deaths) total += y;
  if (total <= 0.0) throw InputError("reconstruct_incidence: all death counts are zero");
  if (opts.d_start < 1 || opts.d_limit < opts.d_start) throw ParameterError("reconstruct_incidence: need 1 <= d_start <= d_limit");
  if (opts.n_draws < 2) throw ParameterError("reconstruct_incidence: need at least 2 posterior draws");
  if (!(opts.level > 0.0 && opts.level < 1.0)) throw ParameterError("reconstruct_incidence: level must lie in (0, 1)");

  const int K = opts.K > 0 ? opts.K : default_basis_dim(n);
  const std::size_t m = n + static_cast<std::size_t>(opts.d_start);
  std::vector<double> grid(m);
  for (std::size_t j = 0; j < m; ++j) grid[j] = static_cast<double>(j) - opts.d_start;
  const auto fbasis = smooth::build_basis(smooth::BasisKind::cubic, grid.front(), grid.back(), K);

  detail::DeathModel model;
  model.family = opts.family;
  model.y = Eigen::Map<const Eigen::VectorXd>(series.deaths.data(), static_cast<Eigen::Index>(n));
  model.A = detail::convolution_matrix(n, opts.d_start, opts.d_limit, duration);
  model.X = fbasis.design(grid);

  std::vector<smooth::Penalty> pens{smooth::make_penalty(fbasis.penalty_matrix(), 0)};
  std::vector<double> dows{0, 1, 2, 3, 4, 5, 6};
  std::optional<smooth::CenteredBasis> wbasis;
  if (opts.weekly_cycle) {
    wbasis.emplace(smooth::build_basis(smooth::BasisKind::cyclic_cubic, 0.0, 7.0, 7), dows);
    model.W.resize(static_cast<Eigen::Index>(n), wbasis->dim());
    for (std::size_t i = 0; i < n; ++i) {
      model.W.row(static_cast<Eigen::Index>(i)) = wbasis->evaluate(util::day_of_week(series.date(i)));
    }
    pens.push_back(smooth::make_penalty(wbasis->penalty_matrix(), K));
  } else {
    model.W.resize(static_cast<Eigen::Index>(n), 0);
  }

  // Start from deaths shifted back by the mean delay, smoothed over a week.
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(model.n_params());
  const int shift = static_cast<int>(std::lround(duration.mean()));
  for (int k = 0; k < K; ++k) {
    const double t = fbasis.knots()[static_cast<std::size_t>(k)];
    const int c = std::clamp(static_cast<int>(std::lround(t)) + shift, 3, static_cast<int>(n) - 4);
    double s = 0.0;
    for (int i = c - 3; i <= c + 3; ++i) s += series.deaths[static_cast<std::size_t>(i)];
    beta0(k) = std::log(s / 7.0 + 0.5);
  }
  if (opts.family == Family::negbin) beta0(model.n_params() - 1) = std::log(10.0);

  smooth::PenalizedFit fit;
  if (!opts.lambdas.empty()) {
    if (opts.lambdas.size() != pens.size()) {
      throw ParameterError("reconstruct_incidence: expected " + std::to_string(pens.size()) + " smoothing parameters");
    }
    for (double l : opts.lambdas)
      if (!(l > 0.0)) throw ParameterError("reconstruct_incidence: smoothing parameters must be positive");
    fit = smooth::fit_fixed_lambda(model, pens, Eigen::Map<const Eigen::VectorXd>(opts.lambdas.data(), static_cast<Eigen::Index>(opts.lambdas.size())), beta0);
  } else {
    fit = smooth::fit_penalized(model, pens, beta0);
  }
  if (!fit.converged) {
    throw ConvergenceError("reconstruct_incidence: smoothing parameter iteration did not converge", fit.beta_hat,
                           fit.iterations);
  }

  IncidenceReconstruction rec;
  rec.grid_start = series.start - std::chrono::days{opts.d_start};
  rec.d_start = opts.d_start;
  rec.d_limit = opts.d_limit;
  rec.family = opts.family;
  rec.K = K;
  rec.series = series;
  const Eigen::VectorXd mu = model.mu(fit.beta_hat);
  rec.fitted_deaths.assign(mu.data(), mu.data() + mu.size());
  if (opts.family == Family::negbin) rec.dispersion = std::exp(fit.beta_hat(model.n_params() - 1));

  // The weekly multiplier is reported with arithmetic mean 1 over the week;
  // its mean is moved into the incidence so fitted deaths are unchanged.
  Eigen::MatrixXd Wd;
  auto log_week_mean = [&](const Eigen::VectorXd& beta) {
    if (!wbasis) return 0.0;
    return std::log((Wd * beta.segment(K, wbasis->dim())).array().exp().mean());
  };
  if (wbasis) {
    Wd = wbasis->design(dows);
    const Eigen::VectorXd g = Wd * fit.beta_hat.segment(K, wbasis->dim());
    const double mean = g.array().exp().mean();
    for (int d = 0; d < 7; ++d) rec.weekly_cycle.push_back(std::exp(g(d)) / mean);
  }

  const Eigen::VectorXd f_hat = model.X * fit.beta_hat.head(K) + Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), log_week_mean(fit.beta_hat));
  const Eigen::MatrixXd L = detail::covariance_factor(fit.V_beta);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> z01;
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(m), opts.n_draws);
  for (int r = 0; r < opts.n_draws; ++r) {
    Eigen::VectorXd z(fit.beta_hat.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = z01(rng);
    const Eigen::VectorXd b = fit.beta_hat + L * z;
    draws.col(r) = (model.X * b.head(K)).array() + log_week_mean(b);
  }

  const double a = 0.5 * (1.0 - opts.level);
  rec.log_f_mean.resize(m);
  rec.log_f_lo.resize(m);
  rec.log_f_hi.resize(m);
  std::vector<double> col(static_cast<std::size_t>(opts.n_draws));
  for (std::size_t j = 0; j < m; ++j) {
    const auto J = static_cast<Eigen::Index>(j);
    for (int r = 0; r < opts.n_draws; ++r) col[static_cast<std::size_t>(r)] = draws(J, r);
    std::sort(col.begin(), col.end());
    rec.log_f_mean[j] = f_hat(J);
    rec.log_f_lo[j] = std::min(detail::quantile_sorted(col, a), f_hat(J));
    rec.log_f_hi[j] = std::max(detail::quantile_sorted(col, 1.0 - a), f_hat(J));
  }
  for (std::size_t j = 0; j < m; ++j) {
    rec.incidence_mean.push_back(std::exp(rec.log_f_mean[j]));
    rec.incidence_lo.push_back(std::exp(rec.log_f_lo[j]));
    rec.incidence_hi.push_back(std::exp(rec.log_f_hi[j]));
  }
  rec.fit = std::move(fit);
  return rec;
}

}  // namespace epirecon::deconv
