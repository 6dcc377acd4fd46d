#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "epirecon/demog/tables.hpp"
#include "epirecon/error.hpp"
#include "epirecon/smooth.hpp"

namespace epirecon::demog {

enum class ErrorModel { scaled_t, gaussian };

inline constexpr double kNuFloor = 2.01;
// Beyond this log(nu - kNuFloor) the t likelihood is Gaussian to rounding;
// step halving keeps the iterate below it.
inline constexpr double kRhoMax = 20.0;
inline constexpr int kMinReferenceWeeks = 2 * kWeeksPerYear;

struct SeasonalOptions {
  ErrorModel error = ErrorModel::scaled_t;
  int k_cycle = 20;
  // 0 chooses from the series length.
  int k_trend = 0;
};

struct SeasonalCycle {
  // d[w-1] for week of year w = 1..52; sums to one.
  std::array<double, kWeeksPerYear> d{};
  std::array<double, kWeeksPerYear> f1{};
  // Centred trend at each reference week.
  std::vector<double> trend;
  double sigma = 0.0;
  double nu = std::numeric_limits<double>::infinity();
  ErrorModel error = ErrorModel::scaled_t;
  smooth::PenalizedFit fit;

  double multiplier(Date week_start) const { return d[static_cast<std::size_t>(week_of_year(week_start) - 1)]; }

  static SeasonalCycle flat() {
    SeasonalCycle c;
    c.d.fill(1.0 / kWeeksPerYear);
    c.f1.fill(1.0);
    return c;
  }
};

namespace detail {

// y = X beta + e with e / sigma ~ t_nu (or N(0,1)); parameters
// (beta, log sigma, rho) with nu = kNuFloor + exp(rho).
struct SeasonalModel {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  ErrorModel error = ErrorModel::scaled_t;
  // Weak N(0, 1/rho_precision) prior on rho keeps nu finite for Gaussian data.
  double rho_precision = 1e-4;

  Eigen::Index n_coef() const { return X.cols(); }
  Eigen::Index n_params() const { return X.cols() + (error == ErrorModel::scaled_t ? 2 : 1); }

  // Hessian from per-observation second derivatives in (mu, log sigma, rho)
  // and the scale-parameter block.
  Eigen::MatrixXd assemble(const Eigen::VectorXd& lmm, const Eigen::VectorXd& lms, const Eigen::VectorXd& lmv,
                           double lss, double lsv, double lvv) const {
    const Eigen::Index p = n_coef();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n_params(), n_params());
    H.topLeftCorner(p, p) = X.transpose() * lmm.asDiagonal() * X;
    H.block(0, p, p, 1) = X.transpose() * lms;
    H.block(p, 0, 1, p) = H.block(0, p, p, 1).transpose();
    H(p, p) = lss;
    if (error == ErrorModel::scaled_t) {
      H.block(0, p + 1, p, 1) = X.transpose() * lmv;
      H.block(p + 1, 0, 1, p) = H.block(0, p + 1, p, 1).transpose();
      H(p, p + 1) = H(p + 1, p) = lsv;
      H(p + 1, p + 1) = lvv;
    }
    return H;
  }

  smooth::LogLikEval operator()(const Eigen::VectorXd& par, int order) const {
    const Eigen::Index p = n_coef();
    const Eigen::Index n = y.size();
    const Eigen::VectorXd r = y - X * par.head(p);
    const double s = par(p);
    const double sig2 = std::exp(2.0 * s);
    smooth::LogLikEval out;
    Eigen::VectorXd lm(n), lmm(n), lms(n), lmv = Eigen::VectorXd::Zero(n);
    double ls = 0.0, lss = 0.0, lv = 0.0, lvv = 0.0, lsv = 0.0;
    if (error == ErrorModel::gaussian) {
      out.value = -static_cast<double>(n) * (s + 0.5 * std::log(2.0 * std::numbers::pi)) - 0.5 * r.squaredNorm() / sig2;
      if (order == 0) return out;
      lm = r / sig2;
      lmm.setConstant(-1.0 / sig2);
      lms = -2.0 * r / sig2;
      ls = -static_cast<double>(n) + r.squaredNorm() / sig2;
      lss = -2.0 * r.squaredNorm() / sig2;
    } else {
      const double rho = par(p + 1);
      if (!(rho <= kRhoMax)) {
        out.value = -std::numeric_limits<double>::infinity();
        return out;
      }
      const double er = std::exp(rho);
      const double nu = kNuFloor + er;
      // log Gamma((nu+1)/2) - log Gamma(nu/2), accurate for large nu
      const double lg = -std::log(boost::math::tgamma_delta_ratio(0.5 * nu, 0.5));
      const double c = lg - 0.5 * std::log(nu * std::numbers::pi);
      double value = static_cast<double>(n) * (c - s) - 0.5 * rho_precision * rho * rho;
      const Eigen::ArrayXd r2 = r.array().square();
      const Eigen::ArrayXd D = nu * sig2 + r2;
      const Eigen::ArrayXd log_g = (r2 / (nu * sig2)).log1p();
      value -= 0.5 * (nu + 1.0) * log_g.sum();
      out.value = value;
      if (order == 0) return out;
      const Eigen::ArrayXd D2 = D.square();
      lm = ((nu + 1.0) * r.array() / D).matrix();
      lmm = ((nu + 1.0) * (r2 - nu * sig2) / D2).matrix();
      lms = (-2.0 * nu * (nu + 1.0) * sig2 * r.array() / D2).matrix();
      lmv = (r.array() * (r2 - sig2) / D2).matrix();
      ls = static_cast<double>(n) * nu - (nu + 1.0) * nu * sig2 * (1.0 / D).sum();
      lss = -2.0 * nu * (nu + 1.0) * sig2 * (r2 / D2).sum();
      lsv = static_cast<double>(n) - sig2 * ((2.0 * nu + 1.0) * D - nu * (nu + 1.0) * sig2).cwiseQuotient(D2).sum();
      const double psi = boost::math::digamma(0.5 * (nu + 1.0)) - boost::math::digamma(0.5 * nu);
      const double tri = boost::math::trigamma(0.5 * (nu + 1.0)) - boost::math::trigamma(0.5 * nu);
      lv = 0.5 * static_cast<double>(n) * (psi + 1.0) - 0.5 * log_g.sum() - 0.5 * (nu + 1.0) * sig2 * (1.0 / D).sum();
      lvv = static_cast<double>(n) * (0.25 * tri + 0.5 / nu) - sig2 * (1.0 / D).sum() +
            0.5 * (nu + 1.0) * sig2 * sig2 * (1.0 / D2).sum();
      // chain rule to rho, d nu / d rho = exp(rho)
      lvv = lvv * er * er + lv * er - rho_precision;
      lv = lv * er - rho_precision * rho;
      lmv *= er;
      lsv *= er;
    }
    const Eigen::Index q = n_params();
    out.gradient.resize(q);
    out.gradient.head(p) = X.transpose() * lm;
    out.gradient(p) = ls;
    if (error == ErrorModel::scaled_t) out.gradient(p + 1) = lv;
    out.hessian = assemble(lmm, lms, lmv, lss, lsv, lvv);

    // Minus the expected information, for iterates where the observed
    // Hessian is not negative definite.
    const double nd = static_cast<double>(n);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    if (error == ErrorModel::gaussian) {
      out.fallback_hessian = assemble(Eigen::VectorXd::Constant(n, -1.0 / sig2), zero, zero, -2.0 * nd, 0.0, 0.0);
    } else {
      const double er = std::exp(par(p + 1));
      const double nu = kNuFloor + er;
      const double ivv = 0.25 * (boost::math::trigamma(0.5 * nu) - boost::math::trigamma(0.5 * (nu + 1.0))) -
                         (nu + 5.0) / (2.0 * nu * (nu + 1.0) * (nu + 3.0));
      out.fallback_hessian = assemble(Eigen::VectorXd::Constant(n, -(nu + 1.0) / ((nu + 3.0) * sig2)), zero, zero,
                                      -nd * 2.0 * nu / (nu + 3.0), nd * 2.0 / ((nu + 1.0) * (nu + 3.0)) * er,
                                      -nd * ivv * er * er - rho_precision);
    }
    return out;
  }
};

}  // namespace detail

// Fits deaths_i = f1(week of year) + f2(week index) with f1 cyclic and f2 a
// centred trend, smoothing parameters by REML, and returns the normalized
// week-of-year multipliers d_w = f1(w) / sum f1.
inline SeasonalCycle fit_seasonal_cycle(const WeeklyDeaths& ref, const SeasonalOptions& opt = {}) {
  ref.validate();
  const auto n = static_cast<Eigen::Index>(ref.size());
  if (n < kMinReferenceWeeks) {
    throw InputError("seasonal cycle: reference period has " + std::to_string(n) + " weeks, at least " +
                     std::to_string(kMinReferenceWeeks) + " required");
  }
  std::vector<double> woy(ref.size()), t(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    woy[i] = week_of_year(ref.week_start[i]);
    t[i] = static_cast<double>(i);
  }
  const auto b1 = smooth::build_basis(smooth::BasisKind::cyclic_cubic, 1.0, 1.0 + kWeeksPerYear, opt.k_cycle);
  const int k2 = opt.k_trend > 0 ? opt.k_trend : std::clamp(static_cast<int>(n / 26), 4, 12);
  const smooth::CenteredBasis b2(smooth::build_basis(smooth::BasisKind::cubic, 0.0, static_cast<double>(n - 1), k2), t);
  const Eigen::Index p1 = b1.dim(), p2 = b2.dim();

  detail::SeasonalModel model;
  model.error = opt.error;
  model.y = Eigen::Map<const Eigen::VectorXd>(ref.deaths.data(), n);
  model.X.resize(n, p1 + p2);
  model.X.leftCols(p1) = b1.design(woy);
  model.X.rightCols(p2) = b2.design(t);

  const std::vector<smooth::Penalty> pens{smooth::make_penalty(b1.penalty_matrix(), 0),
                                          smooth::make_penalty(b2.penalty_matrix(), p1)};
  Eigen::VectorXd par0 = Eigen::VectorXd::Zero(model.n_params());
  const double mean = model.y.mean();
  par0.head(p1).setConstant(mean);
  const double sd = std::sqrt((model.y.array() - mean).square().sum() / static_cast<double>(n - 1));
  par0(p1 + p2) = std::log(std::max(sd, 1e-6 * std::max(mean, 1.0)));
  if (opt.error == ErrorModel::scaled_t) par0(p1 + p2 + 1) = std::log(10.0);

  SeasonalCycle cyc;
  cyc.error = opt.error;
  cyc.fit = smooth::fit_penalized(model, pens, par0);
  if (!cyc.fit.converged) {
    throw ConvergenceError("seasonal cycle: smoothing parameter iteration did not converge", cyc.fit.beta_hat,
                           cyc.fit.iterations);
  }
  const Eigen::VectorXd& beta = cyc.fit.beta_hat;
  double total = 0.0;
  for (int w = 1; w <= kWeeksPerYear; ++w) {
    const double f = b1.evaluate(w).dot(beta.head(p1));
    if (!(f > 0.0)) {
      throw InputError("seasonal cycle: fitted weekly level " + util::format_double(f) + " at week " +
                       std::to_string(w) + " is not positive");
    }
    cyc.f1[static_cast<std::size_t>(w - 1)] = f;
    total += f;
  }
  for (std::size_t w = 0; w < cyc.d.size(); ++w) cyc.d[w] = cyc.f1[w] / total;
  const Eigen::VectorXd trend = model.X.rightCols(p2) * beta.segment(p1, p2);
  cyc.trend.assign(trend.data(), trend.data() + n);
  cyc.sigma = std::exp(beta(p1 + p2));
  if (opt.error == ErrorModel::scaled_t) cyc.nu = kNuFloor + std::exp(beta(p1 + p2 + 1));
  return cyc;
}

}  // namespace epirecon::demog
