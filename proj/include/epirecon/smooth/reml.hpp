#pragma once

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "epirecon/error.hpp"
#include "epirecon/smooth/newton.hpp"
#include "epirecon/smooth/penalty.hpp"

namespace epirecon::smooth {

inline constexpr double kLambdaMin = 1e-8;
inline constexpr double kLambdaMax = 1e12;

// Penalized fit at given smoothing parameters, as needed by the marginal
// likelihood and the smoothing parameter update.
struct FitState {
  Eigen::VectorXd beta;
  double loglik = 0.0;
  // -d2 l / d beta d beta' at beta.
  Eigen::MatrixXd neg_hessian;
};

struct PenalizedFit {
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd V_beta;
  Eigen::VectorXd lambdas;
  double log_marginal = 0.0;
  bool converged = false;
  int iterations = 0;

  double loglik = 0.0;
  Eigen::MatrixXd neg_hessian;
  // Penalties whose smoothing parameter was driven to the upper clamp because
  // the fitted term lies in the penalty null space.
  std::vector<bool> lambda_clamped;
  // Effective degrees of freedom tr(V_beta * neg_hessian).
  double edf = 0.0;
};

// H + S_lambda in coordinates where S_lambda is diagonal: Q is orthogonal,
// block diagonal over the penalty groups, and null-space eigenvalues of each
// group are exactly zero. A symmetric diagonal scaling D then leaves a well
// conditioned matrix even when some lambda sits at the upper clamp:
//   Q' (H + S_lambda) Q = D^-1 As D^-1.
struct ScaledPrecision {
  Eigen::MatrixXd Q;
  Eigen::VectorXd d;  // D
  Eigen::MatrixXd As;
};

inline ScaledPrecision scaled_precision(const Eigen::MatrixXd& H, const std::vector<Penalty>& pens,
                                        const Eigen::VectorXd& lambdas) {
  const Eigen::Index p = H.rows();
  const PenaltyRotation rot = penalty_rotation(pens, lambdas, p);
  ScaledPrecision sp;
  sp.Q = rot.Q;
  Eigen::MatrixXd A = sp.Q.transpose() * (0.5 * (H + H.transpose())) * sp.Q;
  A.diagonal() += rot.s;
  A = 0.5 * (A + A.transpose()).eval();
  sp.d.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) sp.d(i) = A(i, i) > 0.0 ? 1.0 / std::sqrt(A(i, i)) : 1.0;
  sp.As = sp.d.asDiagonal() * A * sp.d.asDiagonal();
  return sp;
}

// Inverse of the negated penalized Hessian. An indefinite matrix (possible
// for non log-concave likelihoods away from the mode) is eigen-floored first.
inline Eigen::MatrixXd posterior_covariance(const FitState& st, const std::vector<Penalty>& pens,
                                            const Eigen::VectorXd& lambdas) {
  const Eigen::Index p = st.beta.size();
  const ScaledPrecision sp = scaled_precision(st.neg_hessian, pens, lambdas);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
  const Eigen::LLT<Eigen::MatrixXd> llt(sp.As);
  const Eigen::MatrixXd Asi = llt.info() == Eigen::Success ? Eigen::MatrixXd(llt.solve(I))
                                                           : Eigen::MatrixXd(floor_eigenvalues(sp.As).ldlt().solve(I));
  const Eigen::MatrixXd QD = sp.Q * sp.d.asDiagonal();
  Eigen::MatrixXd V = QD * Asi * QD.transpose();
  return 0.5 * (V + V.transpose());
}

// Laplace approximation to the log marginal likelihood,
//   l(b) - b'S b/2 + log|S|_+/2 - log|H + S|/2 + M_p log(2 pi)/2,
// where M_p is the penalty null space dimension (the improper part of the
// prior contributes no normalizing constant).
inline double laplace_log_marginal(const FitState& st, const std::vector<Penalty>& pens,
                                   const Eigen::VectorXd& lambdas) {
  const Eigen::Index p = st.beta.size();
  const ScaledPrecision sp = scaled_precision(st.neg_hessian, pens, lambdas);
  auto singular = [](double cond) {
    std::ostringstream os;
    os << "laplace_log_marginal: singular penalized Hessian, condition number " << cond;
    return NumericalError(os.str());
  };
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sp.As, Eigen::EigenvaluesOnly);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  if (!(emin > 0.0) || emax / emin > 1e14) throw singular(emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity());
  const double log_det_A = es.eigenvalues().array().log().sum() - 2.0 * sp.d.array().log().sum();
  const auto pld = pseudo_log_det(pens, lambdas);
  const double null_dim = static_cast<double>(p - pld.rank);
  return st.loglik - 0.5 * penalty_value(pens, lambdas, st.beta) + 0.5 * pld.value - 0.5 * log_det_A +
         0.5 * null_dim * std::log(2.0 * std::numbers::pi);
}

struct LambdaUpdate {
  Eigen::VectorXd lambdas;
  std::vector<bool> clamped;
};

// One step of the smoothing parameter iteration
//   lambda_j <- lambda_j [tr(S_lambda^- S_j) - tr(V S_j)] / (b' S_j b),
// clamped to [kLambdaMin, kLambdaMax].
inline LambdaUpdate update_lambdas(const FitState& st, const Eigen::MatrixXd& V, const std::vector<Penalty>& pens,
                                   const Eigen::VectorXd& lambdas) {
  LambdaUpdate out{lambdas, std::vector<bool>(pens.size(), false)};
  const Eigen::VectorXd trS = trace_pinv_products(pens, lambdas);
  for (std::size_t j = 0; j < pens.size(); ++j) {
    const auto& pen = pens[j];
    const auto J = static_cast<Eigen::Index>(j);
    const auto b = st.beta.segment(pen.offset, pen.size());
    const double quad = (pen.R * b).squaredNorm();
    const double scale = b.squaredNorm() * pen.S.cwiseAbs().maxCoeff();
    if (!(quad > 1e-13 * scale) || quad <= 0.0) {
      out.lambdas(J) = kLambdaMax;
      out.clamped[j] = true;
      continue;
    }
    const double trVS = (V.block(pen.offset, pen.offset, pen.size(), pen.size()) * pen.S).trace();
    double num = trS(J) - trVS;
    // The numerator is non-negative for a positive definite likelihood
    // Hessian; guard against rounding and non-concave likelihoods.
    if (!(num > 0.0)) num = 1e-3 * trS(J);
    out.lambdas(J) = std::clamp(lambdas(J) * num / quad, kLambdaMin, kLambdaMax);
    out.clamped[j] = out.lambdas(J) >= kLambdaMax;
  }
  return out;
}

struct FitOptions {
  int max_outer = 200;
  double lambda_rel_tol = 1e-4;
  // Cap on the extrapolation factor for repeated same-direction updates.
  double max_boost = 64.0;
  // Starting smoothing parameters; empty means derived from the Hessian scale.
  Eigen::VectorXd lambda0;
  NewtonOptions newton;
};

inline FitState fit_state_at(const NewtonResult& nr) {
  return FitState{nr.beta, nr.eval.value, -nr.eval.hessian};
}

// Penalized fit with the smoothing parameters held fixed.
template <LogLikelihood F>
PenalizedFit fit_fixed_lambda(F&& loglik, const std::vector<Penalty>& pens, const Eigen::VectorXd& lambdas,
                              const Eigen::VectorXd& beta0, const NewtonOptions& nopt = {}) {
  const NewtonResult nr = penalized_newton(loglik, pens, lambdas, beta0, nopt);
  const FitState st = fit_state_at(nr);
  PenalizedFit fit;
  fit.beta_hat = st.beta;
  fit.lambdas = lambdas;
  fit.loglik = st.loglik;
  fit.neg_hessian = st.neg_hessian;
  fit.V_beta = posterior_covariance(st, pens, lambdas);
  fit.log_marginal = laplace_log_marginal(st, pens, lambdas);
  fit.converged = nr.converged;
  fit.iterations = nr.iterations;
  fit.lambda_clamped.assign(pens.size(), false);
  fit.edf = (fit.V_beta * fit.neg_hessian).trace();
  return fit;
}

// Alternates penalized Newton fits with smoothing parameter updates until the
// relative change in every lambda is below opt.lambda_rel_tol.
template <LogLikelihood F>
PenalizedFit fit_penalized(F&& loglik, const std::vector<Penalty>& pens, const Eigen::VectorXd& beta0,
                           const FitOptions& opt = {}) {
  Eigen::VectorXd lambdas = opt.lambda0;
  if (lambdas.size() == 0) {
    const LogLikEval e0 = loglik(beta0, 2);
    lambdas.resize(static_cast<Eigen::Index>(pens.size()));
    for (std::size_t j = 0; j < pens.size(); ++j) {
      const auto& pen = pens[j];
      const double h = (-e0.hessian.block(pen.offset, pen.offset, pen.size(), pen.size())).trace();
      const double s = pen.S.trace();
      lambdas(static_cast<Eigen::Index>(j)) = std::clamp(h > 0.0 && s > 0.0 ? 0.1 * h / s : 1.0, kLambdaMin, kLambdaMax);
    }
  }

  Eigen::VectorXd beta = beta0;
  PenalizedFit fit;
  fit.lambda_clamped.assign(pens.size(), false);
  // Consecutive updates moving log lambda_j the same way are extrapolated by
  // a doubling factor, reset on a reversal; this only changes the path to
  // the fixed point, which is tested on the plain update.
  Eigen::VectorXd boost = Eigen::VectorXd::Ones(lambdas.size());
  Eigen::VectorXd last_step = Eigen::VectorXd::Zero(lambdas.size());
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    const NewtonResult nr = penalized_newton(loglik, pens, lambdas, beta, opt.newton);
    beta = nr.beta;
    const FitState st = fit_state_at(nr);
    const Eigen::MatrixXd V = posterior_covariance(st, pens, lambdas);
    const LambdaUpdate up = update_lambdas(st, V, pens, lambdas);
    fit.iterations = outer + 1;
    double change = 0.0;
    for (Eigen::Index j = 0; j < lambdas.size(); ++j) {
      change = std::max(change, std::abs(up.lambdas(j) - lambdas(j)) / lambdas(j));
    }
    fit.lambda_clamped = up.clamped;
    if (change < opt.lambda_rel_tol) {
      lambdas = up.lambdas;
      fit.converged = true;
      break;
    }
    for (Eigen::Index j = 0; j < lambdas.size(); ++j) {
      const double step = std::log(up.lambdas(j) / lambdas(j));
      boost(j) = step * last_step(j) > 0.0 ? std::min(2.0 * boost(j), opt.max_boost) : 1.0;
      last_step(j) = step;
      lambdas(j) = std::clamp(lambdas(j) * std::exp(boost(j) * step), kLambdaMin, kLambdaMax);
    }
  }

  const NewtonResult nr = penalized_newton(loglik, pens, lambdas, beta, opt.newton);
  const FitState st = fit_state_at(nr);
  fit.beta_hat = st.beta;
  fit.lambdas = lambdas;
  fit.loglik = st.loglik;
  fit.neg_hessian = st.neg_hessian;
  fit.V_beta = posterior_covariance(st, pens, lambdas);
  fit.log_marginal = laplace_log_marginal(st, pens, lambdas);
  fit.edf = (fit.V_beta * fit.neg_hessian).trace();
  return fit;
}

}  // namespace epirecon::smooth
