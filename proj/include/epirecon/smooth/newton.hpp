#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epirecon/error.hpp"
#include "epirecon/smooth/penalty.hpp"

namespace epirecon::smooth {

// Log likelihood value and (when order >= 1, 2) its gradient and Hessian.
struct LogLikEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  // Optional negative semidefinite curvature (e.g. minus the expected
  // information) used when the penalized Hessian is not negative definite.
  Eigen::MatrixXd fallback_hessian;
};

// A log likelihood callable: ll(beta, order) with order 0 (value only) or 2.
template <class F>
concept LogLikelihood = requires(F f, const Eigen::VectorXd& beta) {
  { f(beta, 2) } -> std::convertible_to<LogLikEval>;
};

struct NewtonOptions {
  int max_iter = 200;
  // Converged when the penalized gradient max-norm falls to this fraction of
  // its value at the first iterate, and below grad_tol_cap.
  double rel_grad_tol = 1e-6;
  double grad_tol_cap = 1e-7;
  // Rounding floor, relative to 1 + |objective|.
  double abs_grad_tol = 1e-12;
  int max_halvings = 60;
};

struct NewtonResult {
  Eigen::VectorXd beta;
  LogLikEval eval;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  // Penalized objective after each accepted step (first entry: start value).
  std::vector<double> objective_trace;
};

// Symmetric matrix with eigenvalues floored at floor_rel * max |eigenvalue|.
inline Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& A, double floor_rel = 1e-8) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = floor_rel * std::max(ev.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Maximizes l(beta) - 0.5 beta' S_lambda beta by Newton's method with step
// halving, iterating on gamma = Q' beta where Q diagonalizes S_lambda. The
// Newton system is solved after symmetric diagonal scaling; when it is not
// positive definite the fallback curvature is used if supplied, otherwise
// eigenvalue flooring.
template <LogLikelihood F>
NewtonResult penalized_newton(F&& loglik, const std::vector<Penalty>& pens, const Eigen::VectorXd& lambdas,
                              Eigen::VectorXd beta0, const NewtonOptions& opt = {}) {
  if (static_cast<std::size_t>(lambdas.size()) != pens.size()) {
    throw ParameterError("penalized_newton: lambdas and penalties misaligned");
  }
  const Eigen::Index p = beta0.size();
  const PenaltyRotation rot = penalty_rotation(pens, lambdas, p);
  const Eigen::MatrixXd& Q = rot.Q;
  const Eigen::VectorXd& s = rot.s;

  NewtonResult r;
  Eigen::VectorXd gamma = Q.transpose() * beta0;
  r.beta = std::move(beta0);
  r.eval = loglik(r.beta, 2);
  if (!std::isfinite(r.eval.value)) throw InputError("penalized_newton: non-finite log likelihood at start");
  auto objective = [&](double ll, const Eigen::VectorXd& g) {
    return ll - 0.5 * (s.array() * g.array().square()).sum();
  };
  r.objective = objective(r.eval.value, gamma);
  r.objective_trace.push_back(r.objective);

  // Penalized gradient in gamma and (for the convergence test) in beta.
  Eigen::VectorXd grad = Q.transpose() * r.eval.gradient - s.cwiseProduct(gamma);
  const double g0 = (Q * grad).lpNorm<Eigen::Infinity>();
  auto stationary = [&] {
    const double tol = std::max(opt.abs_grad_tol * (1.0 + std::abs(r.objective)),
                                std::min(opt.rel_grad_tol * g0, opt.grad_tol_cap));
    return (Q * grad).lpNorm<Eigen::Infinity>() <= tol;
  };
  auto scaled_system = [&](const Eigen::MatrixXd& H, Eigen::VectorXd& d) {
    Eigen::MatrixXd A = Q.transpose() * (-H) * Q;
    A.diagonal() += s;
    d.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) d(i) = A(i, i) > 0.0 ? 1.0 / std::sqrt(A(i, i)) : 1.0;
    A = d.asDiagonal() * A * d.asDiagonal();
    return Eigen::MatrixXd(0.5 * (A + A.transpose()));
  };

  for (int it = 0; it < opt.max_iter; ++it) {
    if (stationary()) {
      r.converged = true;
      return r;
    }
    Eigen::VectorXd d;
    Eigen::MatrixXd As = scaled_system(r.eval.hessian, d);
    Eigen::LLT<Eigen::MatrixXd> llt(As);
    if (llt.info() != Eigen::Success && r.eval.fallback_hessian.size() > 0) {
      As = scaled_system(r.eval.fallback_hessian, d);
      llt.compute(As);
    }
    const Eigen::VectorXd rhs = d.cwiseProduct(grad);
    const Eigen::VectorXd step =
        d.cwiseProduct(llt.info() == Eigen::Success ? Eigen::VectorXd(llt.solve(rhs))
                                                    : Eigen::VectorXd(floor_eigenvalues(As).ldlt().solve(rhs)));

    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, alpha *= 0.5) {
      const Eigen::VectorXd trial = gamma + alpha * step;
      const double ll = loglik(Q * trial, 0).value;
      if (std::isfinite(ll) && objective(ll, trial) >= r.objective) {
        gamma = trial;
        accepted = true;
        break;
      }
    }
    ++r.iterations;
    if (!accepted) {
      // No representable improvement along the Newton direction: the
      // objective is flat to rounding, so this is the optimum.
      const double predicted = 0.5 * grad.dot(step);
      if (predicted <= 1e-11 * (1.0 + std::abs(r.objective))) {
        r.converged = true;
        return r;
      }
      throw ConvergenceError("penalized_newton: step halving failed", r.beta, r.iterations);
    }
    const double previous = r.objective;
    r.beta = Q * gamma;
    r.eval = loglik(r.beta, 2);
    r.objective = objective(r.eval.value, gamma);
    r.objective_trace.push_back(r.objective);
    grad = Q.transpose() * r.eval.gradient - s.cwiseProduct(gamma);
    // A full-rank Newton step that cannot raise the objective at all means
    // the remaining gradient is rounding noise.
    if (r.objective - previous <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(previous)) {
      r.converged = true;
      return r;
    }
  }
  if (stationary()) {
    r.converged = true;
    return r;
  }
  throw ConvergenceError("penalized_newton: no convergence in " + std::to_string(opt.max_iter) + " iterations",
                         r.beta, r.iterations);
}

}  // namespace epirecon::smooth
