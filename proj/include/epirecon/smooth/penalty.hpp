#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "epirecon/error.hpp"

namespace epirecon::smooth {

// A quadratic smoothing penalty beta_b' S beta_b acting on the block
// beta[offset, offset + S.rows()) of the full parameter vector.
struct Penalty {
  Eigen::MatrixXd S;
  // rank x size root with S = R' R over the range space; penalties evaluated
  // as |R b|^2 stay accurate for large lambda and unpenalized directions.
  Eigen::MatrixXd R;
  Eigen::Index offset = 0;
  int rank = 0;
  int null_dim = 0;
  // log of the product of the positive eigenvalues of S.
  double log_pdet = 0.0;

  Eigen::Index size() const { return S.rows(); }
};

inline constexpr double kRankThreshold = 1e-10;

inline Penalty make_penalty(const Eigen::MatrixXd& S, Eigen::Index offset) {
  if (S.rows() != S.cols() || S.rows() == 0) throw ParameterError("penalty: S must be square and nonempty");
  Penalty p;
  p.S = 0.5 * (S + S.transpose());
  p.offset = offset;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.S);
  const auto& ev = es.eigenvalues();
  const double emax = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < -1e-10 * emax) throw ParameterError("penalty: S is not positive semi-definite");
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > kRankThreshold * emax) {
      ++p.rank;
      p.log_pdet += std::log(ev(i));
    }
  }
  p.null_dim = static_cast<int>(S.rows()) - p.rank;
  // eigenvalues ascend, so the range space is the trailing block
  const Eigen::MatrixXd U = es.eigenvectors().rightCols(p.rank);
  p.R = ev.tail(p.rank).cwiseSqrt().asDiagonal() * U.transpose();
  return p;
}

// beta' S_lambda beta with S_lambda = sum_j lambda_j S_j.
inline double penalty_value(const std::vector<Penalty>& pens, const Eigen::VectorXd& lambdas,
                            const Eigen::VectorXd& beta) {
  double v = 0.0;
  for (std::size_t j = 0; j < pens.size(); ++j) {
    const auto& p = pens[j];
    const auto b = beta.segment(p.offset, p.size());
    v += lambdas(static_cast<Eigen::Index>(j)) * (p.R * b).squaredNorm();
  }
  return v;
}

// S_lambda beta, the gradient of beta' S_lambda beta / 2.
inline Eigen::VectorXd penalty_gradient(const std::vector<Penalty>& pens, const Eigen::VectorXd& lambdas,
                                        const Eigen::VectorXd& beta) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(beta.size());
  for (std::size_t j = 0; j < pens.size(); ++j) {
    const auto& p = pens[j];
    g.segment(p.offset, p.size()) +=
        lambdas(static_cast<Eigen::Index>(j)) * (p.R.transpose() * (p.R * beta.segment(p.offset, p.size())));
  }
  return g;
}

// Dense S_lambda padded to the full parameter dimension.
inline Eigen::MatrixXd total_penalty(const std::vector<Penalty>& pens, const Eigen::VectorXd& lambdas,
                                     Eigen::Index n_params) {
  Eigen::MatrixXd St = Eigen::MatrixXd::Zero(n_params, n_params);
  for (std::size_t j = 0; j < pens.size(); ++j) {
    const auto& p = pens[j];
    St.block(p.offset, p.offset, p.size(), p.size()) += lambdas(static_cast<Eigen::Index>(j)) * p.S;
  }
  return St;
}

// Penalties sharing any coefficient are grouped; each group's S_lambda block
// is handled jointly for log|S_lambda|_+ and the generalized inverse.
struct PenaltyGroup {
  Eigen::Index begin = 0, end = 0;
  std::vector<std::size_t> members;
};

inline std::vector<PenaltyGroup> group_penalties(const std::vector<Penalty>& pens) {
  std::vector<std::size_t> order(pens.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pens[a].offset < pens[b].offset; });
  std::vector<PenaltyGroup> groups;
  for (auto j : order) {
    const auto b = pens[j].offset;
    const auto e = b + pens[j].size();
    if (!groups.empty() && b < groups.back().end) {
      groups.back().end = std::max(groups.back().end, e);
      groups.back().members.push_back(j);
    } else {
      groups.push_back({b, e, {j}});
    }
  }
  return groups;
}

struct PseudoLogDet {
  double value = 0.0;
  int rank = 0;
};

// log|S_lambda|_+ over the penalty range space, with the total rank.
inline PseudoLogDet pseudo_log_det(const std::vector<Penalty>& pens, const Eigen::VectorXd& lambdas) {
  PseudoLogDet out;
  for (const auto& g : group_penalties(pens)) {
    if (g.members.size() == 1) {
      const auto& p = pens[g.members[0]];
      out.value += p.rank * std::log(lambdas(static_cast<Eigen::Index>(g.members[0]))) + p.log_pdet;
      out.rank += p.rank;
      continue;
    }
    const Eigen::Index n = g.end - g.begin;
    Eigen::MatrixXd Sg = Eigen::MatrixXd::Zero(n, n);
    for (auto j : g.members) {
      const auto& p = pens[j];
      Sg.block(p.offset - g.begin, p.offset - g.begin, p.size(), p.size()) += lambdas(static_cast<Eigen::Index>(j)) * p.S;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sg, Eigen::EigenvaluesOnly);
    const double emax = es.eigenvalues().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (es.eigenvalues()(i) > kRankThreshold * emax) {
        out.value += std::log(es.eigenvalues()(i));
        ++out.rank;
      }
    }
  }
  return out;
}

// Orthogonal Q, block diagonal over the penalty groups, with
// Q' S_lambda Q = diag(s); eigenvalues below the rank threshold of their
// group are exactly zero. Coefficients in these coordinates keep penalized
// and unpenalized components apart, so large lambdas lose no precision.
struct PenaltyRotation {
  Eigen::MatrixXd Q;
  Eigen::VectorXd s;
};

inline PenaltyRotation penalty_rotation(const std::vector<Penalty>& pens, const Eigen::VectorXd& lambdas,
                                        Eigen::Index n_params) {
  PenaltyRotation r;
  r.Q = Eigen::MatrixXd::Identity(n_params, n_params);
  r.s = Eigen::VectorXd::Zero(n_params);
  for (const auto& g : group_penalties(pens)) {
    const Eigen::Index n = g.end - g.begin;
    Eigen::MatrixXd Sg = Eigen::MatrixXd::Zero(n, n);
    for (auto j : g.members) {
      const auto& pen = pens[j];
      Sg.block(pen.offset - g.begin, pen.offset - g.begin, pen.size(), pen.size()) +=
          lambdas(static_cast<Eigen::Index>(j)) * pen.S;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Sg + Sg.transpose()));
    const double emax = es.eigenvalues().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = es.eigenvalues()(i);
      r.s(g.begin + i) = e > kRankThreshold * emax ? e : 0.0;
    }
    r.Q.block(g.begin, g.begin, n, n) = es.eigenvectors();
  }
  return r;
}

// tr(S_lambda^- S_j) for every penalty j; rank(S_j)/lambda_j for penalties
// that do not overlap any other.
inline Eigen::VectorXd trace_pinv_products(const std::vector<Penalty>& pens, const Eigen::VectorXd& lambdas) {
  Eigen::VectorXd tr(static_cast<Eigen::Index>(pens.size()));
  for (const auto& g : group_penalties(pens)) {
    if (g.members.size() == 1) {
      const auto j = g.members[0];
      tr(static_cast<Eigen::Index>(j)) = pens[j].rank / lambdas(static_cast<Eigen::Index>(j));
      continue;
    }
    const Eigen::Index n = g.end - g.begin;
    Eigen::MatrixXd Sg = Eigen::MatrixXd::Zero(n, n);
    for (auto j : g.members) {
      const auto& p = pens[j];
      Sg.block(p.offset - g.begin, p.offset - g.begin, p.size(), p.size()) += lambdas(static_cast<Eigen::Index>(j)) * p.S;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sg);
    const double emax = es.eigenvalues().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
      if (es.eigenvalues()(i) > kRankThreshold * emax) inv(i) = 1.0 / es.eigenvalues()(i);
    const Eigen::MatrixXd pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    for (auto j : g.members) {
      const auto& p = pens[j];
      const auto o = p.offset - g.begin;
      tr(static_cast<Eigen::Index>(j)) = (pinv.block(o, o, p.size(), p.size()) * p.S).trace();
    }
  }
  return tr;
}

}  // namespace epirecon::smooth
