#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epirecon/error.hpp"

namespace epirecon::smooth {

enum class BasisKind { cubic, cyclic_cubic };

// Cubic regression spline basis parametrized by the function values at the
// knots: f(x) = sum_k beta_k b_k(x) with beta_k = f(x_k). Second derivatives at
// the knots are a linear map of beta (natural end conditions for the cubic
// kind, periodic ones for the cyclic kind).
//
// For the cyclic kind the range [lo, hi] is one period: hi is identified with
// lo, so the K knots sit at lo + j (hi - lo) / K, j = 0..K-1.
class SplineBasis {
 public:
  static constexpr int min_dim(BasisKind kind) { return kind == BasisKind::cubic ? 4 : 3; }

  SplineBasis(BasisKind kind, double lo, double hi, int k) : kind_(kind), lo_(lo), hi_(hi), k_(k) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ParameterError("spline basis: empty or non-finite knot range");
    }
    if (k < min_dim(kind)) {
      throw ParameterError("spline basis: K=" + std::to_string(k) + " below minimum " +
                           std::to_string(min_dim(kind)));
    }
    const int n_knots = kind == BasisKind::cubic ? k : k + 1;
    const int n_int = n_knots - 1;
    knots_.resize(n_knots);
    for (int j = 0; j < n_knots; ++j) knots_[j] = lo + (hi - lo) * j / n_int;
    knots_.back() = hi;
    h_.resize(n_int);
    for (int j = 0; j < n_int; ++j) h_[j] = knots_[j + 1] - knots_[j];
    kind == BasisKind::cubic ? setup_natural() : setup_cyclic();
  }

  BasisKind kind() const { return kind_; }
  int dim() const { return k_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  // Knot locations; for the cyclic kind this includes the wrap knot at hi.
  const std::vector<double>& knots() const { return knots_; }

  // Row of basis function values at x. Outside [lo, hi] the cubic kind is
  // extended linearly from the end knots; the cyclic kind wraps.
  Eigen::RowVectorXd evaluate(double x) const {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(k_);
    if (kind_ == BasisKind::cyclic_cubic) {
      const double period = hi_ - lo_;
      x = lo_ + std::fmod(x - lo_, period);
      if (x < lo_) x += period;
      if (x >= hi_) x = lo_;
    } else if (x < lo_ || x > hi_) {
      const bool left = x < lo_;
      const int kn = left ? 0 : k_ - 1;
      row(kn) = 1.0;
      row += (x - knots_[kn]) * slope_row(left);
      return row;
    }
    const int j = interval(x);
    const double h = h_[j];
    const double am = (knots_[j + 1] - x) / h;
    const double ap = (x - knots_[j]) / h;
    const double dm = knots_[j + 1] - x;
    const double dp = x - knots_[j];
    const double cm = (dm * dm * dm / h - h * dm) / 6.0;
    const double cp = (dp * dp * dp / h - h * dp) / 6.0;
    const int j1 = wrap(j + 1);
    row(j) += am;
    row(j1) += ap;
    row += cm * F_.row(j) + cp * F_.row(j1);
    return row;
  }

  Eigen::MatrixXd design(std::span<const double> xs) const {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(xs.size()), k_);
    for (std::size_t i = 0; i < xs.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = evaluate(xs[i]);
    return X;
  }

  // S with beta' S beta = integral of f''(x)^2 over the range (over one period
  // for the cyclic kind).
  const Eigen::MatrixXd& penalty_matrix() const { return S_; }

  // Linear map from beta to f'' at the knots (rows per basis knot).
  const Eigen::MatrixXd& second_derivative_map() const { return F_; }

 private:
  int wrap(int j) const { return kind_ == BasisKind::cyclic_cubic ? j % k_ : j; }

  int interval(double x) const {
    const int n_int = static_cast<int>(h_.size());
    int j = static_cast<int>(std::floor((x - lo_) / (hi_ - lo_) * n_int));
    if (j < 0) j = 0;
    if (j >= n_int) j = n_int - 1;
    while (j > 0 && x < knots_[j]) --j;
    while (j < n_int - 1 && x > knots_[j + 1]) ++j;
    return j;
  }

  // d f / dx at an end knot as a row acting on beta.
  Eigen::RowVectorXd slope_row(bool left) const {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(k_);
    if (left) {
      const double h = h_.front();
      r(0) -= 1.0 / h;
      r(1) += 1.0 / h;
      r -= h * (2.0 * F_.row(0) + F_.row(1)) / 6.0;
    } else {
      const double h = h_.back();
      r(k_ - 2) -= 1.0 / h;
      r(k_ - 1) += 1.0 / h;
      r += h * (F_.row(k_ - 2) + 2.0 * F_.row(k_ - 1)) / 6.0;
    }
    return r;
  }

  void setup_natural() {
    const int m = k_ - 2;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, k_);
    for (int i = 0; i < m; ++i) {
      D(i, i) = 1.0 / h_[i];
      D(i, i + 1) = -1.0 / h_[i] - 1.0 / h_[i + 1];
      D(i, i + 2) = 1.0 / h_[i + 1];
      B(i, i) = (h_[i] + h_[i + 1]) / 3.0;
      if (i + 1 < m) {
        B(i, i + 1) = h_[i + 1] / 6.0;
        B(i + 1, i) = h_[i + 1] / 6.0;
      }
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(B);
    const Eigen::MatrixXd Fm = llt.solve(D);
    F_ = Eigen::MatrixXd::Zero(k_, k_);
    F_.middleRows(1, m) = Fm;
    S_ = D.transpose() * Fm;
    S_ = 0.5 * (S_ + S_.transpose()).eval();
  }

  void setup_cyclic() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k_, k_);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(k_, k_);
    for (int i = 0; i < k_; ++i) {
      const int im = (i + k_ - 1) % k_;
      const int ip = (i + 1) % k_;
      const double hm = h_[im];
      const double hi = h_[i];
      B(i, i) += (hm + hi) / 3.0;
      B(i, im) += hm / 6.0;
      B(i, ip) += hi / 6.0;
      D(i, im) += 1.0 / hm;
      D(i, i) += -1.0 / hm - 1.0 / hi;
      D(i, ip) += 1.0 / hi;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(B);
    F_ = llt.solve(D);
    S_ = D.transpose() * F_;
    S_ = 0.5 * (S_ + S_.transpose()).eval();
  }

  BasisKind kind_;
  double lo_, hi_;
  int k_;
  std::vector<double> knots_;
  std::vector<double> h_;
  Eigen::MatrixXd F_;
  Eigen::MatrixXd S_;
};

inline SplineBasis build_basis(BasisKind kind, double lo, double hi, int k) { return {kind, lo, hi, k}; }

// Null-space basis Z (K x K-1) of the linear constraint c' beta = 0, from a
// Householder QR of c. Reparametrizing beta = Z gamma absorbs the constraint.
inline Eigen::MatrixXd constraint_null_space(const Eigen::VectorXd& c) {
  const Eigen::Index k = c.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  return Q.rightCols(k - 1);
}

// A spline basis with the sum-to-zero constraint sum_i f(x_i) = 0 over a given
// set of points absorbed into the parametrization.
class CenteredBasis {
 public:
  CenteredBasis(SplineBasis basis, std::span<const double> centering_points) : basis_(std::move(basis)) {
    const Eigen::MatrixXd X = basis_.design(centering_points);
    Z_ = constraint_null_space(X.colwise().sum().transpose());
    S_ = Z_.transpose() * basis_.penalty_matrix() * Z_;
    S_ = 0.5 * (S_ + S_.transpose()).eval();
  }

  int dim() const { return static_cast<int>(Z_.cols()); }
  const SplineBasis& raw() const { return basis_; }
  const Eigen::MatrixXd& constraint_map() const { return Z_; }
  const Eigen::MatrixXd& penalty_matrix() const { return S_; }

  Eigen::RowVectorXd evaluate(double x) const { return basis_.evaluate(x) * Z_; }
  Eigen::MatrixXd design(std::span<const double> xs) const { return basis_.design(xs) * Z_; }

 private:
  SplineBasis basis_;
  Eigen::MatrixXd Z_;
  Eigen::MatrixXd S_;
};

}  // namespace epirecon::smooth
