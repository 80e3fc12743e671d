#pragma once

// Band factorizations backed by LAPACK. The assembled beam operators have
// half-bandwidth 3 (two DOFs per node, nearest-neighbour coupling), so every
// solve in the resolvent and time-stepping paths is O(n).

#include <algorithm>
#include <complex>
#include <vector>

#include <complex>
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "errors.hpp"

namespace ebgevrey {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Complex = std::complex<double>;

inline int half_bandwidth(const SparseMatrix& a) {
  int kd = 0;
  for (int j = 0; j < a.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(a, j); it; ++it)
      kd = std::max(kd, static_cast<int>(std::abs(it.row() - it.col())));
  return kd;
}

/// Cholesky factor of a real SPD band matrix (lower band storage).
class BandedCholesky {
 public:
  BandedCholesky() = default;

  explicit BandedCholesky(const SparseMatrix& a) { compute(a); }

  void compute(const SparseMatrix& a) {
    n_ = static_cast<int>(a.rows());
    kd_ = half_bandwidth(a);
    ld_ = kd_ + 1;
    ab_.assign(static_cast<std::size_t>(ld_) * n_, 0.0);
    for (int j = 0; j < a.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(a, j); it; ++it)
        if (it.row() >= it.col()) ab_[(it.row() - it.col()) + static_cast<std::size_t>(it.col()) * ld_] = it.value();
    const lapack_int info = LAPACKE_dpbtrf_work(LAPACK_COL_MAJOR, 'L', n_, kd_, ab_.data(), ld_);
    if (info != 0) throw Error(ErrorCode::cholesky_failure, "band Cholesky failed (matrix not SPD)");
  }

  int size() const { return n_; }

  template <class Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b) const {
    if constexpr (std::is_same_v<Scalar, double>) {
      Eigen::VectorXd x = b;
      LAPACKE_dpbtrs_work(LAPACK_COL_MAJOR, 'L', n_, kd_, 1, ab_.data(), ld_, x.data(), n_);
      return x;
    } else {
      Eigen::MatrixXd parts(n_, 2);
      parts.col(0) = b.real();
      parts.col(1) = b.imag();
      LAPACKE_dpbtrs_work(LAPACK_COL_MAJOR, 'L', n_, kd_, 2, ab_.data(), ld_, parts.data(), n_);
      Eigen::VectorXcd x(n_);
      x.real() = parts.col(0);
      x.imag() = parts.col(1);
      return x;
    }
  }

 private:
  int n_ = 0;
  int kd_ = 0;
  int ld_ = 1;
  std::vector<double> ab_;
};

/// LU with partial pivoting of a complex band matrix sum_k c_k A_k.
class BandedLU {
 public:
  BandedLU() = default;

  /// Factors `sum(coeffs[i] * terms[i])`; all terms share the sparsity band.
  BandedLU(std::initializer_list<std::pair<Complex, const SparseMatrix*>> terms) {
    n_ = 0;
    kl_ = 0;
    for (const auto& t : terms) {
      n_ = static_cast<int>(t.second->rows());
      kl_ = std::max(kl_, half_bandwidth(*t.second));
    }
    ld_ = 2 * kl_ + kl_ + 1;
    ab_.assign(static_cast<std::size_t>(ld_) * n_, Complex(0.0));
    for (const auto& [c, m] : terms) {
      if (c == Complex(0.0)) continue;
      for (int j = 0; j < m->outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(*m, j); it; ++it)
          ab_[(2 * kl_ + it.row() - it.col()) + static_cast<std::size_t>(it.col()) * ld_] += c * it.value();
    }
    // symmetric diagonal equilibration, so the condition estimate measures
    // nearness to singularity rather than the spread of the DOF scales
    scale_.assign(n_, 1.0);
    for (int j = 0; j < n_; ++j) {
      const double d = std::abs(ab_[2 * kl_ + static_cast<std::size_t>(j) * ld_]);
      if (d > 0.0) scale_[j] = 1.0 / std::sqrt(d);
    }
    for (int j = 0; j < n_; ++j)
      for (int i = std::max(0, j - kl_); i <= std::min(n_ - 1, j + kl_); ++i)
        ab_[(2 * kl_ + i - j) + static_cast<std::size_t>(j) * ld_] *= scale_[i] * scale_[j];
    anorm_ = 0.0;
    for (int j = 0; j < n_; ++j) {
      double s = 0.0;
      for (int r = kl_; r < ld_; ++r) s += std::abs(ab_[r + static_cast<std::size_t>(j) * ld_]);
      anorm_ = std::max(anorm_, s);
    }
    ipiv_.resize(n_);
    const lapack_int info = LAPACKE_zgbtrf_work(LAPACK_COL_MAJOR, n_, n_, kl_, kl_, ab_.data(), ld_, ipiv_.data());
    singular_ = info > 0;
  }

  bool exactly_singular() const { return singular_; }

  /// Reciprocal condition number estimate of the equilibrated matrix in the 1-norm.
  double rcond() const {
    if (singular_) return 0.0;
    double rc = 0.0;
    std::vector<Complex> work(2 * static_cast<std::size_t>(n_));
    std::vector<double> rwork(n_);
    LAPACKE_zgbcon_work(LAPACK_COL_MAJOR, '1', n_, kl_, kl_, ab_.data(), ld_, ipiv_.data(), anorm_, &rc,
                        work.data(), rwork.data());
    return rc;
  }

  /// Solves A x = b ('N') or A^H x = b ('C').
  Eigen::VectorXcd solve(const Eigen::VectorXcd& b, char trans = 'N') const {
    Eigen::VectorXcd x(n_);
    for (int i = 0; i < n_; ++i) x[i] = b[i] * scale_[i];
    LAPACKE_zgbtrs_work(LAPACK_COL_MAJOR, trans, n_, kl_, kl_, 1, ab_.data(), ld_, ipiv_.data(), x.data(), n_);
    for (int i = 0; i < n_; ++i) x[i] *= scale_[i];
    return x;
  }

  int size() const { return n_; }

 private:
  int n_ = 0;
  int kl_ = 0;
  int ld_ = 1;
  double anorm_ = 0.0;
  bool singular_ = false;
  std::vector<Complex> ab_;
  std::vector<double> scale_;
  std::vector<lapack_int> ipiv_;
};

}  // namespace ebgevrey
